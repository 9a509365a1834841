#pragma once

// Data-parallel inner loops of the pipeline. Every kernel exists twice:
// `serial` is the reference implementation, `parallel` is the OpenMP build of
// the same loop. Both produce bit-identical output (no reductions happen inside
// the parallel regions), which tests/test_kernels.cpp checks directly.

#include <cmath>
#include <cstdint>
#include <span>

#include "skyfuse/geometry.hpp"
#include "skyfuse/mask.hpp"

namespace skyfuse::kernels {

inline constexpr int kNoTransition = -1;

namespace serial {

/// For each column in `columns`, the row of a sky-to-ground transition (a ground
/// pixel directly below a sky pixel). With an empty `predicted_rows` the topmost
/// transition is returned; otherwise the one closest to the predicted row,
/// searched within +-window rows first and over the full column as fallback.
/// Columns without a transition yield kNoTransition.
void scan_columns(const BinaryMask& mask, std::span<const int> columns,
                  std::span<const double> predicted_rows, int window, std::span<int> rows_out);

/// Pixel (u, v) becomes ground iff v >= boundary_rows[u].
void render_boundary(std::span<const double> boundary_rows, BinaryMask& mask);

/// weights[i] *= exp(-d^2 / (2 variance)), d the manifold distance from
/// (roll[i], pitch[i]) to `target`.
void reweight(std::span<const double> roll, std::span<const double> pitch, RollPitch target,
              double variance, std::span<double> weights);

}  // namespace serial

namespace parallel {

void scan_columns(const BinaryMask& mask, std::span<const int> columns,
                  std::span<const double> predicted_rows, int window, std::span<int> rows_out);

void render_boundary(std::span<const double> boundary_rows, BinaryMask& mask);

void reweight(std::span<const double> roll, std::span<const double> pitch, RollPitch target,
              double variance, std::span<double> weights);

}  // namespace parallel

/// Number of threads the parallel kernels will use (1 without OpenMP).
int max_threads() noexcept;

namespace detail {

inline bool is_transition(const BinaryMask& mask, int col, int row) noexcept {
  return row > 0 && mask.at(col, row) == kGround && mask.at(col, row - 1) == kSky;
}

inline int topmost_transition(const BinaryMask& mask, int col) noexcept {
  for (int row = 1; row < mask.height(); ++row) {
    if (is_transition(mask, col, row)) return row;
  }
  return kNoTransition;
}

inline int nearest_in_range(const BinaryMask& mask, int col, double target, int lo, int hi) noexcept {
  int best = kNoTransition;
  double best_dist = 0.0;
  for (int row = lo; row <= hi; ++row) {
    if (!is_transition(mask, col, row)) continue;
    const double dist = row > target ? row - target : target - row;
    if (best == kNoTransition || dist < best_dist) {
      best = row;
      best_dist = dist;
    }
  }
  return best;
}

// First ground row of each column: row >= b iff row >= ceil(b). NaN renders
// the whole column as sky.
inline void first_ground_rows(std::span<const double> boundary_rows, int height,
                              std::span<std::int32_t> out) noexcept {
  for (std::size_t i = 0; i < boundary_rows.size(); ++i) {
    const double b = boundary_rows[i];
    if (!(b == b) || b > height) {
      out[i] = height;
    } else if (b < 0.0) {
      out[i] = 0;
    } else {
      out[i] = static_cast<std::int32_t>(std::ceil(b));
    }
  }
}

inline void render_row(const std::int32_t* first_ground, int width, std::int32_t row,
                       std::uint8_t* line) noexcept {
  for (int col = 0; col < width; ++col) line[col] = row >= first_ground[col] ? kGround : kSky;
}

inline int scan_one(const BinaryMask& mask, int col, double predicted, int window) noexcept {
  if (col < 0 || col >= mask.width()) return kNoTransition;
  if (!(predicted == predicted)) return topmost_transition(mask, col);  // NaN: no prediction
  const int last = mask.height() - 1;
  if (window > 0) {
    const double lo_d = predicted - window;
    const double hi_d = predicted + window;
    const int lo = lo_d < 1.0 ? 1 : (lo_d > last ? last + 1 : static_cast<int>(lo_d));
    const int hi = hi_d > last ? last : (hi_d < 0.0 ? -1 : static_cast<int>(hi_d + 1.0));
    if (lo <= hi) {
      const int row = nearest_in_range(mask, col, predicted, lo, hi);
      if (row != kNoTransition) return row;
    }
  }
  return nearest_in_range(mask, col, predicted, 1, last);
}

}  // namespace detail

}  // namespace skyfuse::kernels
