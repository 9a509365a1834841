#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <vector>

#include "skyfuse/kernels.hpp"

#if defined(SKYFUSE_HAVE_OPENMP) && defined(_OPENMP)
#include <omp.h>
#define SKYFUSE_OMP_FOR _Pragma("omp parallel for schedule(static)")
#define SKYFUSE_OMP_FOR_IF(n) _Pragma("omp parallel for schedule(static) if (n)")
#else
#define SKYFUSE_OMP_FOR
#define SKYFUSE_OMP_FOR_IF(n)
#endif

namespace skyfuse::kernels {

namespace {
// Below this many elements the fork/join cost dominates the loop body.
constexpr std::int64_t kMinParallelParticles = 4096;
}  // namespace

int max_threads() noexcept {
#if defined(SKYFUSE_HAVE_OPENMP) && defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace parallel {

void scan_columns(const BinaryMask& mask, std::span<const int> columns,
                  std::span<const double> predicted_rows, int window, std::span<int> rows_out) {
  const double none = std::numeric_limits<double>::quiet_NaN();
  const auto n = static_cast<std::int64_t>(columns.size());
  const bool predicted = !predicted_rows.empty();
  SKYFUSE_OMP_FOR
  for (std::int64_t i = 0; i < n; ++i) {
    rows_out[i] = detail::scan_one(mask, columns[i], predicted ? predicted_rows[i] : none, window);
  }
}

void render_boundary(std::span<const double> boundary_rows, BinaryMask& mask) {
  const int width = mask.width();
  const int height = mask.height();
  std::vector<std::int32_t> first(static_cast<std::size_t>(width));
  detail::first_ground_rows(boundary_rows.first(static_cast<std::size_t>(width)), height, first);
  std::uint8_t* data = mask.data().data();
  const auto [lo, hi] = std::minmax_element(first.begin(), first.end());
  const std::int32_t all_ground_from = width > 0 ? *hi : 0;
  const std::int32_t any_ground_from = width > 0 ? *lo : 0;
  SKYFUSE_OMP_FOR
  for (int row = 0; row < height; ++row) {
    std::uint8_t* line = data + static_cast<std::size_t>(row) * width;
    if (row < any_ground_from) {
      std::memset(line, kSky, static_cast<std::size_t>(width));
    } else if (row >= all_ground_from) {
      std::memset(line, kGround, static_cast<std::size_t>(width));
    } else {
      detail::render_row(first.data(), width, row, line);
    }
  }
}

void reweight(std::span<const double> roll, std::span<const double> pitch, RollPitch target,
              double variance, std::span<double> weights) {
  const double inv = 0.5 / variance;
  const auto n = static_cast<std::int64_t>(weights.size());
  SKYFUSE_OMP_FOR_IF(n >= kMinParallelParticles)
  for (std::int64_t i = 0; i < n; ++i) {
    const double d2 = manifold_distance_sq(RollPitch{roll[i], pitch[i]}, target);
    weights[i] *= std::exp(-d2 * inv);
  }
}

}  // namespace parallel
}  // namespace skyfuse::kernels
