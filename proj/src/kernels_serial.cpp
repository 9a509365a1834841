#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "skyfuse/kernels.hpp"

namespace skyfuse::kernels::serial {

void scan_columns(const BinaryMask& mask, std::span<const int> columns,
                  std::span<const double> predicted_rows, int window, std::span<int> rows_out) {
  const double none = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const double predicted = predicted_rows.empty() ? none : predicted_rows[i];
    rows_out[i] = detail::scan_one(mask, columns[i], predicted, window);
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
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double d2 = manifold_distance_sq(RollPitch{roll[i], pitch[i]}, target);
    weights[i] *= std::exp(-d2 * inv);
  }
}

}  // namespace skyfuse::kernels::serial
