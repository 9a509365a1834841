#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace skyfuse {

inline constexpr std::uint8_t kGround = 0;
inline constexpr std::uint8_t kSky = 255;

/// Row-major binary segmentation: 0 = ground, 255 = sky.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, std::uint8_t fill = kSky);
  /// Takes ownership of `data`; throws kMaskFormat on size mismatch or a value
  /// other than 0/255.
  BinaryMask(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::uint8_t at(int col, int row) const noexcept {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  void set(int col, int row, std::uint8_t value) noexcept {
    data_[static_cast<std::size_t>(row) * width_ + col] = value;
  }
  bool is_ground(int col, int row) const noexcept { return at(col, row) == kGround; }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Binary PGM (P5, maxval 255).
void write_pgm(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask read_pgm(const std::filesystem::path& path);

}  // namespace skyfuse
