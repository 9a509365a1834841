#include "skyfuse/mask.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

#include "skyfuse/error.hpp"

namespace skyfuse {

BinaryMask::BinaryMask(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kMaskFormat, "mask dimensions must be positive");
  }
  if (fill != kGround && fill != kSky) {
    throw Error(ErrorCode::kMaskFormat, "mask fill must be 0 or 255");
  }
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kMaskFormat, "mask dimensions must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kMaskFormat, "mask data length does not match width*height");
  }
  const bool binary = std::all_of(data_.begin(), data_.end(),
                                  [](std::uint8_t v) { return v == kGround || v == kSky; });
  if (!binary) {
    throw Error(ErrorCode::kMaskFormat, "mask contains values other than 0 and 255");
  }
}

void write_pgm(const std::filesystem::path& path, const BinaryMask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kScenarioError, "cannot write " + path.string());
  out << "P5\n" << mask.width() << ' ' << mask.height() << "\n255\n";
  const auto bytes = mask.data();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kScenarioError, "short write to " + path.string());
}

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token;
}

int header_int(std::istream& in, const std::filesystem::path& path, const char* what) {
  const std::string token = header_token(in);
  try {
    std::size_t used = 0;
    const int value = std::stoi(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return value;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kMaskFormat, path.string() + ": bad " + what + " '" + token + "'");
  }
}

}  // namespace

BinaryMask read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMaskFormat, "cannot open " + path.string());
  if (header_token(in) != "P5") {
    throw Error(ErrorCode::kMaskFormat, path.string() + ": not a binary PGM (P5)");
  }
  const int width = header_int(in, path, "width");
  const int height = header_int(in, path, "height");
  const int maxval = header_int(in, path, "maxval");
  if (maxval != 255) {
    throw Error(ErrorCode::kMaskFormat, path.string() + ": maxval must be 255");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kMaskFormat, path.string() + ": bad dimensions");
  }
  std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (in.gcount() != static_cast<std::streamsize>(data.size())) {
    throw Error(ErrorCode::kMaskFormat, path.string() + ": truncated pixel data");
  }
  try {
    return BinaryMask(width, height, std::move(data));
  } catch (const Error& e) {
    throw Error(ErrorCode::kMaskFormat, path.string() + ": " + e.what());
  }
}

}  // namespace skyfuse
