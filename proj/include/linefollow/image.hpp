#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace linefollow {

/// Raised when an operation is called with arguments outside its contract
/// (wrong pixel format, out-of-range row, empty input).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed text or binary input (image headers, rule text, track files).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PixelFormat : std::uint8_t { RGB8, GRAY8, BINARY };

constexpr int channels(PixelFormat f) { return f == PixelFormat::RGB8 ? 3 : 1; }

const char* to_string(PixelFormat f);

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major raster with origin at the top-left corner.
///
/// A buffer is immutable once constructed; kernels build a fresh pixel
/// vector and hand it over. BINARY buffers hold only 0 and 1.
class PixelBuffer {
 public:
  PixelBuffer(int width, int height, PixelFormat format, std::vector<std::uint8_t> data);

  /// Buffer of the given shape filled with `fill` in every channel.
  static PixelBuffer filled(int width, int height, PixelFormat format, std::uint8_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  PixelFormat format() const { return format_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<const std::uint8_t> row(int y) const;

  std::uint8_t at(int x, int y) const;  // single-channel formats
  Rgb rgb(int x, int y) const;          // RGB8 only

  friend bool operator==(const PixelBuffer&, const PixelBuffer&) = default;

 private:
  int width_;
  int height_;
  PixelFormat format_;
  std::vector<std::uint8_t> data_;
};

void require_format(const PixelBuffer& buf, PixelFormat expected, const char* op);

struct HsvPixel {
  double h = 0.0;  // degrees, [0, 360)
  double s = 0.0;  // [0, 1]
  double v = 0.0;  // [0, 1]
};

/// Binary PGM (P5) or PPM (P6) with maxval 255. Comments after the magic
/// token are skipped. A P5 file whose header carries the `# binary` comment
/// and only {0,255} samples loads back as BINARY.
PixelBuffer load_image(const std::filesystem::path& path);
PixelBuffer decode_netpbm(std::span<const std::uint8_t> bytes);

void save_image(const PixelBuffer& buffer, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_netpbm(const PixelBuffer& buffer);

/// Integer luma: round((299 R + 587 G + 114 B) / 1000).
constexpr std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

PixelBuffer rgb_to_gray(const PixelBuffer& rgb);

/// Hexcone conversion. Gray inputs (s == 0) report h = 0.
HsvPixel rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);
Rgb hsv_to_rgb(const HsvPixel& p);

}  // namespace linefollow
