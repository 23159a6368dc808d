#include "linefollow/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace linefollow {

const char* to_string(PixelFormat f) {
  switch (f) {
    case PixelFormat::RGB8: return "RGB8";
    case PixelFormat::GRAY8: return "GRAY8";
    case PixelFormat::BINARY: return "BINARY";
  }
  return "?";
}

PixelBuffer::PixelBuffer(int width, int height, PixelFormat format, std::vector<std::uint8_t> data)
    : width_(width), height_(height), format_(format), data_(std::move(data)) {
  if (width <= 0 || height <= 0) {
    throw ContractError("PixelBuffer: dimensions must be positive");
  }
  const std::size_t expected = pixel_count() * channels(format);
  if (data_.size() != expected) {
    throw ContractError("PixelBuffer: data length " + std::to_string(data_.size()) + " != " +
                        std::to_string(expected));
  }
  if (format == PixelFormat::BINARY &&
      std::any_of(data_.begin(), data_.end(), [](std::uint8_t v) { return v > 1; })) {
    throw ContractError("PixelBuffer: BINARY pixels must be 0 or 1");
  }
}

PixelBuffer PixelBuffer::filled(int width, int height, PixelFormat format, std::uint8_t fill) {
  if (width <= 0 || height <= 0) {
    throw ContractError("PixelBuffer: dimensions must be positive");
  }
  const std::size_t n = static_cast<std::size_t>(width) * height * channels(format);
  return PixelBuffer(width, height, format, std::vector<std::uint8_t>(n, fill));
}

std::span<const std::uint8_t> PixelBuffer::row(int y) const {
  if (y < 0 || y >= height_) throw ContractError("PixelBuffer::row: row out of bounds");
  const std::size_t stride = static_cast<std::size_t>(width_) * channels(format_);
  return std::span<const std::uint8_t>(data_).subspan(y * stride, stride);
}

std::uint8_t PixelBuffer::at(int x, int y) const {
  if (format_ == PixelFormat::RGB8) throw ContractError("PixelBuffer::at: RGB8 buffer");
  return data_[static_cast<std::size_t>(y) * width_ + x];
}

Rgb PixelBuffer::rgb(int x, int y) const {
  if (format_ != PixelFormat::RGB8) throw ContractError("PixelBuffer::rgb: not RGB8");
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  return {data_[i], data_[i + 1], data_[i + 2]};
}

void require_format(const PixelBuffer& buf, PixelFormat expected, const char* op) {
  if (buf.format() != expected) {
    throw ContractError(std::string(op) + ": expected " + to_string(expected) + " input, got " +
                        to_string(buf.format()));
  }
}

// ---------------------------------------------------------------------------
// Netpbm

namespace {

constexpr const char* kBinaryTag = "binary";

class HeaderReader {
 public:
  HeaderReader(std::span<const std::uint8_t> bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

  std::size_t offset() const { return pos_; }
  bool saw_binary_tag() const { return binary_tag_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("netpbm: " + what + " at byte offset " + std::to_string(pos_));
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        const std::size_t start = ++pos_;
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
        std::string text(bytes_.begin() + start, bytes_.begin() + pos_);
        text.erase(0, text.find_first_not_of(" \t\r"));
        text.erase(text.find_last_not_of(" \t\r") + 1);
        if (text == kBinaryTag) binary_tag_ = true;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  int read_uint(const char* field) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) fail(std::string("missing ") + field);
    if (!std::isdigit(bytes_[pos_])) fail(std::string("expected digit for ") + field);
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) fail(std::string(field) + " too large");
      ++pos_;
    }
    return static_cast<int>(value);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void consume_raster_separator() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("expected whitespace before raster");
    ++pos_;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
  bool binary_tag_ = false;
};

}  // namespace

PixelBuffer decode_netpbm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw ParseError("netpbm: expected P5 or P6 magic at byte offset 0");
  }
  const bool color = bytes[1] == '6';
  HeaderReader body(bytes, 2);
  const int width = body.read_uint("width");
  const int height = body.read_uint("height");
  if (width <= 0 || height <= 0) {
    throw ParseError("netpbm: zero dimension at byte offset " +
                     std::to_string(body.offset()));
  }
  const int maxval = body.read_uint("maxval");
  if (maxval != 255) {
    throw ParseError("netpbm: unsupported maxval " + std::to_string(maxval) + " at byte offset " +
                     std::to_string(body.offset()));
  }
  body.consume_raster_separator();
  const std::size_t start = body.offset();
  const std::size_t need = static_cast<std::size_t>(width) * height * (color ? 3 : 1);
  if (bytes.size() - start < need) {
    throw ParseError("netpbm: truncated raster, expected " + std::to_string(need) + " bytes at byte offset " +
                     std::to_string(start) + ", found " + std::to_string(bytes.size() - start));
  }
  std::vector<std::uint8_t> data(bytes.begin() + start, bytes.begin() + start + need);
  if (color) return PixelBuffer(width, height, PixelFormat::RGB8, std::move(data));

  if (body.saw_binary_tag() &&
      std::all_of(data.begin(), data.end(), [](std::uint8_t v) { return v == 0 || v == 255; })) {
    for (auto& v : data) v = v ? 1 : 0;
    return PixelBuffer(width, height, PixelFormat::BINARY, std::move(data));
  }
  return PixelBuffer(width, height, PixelFormat::GRAY8, std::move(data));
}

PixelBuffer load_image(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return decode_netpbm(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_netpbm(const PixelBuffer& buffer) {
  std::ostringstream header;
  const bool color = buffer.format() == PixelFormat::RGB8;
  header << (color ? "P6" : "P5") << '\n';
  if (buffer.format() == PixelFormat::BINARY) header << "# " << kBinaryTag << '\n';
  header << buffer.width() << ' ' << buffer.height() << '\n' << 255 << '\n';
  const std::string h = header.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  const auto data = buffer.data();
  if (buffer.format() == PixelFormat::BINARY) {
    std::transform(data.begin(), data.end(), std::back_inserter(out),
                   [](std::uint8_t v) -> std::uint8_t { return v ? 255 : 0; });
  } else {
    out.insert(out.end(), data.begin(), data.end());
  }
  return out;
}

void save_image(const PixelBuffer& buffer, const std::filesystem::path& path) {
  const auto bytes = encode_netpbm(buffer);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Color

PixelBuffer rgb_to_gray(const PixelBuffer& rgb) {
  require_format(rgb, PixelFormat::RGB8, "rgb_to_gray");
  const auto src = rgb.data();
  const auto n = static_cast<std::ptrdiff_t>(rgb.pixel_count());
  std::vector<std::uint8_t> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = luma(src[3 * i], src[3 * i + 1], src[3 * i + 2]);
  }
  return PixelBuffer(rgb.width(), rgb.height(), PixelFormat::GRAY8, std::move(out));
}

HsvPixel rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const int mx = std::max({r, g, b});
  const int mn = std::min({r, g, b});
  const int delta = mx - mn;
  HsvPixel p;
  p.v = mx / 255.0;
  if (mx == 0 || delta == 0) return p;
  p.s = static_cast<double>(delta) / mx;
  double h;
  if (mx == r) {
    h = 60.0 * static_cast<double>(g - b) / delta;
  } else if (mx == g) {
    h = 60.0 * (2.0 + static_cast<double>(b - r) / delta);
  } else {
    h = 60.0 * (4.0 + static_cast<double>(r - g) / delta);
  }
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  p.h = h;
  return p;
}

Rgb hsv_to_rgb(const HsvPixel& p) {
  const double c = p.v * p.s;
  const double hp = std::fmod(p.h, 360.0) / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r1 = 0, g1 = 0, b1 = 0;
  switch (static_cast<int>(hp)) {
    case 0: r1 = c; g1 = x; break;
    case 1: r1 = x; g1 = c; break;
    case 2: g1 = c; b1 = x; break;
    case 3: g1 = x; b1 = c; break;
    case 4: r1 = x; b1 = c; break;
    default: r1 = c; b1 = x; break;
  }
  const double m = p.v - c;
  auto level = [m](double ch) {
    return static_cast<std::uint8_t>(std::clamp(std::lround((ch + m) * 255.0), 0L, 255L));
  };
  return {level(r1), level(g1), level(b1)};
}

}  // namespace linefollow
