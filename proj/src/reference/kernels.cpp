#include "linefollow/reference.hpp"

namespace linefollow::reference {

PixelBuffer rgb_to_gray(const PixelBuffer& rgb) {
  require_format(rgb, PixelFormat::RGB8, "rgb_to_gray");
  std::vector<std::uint8_t> out;
  out.reserve(rgb.pixel_count());
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      const auto c = rgb.rgb(x, y);
      out.push_back(luma(c.r, c.g, c.b));
    }
  }
  return PixelBuffer(rgb.width(), rgb.height(), PixelFormat::GRAY8, std::move(out));
}

Histogram histogram(const PixelBuffer& gray) {
  require_format(gray, PixelFormat::GRAY8, "histogram");
  Histogram h;
  for (auto v : gray.data()) ++h.counts[v];
  h.total = gray.pixel_count();
  return h;
}

PixelBuffer apply_threshold(const PixelBuffer& gray, int t, std::uint8_t below, std::uint8_t above) {
  require_format(gray, PixelFormat::GRAY8, "apply_threshold");
  std::vector<std::uint8_t> out;
  out.reserve(gray.pixel_count());
  for (auto v : gray.data()) out.push_back(v <= t ? below : above);
  return PixelBuffer(gray.width(), gray.height(), PixelFormat::BINARY, std::move(out));
}

PixelBuffer rule_segment(const PixelBuffer& rgb, const ThresholdRule& rule) {
  require_format(rgb, PixelFormat::RGB8, "rule_segment");
  std::vector<std::uint8_t> out;
  out.reserve(rgb.pixel_count());
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      const auto c = rgb.rgb(x, y);
      out.push_back(rule_classify(c.r, c.g, c.b, rule) ? 1 : 0);
    }
  }
  return PixelBuffer(rgb.width(), rgb.height(), PixelFormat::BINARY, std::move(out));
}

// Uses the four-comparison form directly instead of the class tables.
PixelBuffer membership_mask(const PixelBuffer& image, std::span<const ColorSignature> sigs) {
  require_format(image, PixelFormat::RGB8, "membership_mask");
  std::vector<std::uint8_t> out;
  out.reserve(image.pixel_count());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const auto c = image.rgb(x, y);
      const auto hsv = rgb_to_hsv(c.r, c.g, c.b);
      bool hit = false;
      for (const auto& s : sigs) {
        const auto lv = quantize(hsv, s.q_levels);
        const bool hue = s.wraps() ? (lv.h >= s.lower_hue || lv.h <= s.upper_hue)
                                   : (lv.h >= s.lower_hue && lv.h <= s.upper_hue);
        hit = hit || (hue && lv.s >= s.lower_sat && lv.s <= s.upper_sat);
      }
      out.push_back(hit ? 1 : 0);
    }
  }
  return PixelBuffer(image.width(), image.height(), PixelFormat::BINARY, std::move(out));
}

}  // namespace linefollow::reference
