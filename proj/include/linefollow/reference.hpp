#pragma once

// Serial reference versions of the OpenMP pixel kernels. Kept plain and
// loop-ordered so tests can check the parallel kernels against them and
// the benchmark can compare the two.

#include <span>

#include "linefollow/colortrack.hpp"
#include "linefollow/image.hpp"
#include "linefollow/segmentation.hpp"

namespace linefollow::reference {

PixelBuffer rgb_to_gray(const PixelBuffer& rgb);
Histogram histogram(const PixelBuffer& gray);
PixelBuffer apply_threshold(const PixelBuffer& gray, int t, std::uint8_t below, std::uint8_t above);
PixelBuffer rule_segment(const PixelBuffer& rgb, const ThresholdRule& rule);
PixelBuffer membership_mask(const PixelBuffer& image, std::span<const ColorSignature> sigs);

}  // namespace linefollow::reference
