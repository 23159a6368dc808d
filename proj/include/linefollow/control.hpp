#pragma once

#include <optional>
#include <span>

#include "linefollow/colortrack.hpp"
#include "linefollow/image.hpp"

namespace linefollow {

enum class StepCommand : std::uint8_t { Forward, Left, Right, Stop };

const char* to_string(StepCommand c);

/// Band limits as fractions of image width; the defaults reproduce the
/// 130/170 limits on a 400-pixel axis.
struct DecisionConfig {
  double left_frac = 130.0 / 400.0;
  double right_frac = 170.0 / 400.0;
  double scan_row_frac = 1.0 / 6.0;

  void validate() const;
};

/// Floor of the mean x of foreground pixels in `row`; empty when the row
/// has none.
std::optional<int> line_center(const PixelBuffer& binary, int row);

/// Row index measured from the top edge.
int scan_row(int height, const DecisionConfig& cfg = {});

/// x <= L -> Left, L < x <= R -> Forward, x > R -> Right, no line -> Stop,
/// with L = round(width * left_frac) and R = round(width * right_frac).
StepCommand decide(std::optional<int> x_center, int width, const DecisionConfig& cfg = {});

/// Steers on the first (biggest) region.
StepCommand decide_from_regions(std::span<const RegionReport> regions, int width, const DecisionConfig& cfg = {});

}  // namespace linefollow
