#include "linefollow/control.hpp"

#include <cmath>

namespace linefollow {

const char* to_string(StepCommand c) {
  switch (c) {
    case StepCommand::Forward: return "FORWARD";
    case StepCommand::Left: return "LEFT";
    case StepCommand::Right: return "RIGHT";
    case StepCommand::Stop: return "STOP";
  }
  return "?";
}

void DecisionConfig::validate() const {
  if (!(0.0 < left_frac && left_frac < right_frac && right_frac < 1.0)) {
    throw ContractError("DecisionConfig: require 0 < left_frac < right_frac < 1");
  }
  if (!(0.0 < scan_row_frac && scan_row_frac < 1.0)) {
    throw ContractError("DecisionConfig: require 0 < scan_row_frac < 1");
  }
}

std::optional<int> line_center(const PixelBuffer& binary, int row) {
  require_format(binary, PixelFormat::BINARY, "line_center");
  if (row < 0 || row >= binary.height()) throw ContractError("line_center: row out of bounds");
  const auto px = binary.row(row);
  long long sum = 0, count = 0;
  for (int x = 0; x < binary.width(); ++x) {
    if (px[x]) {
      sum += x;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return static_cast<int>(sum / count);
}

int scan_row(int height, const DecisionConfig& cfg) {
  if (height < 6) throw ContractError("scan_row: height must be >= 6");
  cfg.validate();
  // Small slack so exact fractions such as 240/6 do not round down.
  return static_cast<int>(std::floor(height * cfg.scan_row_frac + 1e-9));
}

StepCommand decide(std::optional<int> x_center, int width, const DecisionConfig& cfg) {
  if (!x_center) return StepCommand::Stop;
  const auto left = std::lround(width * cfg.left_frac);
  const auto right = std::lround(width * cfg.right_frac);
  if (*x_center <= left) return StepCommand::Left;
  if (*x_center <= right) return StepCommand::Forward;
  return StepCommand::Right;
}

StepCommand decide_from_regions(std::span<const RegionReport> regions, int width, const DecisionConfig& cfg) {
  if (regions.empty()) return StepCommand::Stop;
  return decide(regions.front().x_center, width, cfg);
}

}  // namespace linefollow
