#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "linefollow/image.hpp"

namespace linefollow {

inline constexpr int kDefaultQuantLevels = 10;
inline constexpr int kDefaultNoiseMinRun = 2;
inline constexpr int kDefaultMinRegionPixels = 20;
inline constexpr int kDefaultMaxRegions = 135;

struct HsLevel {
  int h = 0;
  int s = 0;
  friend bool operator==(const HsLevel&, const HsLevel&) = default;
};

HsLevel quantize(const HsvPixel& p, int q_levels);

/// Learned hue/saturation thresholds, in quantized levels.
///
/// lower_hue > upper_hue denotes a hue range that wraps through 0 degrees,
/// i.e. [lower_hue, q-1] together with [0, upper_hue].
struct ColorSignature {
  int id = 1;
  int lower_hue = 0;
  int upper_hue = 0;
  int lower_sat = 0;
  int upper_sat = 0;
  int q_levels = kDefaultQuantLevels;

  bool wraps() const { return lower_hue > upper_hue; }
  void validate() const;
  friend bool operator==(const ColorSignature&, const ColorSignature&) = default;
};

/// Per-channel boolean level tables; membership is hclass[h] AND sclass[s].
struct ClassMatrix {
  std::vector<std::uint8_t> hclass;
  std::vector<std::uint8_t> sclass;

  int levels() const { return static_cast<int>(hclass.size()); }
  bool contains(int h_level, int s_level) const { return hclass[h_level] & sclass[s_level]; }
};

ClassMatrix build_class_matrix(const ColorSignature& sig);

bool membership(const ClassMatrix& m, int h_level, int s_level);

/// Box in pixel coordinates; x,y is the top-left corner.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

/// Hue/saturation extent of the pixels inside `rect`. Unsaturated pixels
/// (s level 0) are ignored; a rect with no saturated pixel is an error.
ColorSignature learn_signature(const PixelBuffer& image, const Rect& rect, int q_levels = kDefaultQuantLevels,
                               int id = 1);

/// Signature that matches exactly one colour.
ColorSignature signature_for_color(const Rgb& color, int id = 1, int q_levels = kDefaultQuantLevels);

struct RegionReport {
  int signature = 0;
  int x_center = 0;
  int y_center = 0;
  int width = 0;
  int height = 0;
  std::uint64_t pixel_count = 0;
  int left = 0;  // box top-left corner
  int top = 0;

  friend bool operator==(const RegionReport&, const RegionReport&) = default;
};

struct TrackerConfig {
  int noise_min_run = kDefaultNoiseMinRun;
  int min_region_pixels = kDefaultMinRegionPixels;
  int max_regions = kDefaultMaxRegions;
};

/// Single-pass delimiting-box tracker.
///
/// Rows arrive top to bottom as per-pixel signature bitmasks (bit i set when
/// the pixel belongs to signature slot i). Member runs shorter than
/// noise_min_run are dropped; surviving runs join any same-slot run of the
/// previous row they overlap horizontally. State between rows is the
/// previous row's runs plus the regions they touch, so memory is
/// O(width + active regions). Regions whose last run has ended are
/// finalised immediately.
class StreamTracker {
 public:
  StreamTracker(int width, std::vector<int> slot_ids, TrackerConfig cfg = {});

  void push_row(std::span<const std::uint8_t> slot_mask);

  /// Closes the frame and returns regions biggest first.
  std::vector<RegionReport> finish();

  int rows_consumed() const { return row_; }
  std::size_t live_region_slots() const { return regions_.size() - free_.size(); }

 private:
  struct Run {
    int x0;
    int x1;  // inclusive
    int region;
  };
  struct Region {
    int parent;
    int slot;
    int x_min, x_max, y_min, y_max;
    std::uint64_t count, sum_x, sum_y;
    bool alive;
  };

  int find(int r);
  int unite(int a, int b);
  int new_region(int slot, const Run& run);
  void extend(int region, const Run& run);
  void emit(const Region& r);
  void retire_row();

  int width_;
  std::vector<int> slot_ids_;
  TrackerConfig cfg_;
  int row_ = 0;
  bool finished_ = false;
  std::vector<std::vector<Run>> prev_;  // per slot
  std::vector<std::vector<Run>> cur_;
  std::vector<Region> regions_;
  std::vector<int> free_;
  std::vector<RegionReport> done_;
};

/// Per-pixel signature bitmask for one RGB row.
void classify_row(std::span<const std::uint8_t> rgb_row, std::span<const ClassMatrix> matrices,
                  std::span<std::uint8_t> out);

std::vector<RegionReport> track_frame(const PixelBuffer& image, std::span<const ColorSignature> sigs,
                                      const TrackerConfig& cfg = {});

/// Whole-frame membership mask (1 where any signature matches).
PixelBuffer membership_mask(const PixelBuffer& image, std::span<const ColorSignature> sigs);

/// Biggest first; equal counts ordered by box top, then box left.
void sort_regions(std::vector<RegionReport>& regions);

// Signature file: `id lower_hue upper_hue lower_sat upper_sat q_levels` per line.
std::vector<ColorSignature> parse_signatures(const std::string& text);
std::vector<ColorSignature> load_signatures(const std::filesystem::path& path);
std::string format_signature(const ColorSignature& sig);
void append_signature(const std::filesystem::path& path, const ColorSignature& sig);

/// `signature x_center y_center width height pixel_count`
std::string format_region(const RegionReport& r);

}  // namespace linefollow
