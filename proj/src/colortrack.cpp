#include "linefollow/colortrack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace linefollow {

HsLevel quantize(const HsvPixel& p, int q_levels) {
  if (q_levels < 2) throw ContractError("quantize: q_levels must be >= 2");
  const int top = q_levels - 1;
  const int h = static_cast<int>(std::floor(p.h / 360.0 * q_levels));
  const int s = static_cast<int>(std::floor(p.s * q_levels));
  return {std::clamp(h, 0, top), std::clamp(s, 0, top)};
}

void ColorSignature::validate() const {
  auto in_range = [this](int v) { return v >= 0 && v < q_levels; };
  if (id < 1 || id > 7) throw ContractError("signature id must be in 1..7");
  if (q_levels < 2) throw ContractError("signature q_levels must be >= 2");
  if (!in_range(lower_hue) || !in_range(upper_hue) || !in_range(lower_sat) || !in_range(upper_sat)) {
    throw ContractError("signature thresholds must lie in [0, q_levels)");
  }
  if (lower_sat > upper_sat) throw ContractError("signature lower_sat > upper_sat");
}

ClassMatrix build_class_matrix(const ColorSignature& sig) {
  sig.validate();
  ClassMatrix m;
  m.hclass.assign(sig.q_levels, 0);
  m.sclass.assign(sig.q_levels, 0);
  for (int i = 0; i < sig.q_levels; ++i) {
    // A wrapped hue range is the OR of [lower, q-1] and [0, upper].
    const bool hue = sig.wraps() ? (i >= sig.lower_hue || i <= sig.upper_hue)
                                 : (i >= sig.lower_hue && i <= sig.upper_hue);
    m.hclass[i] = hue;
    m.sclass[i] = i >= sig.lower_sat && i <= sig.upper_sat;
  }
  return m;
}

bool membership(const ClassMatrix& m, int h_level, int s_level) {
  if (h_level < 0 || s_level < 0 || h_level >= m.levels() || s_level >= m.levels()) {
    throw ContractError("membership: level out of range");
  }
  return m.contains(h_level, s_level);
}

ColorSignature learn_signature(const PixelBuffer& image, const Rect& rect, int q_levels, int id) {
  require_format(image, PixelFormat::RGB8, "learn_signature");
  if (rect.w <= 0 || rect.h <= 0) throw ContractError("learn_signature: empty rect");
  if (rect.x < 0 || rect.y < 0 || rect.x + rect.w > image.width() || rect.y + rect.h > image.height()) {
    throw ContractError("learn_signature: rect outside image");
  }
  std::vector<std::uint8_t> hue_seen(q_levels, 0);
  int sat_lo = q_levels, sat_hi = -1;
  for (int y = rect.y; y < rect.y + rect.h; ++y) {
    for (int x = rect.x; x < rect.x + rect.w; ++x) {
      const auto c = image.rgb(x, y);
      const auto lv = quantize(rgb_to_hsv(c.r, c.g, c.b), q_levels);
      if (lv.s == 0) continue;
      hue_seen[lv.h] = 1;
      sat_lo = std::min(sat_lo, lv.s);
      sat_hi = std::max(sat_hi, lv.s);
    }
  }
  if (sat_hi < 0) throw ContractError("learn_signature: unsaturated region");

  // The hue range is the complement of the longest circular run of unseen
  // levels; without wrap this is plain min/max.
  int gap_start = -1, gap_len = 0;
  for (int start = 0; start < q_levels; ++start) {
    if (hue_seen[start] || hue_seen[(start + q_levels - 1) % q_levels] == 0) continue;
    int len = 0;
    while (len < q_levels && !hue_seen[(start + len) % q_levels]) ++len;
    if (len > gap_len) {
      gap_len = len;
      gap_start = start;
    }
  }
  ColorSignature sig;
  sig.id = id;
  sig.q_levels = q_levels;
  sig.lower_sat = sat_lo;
  sig.upper_sat = sat_hi;
  if (gap_len == 0) {
    sig.lower_hue = 0;
    sig.upper_hue = q_levels - 1;
  } else {
    sig.lower_hue = (gap_start + gap_len) % q_levels;
    sig.upper_hue = (gap_start + q_levels - 1) % q_levels;
  }
  sig.validate();
  return sig;
}

ColorSignature signature_for_color(const Rgb& color, int id, int q_levels) {
  const PixelBuffer swatch(1, 1, PixelFormat::RGB8, {color.r, color.g, color.b});
  return learn_signature(swatch, {0, 0, 1, 1}, q_levels, id);
}

// ---------------------------------------------------------------------------
// Streaming tracker

StreamTracker::StreamTracker(int width, std::vector<int> slot_ids, TrackerConfig cfg)
    : width_(width), slot_ids_(std::move(slot_ids)), cfg_(cfg) {
  if (width <= 0) throw ContractError("StreamTracker: width must be positive");
  if (slot_ids_.empty() || slot_ids_.size() > 8) throw ContractError("StreamTracker: 1..8 signature slots");
  if (cfg_.noise_min_run < 1) throw ContractError("StreamTracker: noise_min_run must be >= 1");
  prev_.resize(slot_ids_.size());
  cur_.resize(slot_ids_.size());
}

int StreamTracker::find(int r) {
  while (regions_[r].parent != r) {
    regions_[r].parent = regions_[regions_[r].parent].parent;
    r = regions_[r].parent;
  }
  return r;
}

int StreamTracker::unite(int a, int b) {
  a = find(a);
  b = find(b);
  if (a == b) return a;
  if (b < a) std::swap(a, b);
  auto& ra = regions_[a];
  const auto& rb = regions_[b];
  ra.x_min = std::min(ra.x_min, rb.x_min);
  ra.x_max = std::max(ra.x_max, rb.x_max);
  ra.y_min = std::min(ra.y_min, rb.y_min);
  ra.y_max = std::max(ra.y_max, rb.y_max);
  ra.count += rb.count;
  ra.sum_x += rb.sum_x;
  ra.sum_y += rb.sum_y;
  regions_[b].parent = a;
  return a;
}

int StreamTracker::new_region(int slot, const Run& run) {
  int id;
  if (!free_.empty()) {
    id = free_.back();
    free_.pop_back();
  } else {
    id = static_cast<int>(regions_.size());
    regions_.emplace_back();
  }
  regions_[id] = Region{id, slot, run.x0, run.x0, row_, row_, 0, 0, 0, true};
  extend(id, run);
  return id;
}

void StreamTracker::extend(int region, const Run& run) {
  auto& r = regions_[region];
  const std::uint64_t n = run.x1 - run.x0 + 1;
  r.x_min = std::min(r.x_min, run.x0);
  r.x_max = std::max(r.x_max, run.x1);
  r.y_max = std::max(r.y_max, row_);
  r.count += n;
  // Sum of x over [x0, x1].
  r.sum_x += (static_cast<std::uint64_t>(run.x0) + run.x1) * n / 2;
  r.sum_y += static_cast<std::uint64_t>(row_) * n;
}

void StreamTracker::push_row(std::span<const std::uint8_t> slot_mask) {
  if (finished_) throw ContractError("StreamTracker: frame already finished");
  if (static_cast<int>(slot_mask.size()) != width_) throw ContractError("StreamTracker: row width mismatch");

  for (std::size_t slot = 0; slot < slot_ids_.size(); ++slot) {
    const std::uint8_t bit = static_cast<std::uint8_t>(1u << slot);
    auto& cur = cur_[slot];
    auto& prev = prev_[slot];
    cur.clear();
    std::size_t p = 0;  // first previous run that may still overlap
    int x = 0;
    while (x < width_) {
      if (!(slot_mask[x] & bit)) {
        ++x;
        continue;
      }
      const int x0 = x;
      while (x < width_ && (slot_mask[x] & bit)) ++x;
      Run run{x0, x - 1, -1};
      if (run.x1 - run.x0 + 1 < cfg_.noise_min_run) continue;

      while (p < prev.size() && prev[p].x1 < run.x0) ++p;
      for (std::size_t q = p; q < prev.size() && prev[q].x0 <= run.x1; ++q) {
        run.region = run.region < 0 ? find(prev[q].region) : unite(run.region, prev[q].region);
      }
      if (run.region < 0) {
        run.region = new_region(static_cast<int>(slot), run);
      } else {
        extend(run.region, run);
      }
      cur.push_back(run);
    }
  }
  retire_row();
  ++row_;
}

// Regions not continued by any run of the row just pushed can no longer
// grow; report them and recycle their slots.
void StreamTracker::retire_row() {
  for (auto& runs : cur_) {
    for (auto& run : runs) run.region = find(run.region);
  }
  std::vector<std::uint8_t> continued(regions_.size(), 0);
  for (const auto& runs : cur_) {
    for (const auto& run : runs) continued[run.region] = 1;
  }
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    auto& r = regions_[i];
    if (!r.alive) continue;
    if (r.parent == static_cast<int>(i) && continued[i]) continue;
    if (r.parent == static_cast<int>(i)) emit(r);
    r.alive = false;
    free_.push_back(static_cast<int>(i));
  }
  std::swap(prev_, cur_);
}

void StreamTracker::emit(const Region& r) {
  if (r.count < static_cast<std::uint64_t>(cfg_.min_region_pixels)) return;
  RegionReport rep;
  rep.signature = slot_ids_[r.slot];
  rep.x_center = static_cast<int>(r.sum_x / r.count);
  rep.y_center = static_cast<int>(r.sum_y / r.count);
  rep.width = r.x_max - r.x_min + 1;
  rep.height = r.y_max - r.y_min + 1;
  rep.pixel_count = r.count;
  rep.left = r.x_min;
  rep.top = r.y_min;
  done_.push_back(rep);
}

std::vector<RegionReport> StreamTracker::finish() {
  if (finished_) throw ContractError("StreamTracker: frame already finished");
  for (auto& runs : cur_) runs.clear();
  retire_row();
  finished_ = true;
  auto out = std::move(done_);
  sort_regions(out);
  if (cfg_.max_regions >= 0 && out.size() > static_cast<std::size_t>(cfg_.max_regions)) {
    out.resize(cfg_.max_regions);
  }
  return out;
}

void sort_regions(std::vector<RegionReport>& regions) {
  std::stable_sort(regions.begin(), regions.end(), [](const RegionReport& a, const RegionReport& b) {
    if (a.pixel_count != b.pixel_count) return a.pixel_count > b.pixel_count;
    if (a.top != b.top) return a.top < b.top;
    return a.left < b.left;
  });
}

void classify_row(std::span<const std::uint8_t> rgb_row, std::span<const ClassMatrix> matrices,
                  std::span<std::uint8_t> out) {
  const int q = matrices.empty() ? 2 : matrices.front().levels();
  for (std::size_t x = 0; x < out.size(); ++x) {
    const auto lv = quantize(rgb_to_hsv(rgb_row[3 * x], rgb_row[3 * x + 1], rgb_row[3 * x + 2]), q);
    std::uint8_t bits = 0;
    for (std::size_t i = 0; i < matrices.size(); ++i) {
      if (matrices[i].contains(lv.h, lv.s)) bits |= static_cast<std::uint8_t>(1u << i);
    }
    out[x] = bits;
  }
}

namespace {

std::vector<ClassMatrix> matrices_for(std::span<const ColorSignature> sigs) {
  if (sigs.empty()) throw ContractError("track_frame: no signatures");
  if (sigs.size() > 8) throw ContractError("track_frame: at most 8 signatures");
  std::vector<ClassMatrix> out;
  for (const auto& s : sigs) {
    if (s.q_levels != sigs.front().q_levels) throw ContractError("track_frame: inconsistent q_levels");
    out.push_back(build_class_matrix(s));
  }
  return out;
}

}  // namespace

std::vector<RegionReport> track_frame(const PixelBuffer& image, std::span<const ColorSignature> sigs,
                                      const TrackerConfig& cfg) {
  require_format(image, PixelFormat::RGB8, "track_frame");
  const auto matrices = matrices_for(sigs);
  std::vector<int> ids;
  for (const auto& s : sigs) ids.push_back(s.id);
  StreamTracker tracker(image.width(), std::move(ids), cfg);
  std::vector<std::uint8_t> mask(image.width());
  for (int y = 0; y < image.height(); ++y) {
    classify_row(image.row(y), matrices, mask);
    tracker.push_row(mask);
  }
  return tracker.finish();
}

PixelBuffer membership_mask(const PixelBuffer& image, std::span<const ColorSignature> sigs) {
  require_format(image, PixelFormat::RGB8, "membership_mask");
  const auto matrices = matrices_for(sigs);
  const int w = image.width();
  const int h = image.height();
  std::vector<std::uint8_t> out(image.pixel_count());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    std::span<std::uint8_t> dst(out.data() + static_cast<std::size_t>(y) * w, w);
    classify_row(image.row(y), matrices, dst);
    for (auto& v : dst) v = v ? 1 : 0;
  }
  return PixelBuffer(w, h, PixelFormat::BINARY, std::move(out));
}

// ---------------------------------------------------------------------------
// Text formats

std::vector<ColorSignature> parse_signatures(const std::string& text) {
  std::vector<ColorSignature> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    ColorSignature s;
    std::string extra;
    if (!(fields >> s.id >> s.lower_hue >> s.upper_hue >> s.lower_sat >> s.upper_sat >> s.q_levels) ||
        (fields >> extra)) {
      throw ParseError("signature line " + std::to_string(line_no) + ": expected 6 integers");
    }
    try {
      s.validate();
    } catch (const ContractError& e) {
      throw ParseError("signature line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(s);
  }
  return out;
}

std::vector<ColorSignature> load_signatures(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_signatures(ss.str());
}

std::string format_signature(const ColorSignature& s) {
  std::ostringstream out;
  out << s.id << ' ' << s.lower_hue << ' ' << s.upper_hue << ' ' << s.lower_sat << ' ' << s.upper_sat << ' '
      << s.q_levels;
  return out.str();
}

void append_signature(const std::filesystem::path& path, const ColorSignature& sig) {
  std::ofstream f(path, std::ios::app);
  if (!f) throw IoError("cannot write " + path.string());
  f << format_signature(sig) << '\n';
}

std::string format_region(const RegionReport& r) {
  std::ostringstream out;
  out << r.signature << ' ' << r.x_center << ' ' << r.y_center << ' ' << r.width << ' ' << r.height << ' '
      << r.pixel_count;
  return out.str();
}

}  // namespace linefollow
