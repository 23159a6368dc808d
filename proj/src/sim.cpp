#include "linefollow/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace linefollow {

void TrackSpec::validate() const {
  if (waypoints.size() < 2) throw ContractError("TrackSpec: at least two waypoints required");
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    if (waypoints[i].x == waypoints[i - 1].x && waypoints[i].y == waypoints[i - 1].y) {
      throw ContractError("TrackSpec: consecutive waypoints must be distinct");
    }
  }
  if (!(line_width_m > 0)) throw ContractError("TrackSpec: line width must be positive");
  if (noise_stddev < 0 || brightness_scale < 0) throw ContractError("TrackSpec: negative noise or brightness");
}

double TrackSpec::length() const {
  double len = 0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    len += std::hypot(waypoints[i].x - waypoints[i - 1].x, waypoints[i].y - waypoints[i - 1].y);
  }
  return len;
}

void CameraModel::validate() const {
  if (!(view_width_m > 0 && view_height_m > 0 && image_width > 0 && image_height > 0 && forward_offset_m > 0)) {
    throw ContractError("CameraModel: all dimensions must be positive");
  }
}

Point2 CameraModel::pixel_to_robot(double col, double row) const {
  const double forward = forward_offset_m + view_height_m * (1.0 - (row + 0.5) / image_height);
  const double left = view_width_m * (axis_frac - (col + 0.5) / image_width);
  return {forward, left};
}

Point2 CameraModel::pixel_to_world(const RobotPose& pose, int col, int row) const {
  const auto r = pixel_to_robot(col, row);
  const double c = std::cos(pose.heading), s = std::sin(pose.heading);
  return {pose.x + r.x * c - r.y * s, pose.y + r.x * s + r.y * c};
}

namespace {

struct Segment {
  Point2 a;
  Point2 b;
  double len2;
  double arc_start;
};

std::vector<Segment> segments_of(const std::vector<Point2>& pts) {
  std::vector<Segment> out;
  double arc = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double dx = pts[i].x - pts[i - 1].x, dy = pts[i].y - pts[i - 1].y;
    out.push_back({pts[i - 1], pts[i], dx * dx + dy * dy, arc});
    arc += std::sqrt(dx * dx + dy * dy);
  }
  return out;
}

// Squared distance from p to the segment, and the clamped parameter t.
std::pair<double, double> segment_distance2(const Segment& s, Point2 p) {
  const double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
  double t = s.len2 > 0 ? ((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / s.len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double qx = s.a.x + t * dx - p.x, qy = s.a.y + t * dy - p.y;
  return {qx * qx + qy * qy, t};
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finaliser
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint8_t to_level(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

PolylineProjection project_onto(const std::vector<Point2>& polyline, Point2 p) {
  if (polyline.size() < 2) throw ContractError("project_onto: polyline needs two points");
  PolylineProjection best{std::numeric_limits<double>::infinity(), 0.0};
  for (const auto& s : segments_of(polyline)) {
    const auto [d2, t] = segment_distance2(s, p);
    const double d = std::sqrt(d2);
    if (d < best.distance) best = {d, s.arc_start + t * std::sqrt(s.len2)};
  }
  return best;
}

double cross_track_error(const TrackSpec& track, const RobotPose& pose) {
  return project_onto(track.waypoints, {pose.x, pose.y}).distance;
}

PixelBuffer render_view(const TrackSpec& track, const RobotPose& pose, const CameraModel& cam, std::uint64_t seed) {
  track.validate();
  cam.validate();
  const int w = cam.image_width, h = cam.image_height;
  const double half = track.line_width_m / 2;

  // Only segments near the footprint can colour a pixel.
  double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x, min_y = min_x, max_y = -min_x;
  for (auto [c, r] : {std::pair{0, 0}, {w - 1, 0}, {0, h - 1}, {w - 1, h - 1}}) {
    const auto p = cam.pixel_to_world(pose, c, r);
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double pad = half + cam.pixel_size_x() + cam.pixel_size_y();
  std::vector<Segment> near;
  for (const auto& s : segments_of(track.waypoints)) {
    if (std::max(s.a.x, s.b.x) < min_x - pad || std::min(s.a.x, s.b.x) > max_x + pad ||
        std::max(s.a.y, s.b.y) < min_y - pad || std::min(s.a.y, s.b.y) > max_y + pad) {
      continue;
    }
    near.push_back(s);
  }

  const auto k = track.brightness_scale;
  const double line[3] = {track.line_color.r * k, track.line_color.g * k, track.line_color.b * k};
  const double back[3] = {track.background_color.r * k, track.background_color.g * k,
                          track.background_color.b * k};
  const double half2 = half * half;
  const bool noisy = track.noise_stddev > 0;

  std::vector<std::uint8_t> out(static_cast<std::size_t>(w) * h * 3);
#pragma omp parallel for schedule(static)
  for (int row = 0; row < h; ++row) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(row)));
    std::normal_distribution<double> noise(0.0, noisy ? track.noise_stddev : 1.0);
    for (int col = 0; col < w; ++col) {
      const auto g = cam.pixel_to_world(pose, col, row);
      bool on_line = false;
      for (const auto& s : near) {
        if (segment_distance2(s, g).first <= half2) {
          on_line = true;
          break;
        }
      }
      const double* base = on_line ? line : back;
      auto* px = &out[(static_cast<std::size_t>(row) * w + col) * 3];
      for (int ch = 0; ch < 3; ++ch) px[ch] = to_level(base[ch] + (noisy ? noise(rng) : 0.0));
    }
  }
  return PixelBuffer(w, h, PixelFormat::RGB8, std::move(out));
}

// ---------------------------------------------------------------------------

std::vector<LabeledSample> generate_samples(const SampleGenConfig& cfg, std::uint64_t seed) {
  if (cfg.n_per_class < 1) throw ContractError("generate_samples: n_per_class must be >= 1");
  if (cfg.noise_stddev < 0) throw ContractError("generate_samples: negative noise");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, cfg.noise_stddev > 0 ? cfg.noise_stddev : 1.0);
  const bool noisy = cfg.noise_stddev > 0;
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < cfg.scenarios.size(); ++i) {
    const double k = cfg.scenarios[i];
    for (auto truth : {SampleClass::Black, SampleClass::White}) {
      const Rgb anchor = truth == SampleClass::Black ? cfg.black_anchor : cfg.white_anchor;
      for (int n = 0; n < cfg.n_per_class; ++n) {
        auto level = [&](std::uint8_t a) { return to_level(a * k + (noisy ? noise(rng) : 0.0)); };
        LabeledSample s;
        s.color.r = level(anchor.r);
        s.color.g = level(anchor.g);
        s.color.b = level(anchor.b);
        s.scenario = static_cast<int>(i) + 1;
        s.truth = truth;
        out.push_back(s);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(Method m) {
  switch (m) {
    case Method::Otsu: return "otsu";
    case Method::RgbRule: return "rgb-rule";
    case Method::HsvTrack: return "hsv-track";
  }
  return "?";
}

std::optional<Method> parse_method(const std::string& name) {
  for (auto m : {Method::Otsu, Method::RgbRule, Method::HsvTrack}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

void MethodSelector::validate() const {
  if (method == Method::RgbRule && rule.clauses.empty()) throw ContractError("rgb-rule: empty rule");
  if (method == Method::HsvTrack) {
    if (signatures.empty()) throw ContractError("hsv-track: no signatures");
    if (tracker.noise_min_run < 1) throw ContractError("hsv-track: noise_min_run must be >= 1");
  }
}

Perception perceive(const PixelBuffer& frame, const MethodSelector& method, const DecisionConfig& cfg) {
  Perception p;
  switch (method.method) {
    case Method::Otsu: {
      const auto gray = rgb_to_gray(frame);
      const auto t = otsu_threshold(histogram(gray));
      // A single-level frame has nothing to separate: treat it as no line.
      if (!t.degenerate) {
        const auto mask = apply_threshold(gray, t.threshold, 1, 0);
        p.center = line_center(mask, scan_row(frame.height(), cfg));
      }
      p.command = decide(p.center, frame.width(), cfg);
      break;
    }
    case Method::RgbRule: {
      const auto mask = rule_segment(frame, method.rule);
      p.center = line_center(mask, scan_row(frame.height(), cfg));
      p.command = decide(p.center, frame.width(), cfg);
      break;
    }
    case Method::HsvTrack: {
      const auto regions = track_frame(frame, method.signatures, method.tracker);
      if (!regions.empty()) p.center = regions.front().x_center;
      p.command = decide_from_regions(regions, frame.width(), cfg);
      break;
    }
  }
  return p;
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Completed: return "COMPLETED";
    case Outcome::Lost: return "LOST";
    case Outcome::MaxSteps: return "MAX_STEPS";
  }
  return "?";
}

TrackSpec with_runout(const TrackSpec& track, const CameraModel& cam) {
  track.validate();
  TrackSpec out = track;
  const auto& a = track.waypoints[track.waypoints.size() - 2];
  const auto& b = track.waypoints.back();
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  const double extra = cam.forward_offset_m + cam.view_height_m + track.line_width_m;
  out.waypoints.back() = {b.x + (b.x - a.x) / len * extra, b.y + (b.y - a.y) / len * extra};
  return out;
}

EpisodeLog run_episode(const TrackSpec& track, const CameraModel& cam, const MethodSelector& method,
                       const DecisionConfig& cfg, const GaitParams& gait, const EpisodeConfig& ecfg) {
  track.validate();
  cam.validate();
  method.validate();
  cfg.validate();
  gait.validate();
  if (ecfg.max_steps < 0 || ecfg.lost_after_stops < 1) throw ContractError("run_episode: bad episode config");

  const TrackSpec world = with_runout(track, cam);
  const double goal = track.length() - gait.step_length_m;
  auto reached = [&](const RobotPose& p) { return project_onto(track.waypoints, {p.x, p.y}).arc_length >= goal; };

  RobotPose pose;
  if (ecfg.start) {
    pose = *ecfg.start;
  } else {
    const auto& a = track.waypoints[0];
    const auto& b = track.waypoints[1];
    pose = {a.x, a.y, std::atan2(b.y - a.y, b.x - a.x)};
  }

  EpisodeLog log;
  std::optional<Outcome> outcome;
  int stops = 0;
  for (int i = 0; i < ecfg.max_steps; ++i) {
    if (reached(pose)) {
      outcome = Outcome::Completed;
      break;
    }
    const auto frame = render_view(world, pose, cam, mix_seed(ecfg.seed, static_cast<std::uint64_t>(i)));
    if (ecfg.on_frame) ecfg.on_frame(i, frame);
    const auto seen = perceive(frame, method, cfg);
    log.steps.push_back({pose, seen.command, seen.center});
    pose = apply_step(pose, seen.command, gait);
    stops = seen.command == StepCommand::Stop ? stops + 1 : 0;
    if (stops >= ecfg.lost_after_stops) {
      outcome = Outcome::Lost;
      break;
    }
  }
  if (!outcome) outcome = reached(pose) ? Outcome::Completed : Outcome::MaxSteps;

  log.outcome = *outcome;
  log.final_pose = pose;
  log.distance_along_track_m = project_onto(track.waypoints, {pose.x, pose.y}).arc_length;
  return log;
}

std::string format_episode(const EpisodeLog& log) {
  std::string out;
  char buf[160];
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    const auto& s = log.steps[i];
    const std::string center = s.center ? std::to_string(*s.center) : "-";
    std::snprintf(buf, sizeof buf, "%zu %.6f %.6f %.3f %s %s\n", i, s.pose.x, s.pose.y, rad_to_deg(s.pose.heading),
                  to_string(s.command), center.c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "outcome %s distance %.6f\n", to_string(log.outcome), log.distance_along_track_m);
  out += buf;
  return out;
}

// ---------------------------------------------------------------------------

TrackSpec parse_track(const std::string& text) {
  TrackSpec t;
  t.waypoints.clear();
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) -> void {
    throw ParseError("track line " + std::to_string(line_no) + ": " + what);
  };
  auto read_rgb = [&](std::istringstream& f) {
    int r, g, b;
    if (!(f >> r >> g >> b) || r < 0 || g < 0 || b < 0 || r > 255 || g > 255 || b > 255) {
      fail("expected three levels 0..255");
    }
    return Rgb{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
  };
  bool have_width = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream f(line);
    std::string key;
    if (!(f >> key)) continue;
    if (key == "width_m") {
      if (!(f >> t.line_width_m) || !(t.line_width_m > 0)) fail("width_m must be a positive number");
      have_width = true;
    } else if (key == "line_color") {
      t.line_color = read_rgb(f);
    } else if (key == "background") {
      t.background_color = read_rgb(f);
    } else if (key == "noise") {
      if (!(f >> t.noise_stddev) || t.noise_stddev < 0) fail("noise must be non-negative");
    } else if (key == "brightness") {
      if (!(f >> t.brightness_scale) || t.brightness_scale < 0) fail("brightness must be non-negative");
    } else if (key == "wp") {
      Point2 p;
      if (!(f >> p.x >> p.y)) fail("expected `wp x y`");
      t.waypoints.push_back(p);
    } else {
      fail("unknown key '" + key + "'");
    }
    std::string extra;
    if (f >> extra) fail("trailing token '" + extra + "'");
  }
  if (!have_width) throw ParseError("track: missing width_m");
  try {
    t.validate();
  } catch (const ContractError& e) {
    throw ParseError(std::string("track: ") + e.what());
  }
  return t;
}

TrackSpec load_track(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_track(ss.str());
}

std::string format_track(const TrackSpec& t) {
  std::ostringstream out;
  out.precision(17);
  out << "width_m " << t.line_width_m << '\n';
  out << "line_color " << int(t.line_color.r) << ' ' << int(t.line_color.g) << ' ' << int(t.line_color.b) << '\n';
  out << "background " << int(t.background_color.r) << ' ' << int(t.background_color.g) << ' '
      << int(t.background_color.b) << '\n';
  if (t.noise_stddev > 0) out << "noise " << t.noise_stddev << '\n';
  if (t.brightness_scale != 1.0) out << "brightness " << t.brightness_scale << '\n';
  for (const auto& p : t.waypoints) out << "wp " << p.x << ' ' << p.y << '\n';
  return out.str();
}

}  // namespace linefollow
