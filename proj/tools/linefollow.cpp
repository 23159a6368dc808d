// linefollow: segment, track, render, evaluate and simulate from the shell.
//
// Exit codes: 0 success / episode completed, 1 usage or configuration
// error, 2 runtime failure, 3 episode ended without completing.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "linefollow/colortrack.hpp"
#include "linefollow/control.hpp"
#include "linefollow/image.hpp"
#include "linefollow/segmentation.hpp"
#include "linefollow/sim.hpp"

namespace lf = linefollow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitNotCompleted = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& text, std::size_t expected, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("bad number in ") + what + ": '" + item + "'");
    }
  }
  if (expected && out.size() != expected) {
    throw UsageError(std::string(what) + " expects " + std::to_string(expected) + " comma-separated values");
  }
  return out;
}

lf::PixelBuffer as_rgb(const lf::PixelBuffer& img) {
  if (img.format() == lf::PixelFormat::RGB8) return img;
  std::vector<std::uint8_t> out;
  out.reserve(img.pixel_count() * 3);
  for (auto v : img.data()) {
    const std::uint8_t g = img.format() == lf::PixelFormat::BINARY ? (v ? 255 : 0) : v;
    out.insert(out.end(), {g, g, g});
  }
  return lf::PixelBuffer(img.width(), img.height(), lf::PixelFormat::RGB8, std::move(out));
}

struct CommonMethodFlags {
  std::string method = "rgb-rule";
  std::string rule;
  std::string signatures;
  int noise_min_run = lf::kDefaultNoiseMinRun;
  int min_region_pixels = lf::kDefaultMinRegionPixels;

  void attach(CLI::App* app) {
    app->add_option("--method", method, "otsu | rgb-rule | hsv-track");
    app->add_option("--rule", rule, "RGB rule text, e.g. \"R+G+B<250;G-B<30;R-B>-30\"");
    app->add_option("--signatures", signatures, "signature file (hsv-track)");
    app->add_option("--noise-min-run", noise_min_run, "shortest run kept by the tracker")->check(CLI::PositiveNumber);
    app->add_option("--min-region-pixels", min_region_pixels, "smallest region reported");
  }
};

// ---------------------------------------------------------------------------

int cmd_segment(const std::string& input, const std::string& output, const CommonMethodFlags& f) {
  const auto method = lf::parse_method(f.method);
  if (!method) throw UsageError("unknown method '" + f.method + "'");
  const auto img = lf::load_image(input);
  switch (*method) {
    case lf::Method::Otsu: {
      const auto gray = img.format() == lf::PixelFormat::RGB8 ? lf::rgb_to_gray(img) : img;
      if (gray.format() != lf::PixelFormat::GRAY8) throw UsageError("otsu needs a PGM or PPM image");
      const auto t = lf::otsu_threshold(lf::histogram(gray));
      // The line is the dark class.
      lf::save_image(lf::apply_threshold(gray, t.threshold, 1, 0), output);
      std::printf("threshold %d variance %.6f%s\n", t.threshold, t.between_class_variance,
                  t.degenerate ? " degenerate" : "");
      break;
    }
    case lf::Method::RgbRule: {
      if (f.rule.empty()) throw UsageError("--rule is required with --method rgb-rule");
      lf::save_image(lf::rule_segment(as_rgb(img), lf::parse_rule(f.rule)), output);
      break;
    }
    case lf::Method::HsvTrack: {
      if (f.signatures.empty()) throw UsageError("--signatures is required with --method hsv-track");
      const auto sigs = lf::load_signatures(f.signatures);
      if (sigs.empty()) throw UsageError("signature file is empty");
      lf::save_image(lf::membership_mask(as_rgb(img), sigs), output);
      break;
    }
  }
  return kExitOk;
}

int cmd_track(const std::string& input, const std::string& sig_path, const std::string& learn, int id,
              int q_levels, const CommonMethodFlags& f) {
  const auto img = as_rgb(lf::load_image(input));
  if (!learn.empty()) {
    const auto r = parse_list(learn, 4, "--learn");
    const lf::Rect rect{static_cast<int>(r[0]), static_cast<int>(r[1]), static_cast<int>(r[2]),
                        static_cast<int>(r[3])};
    const auto sig = lf::learn_signature(img, rect, q_levels, id);
    lf::append_signature(sig_path, sig);
    std::printf("%s\n", lf::format_signature(sig).c_str());
    return kExitOk;
  }
  const auto sigs = lf::load_signatures(sig_path);
  if (sigs.empty()) throw UsageError("signature file is empty");
  lf::TrackerConfig cfg;
  cfg.noise_min_run = f.noise_min_run;
  cfg.min_region_pixels = f.min_region_pixels;
  for (const auto& r : lf::track_frame(img, sigs, cfg)) std::printf("%s\n", lf::format_region(r).c_str());
  return kExitOk;
}

lf::MethodSelector build_selector(const CommonMethodFlags& f, const lf::TrackSpec& track, bool rule_required) {
  const auto method = lf::parse_method(f.method);
  if (!method) throw UsageError("unknown method '" + f.method + "'");
  lf::MethodSelector sel;
  sel.method = *method;
  if (*method == lf::Method::RgbRule) {
    if (rule_required && f.rule.empty()) throw UsageError("--rule is required with --method rgb-rule");
    if (!f.rule.empty()) sel.rule = lf::parse_rule(f.rule);
  }
  if (*method == lf::Method::HsvTrack) {
    sel.signatures = f.signatures.empty() ? std::vector{lf::signature_for_color(track.line_color)}
                                          : lf::load_signatures(f.signatures);
    if (sel.signatures.empty()) throw UsageError("signature file is empty");
  }
  sel.tracker.noise_min_run = f.noise_min_run;
  sel.tracker.min_region_pixels = f.min_region_pixels;
  return sel;
}

int cmd_simulate(const std::string& track_path, const CommonMethodFlags& f, int max_steps, std::uint64_t seed,
                 const std::string& frame_dir, const std::string& log_path) {
  lf::TrackSpec track;
  try {
    track = lf::load_track(track_path);
  } catch (const lf::ParseError& e) {
    throw UsageError(e.what());
  } catch (const lf::IoError& e) {
    throw UsageError(e.what());
  }
  const auto sel = build_selector(f, track, false);
  lf::EpisodeConfig ecfg;
  ecfg.max_steps = max_steps;
  ecfg.seed = seed;
  if (!frame_dir.empty()) {
    std::filesystem::create_directories(frame_dir);
    ecfg.on_frame = [&](int step, const lf::PixelBuffer& frame) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%05d.ppm", step);
      lf::save_image(frame, std::filesystem::path(frame_dir) / name);
    };
  }
  const auto log = lf::run_episode(track, {}, sel, {}, {}, ecfg);
  const auto text = lf::format_episode(log);
  if (log_path.empty() || log_path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    std::ofstream out(log_path, std::ios::binary | std::ios::trunc);
    if (!out) throw lf::IoError("cannot write " + log_path);
    out << text;
    std::printf("outcome %s distance %.6f steps %zu\n", lf::to_string(log.outcome), log.distance_along_track_m,
                log.steps.size());
  }
  return log.outcome == lf::Outcome::Completed ? kExitOk : kExitNotCompleted;
}

// Times the tracker alone on a rendered 400x300 red-on-white frame.
void bench_tracking(int repeats) {
  lf::TrackSpec track;
  track.waypoints = {{0, 0}, {1, 0}};
  track.line_color = {200, 30, 30};
  const lf::CameraModel cam;
  const auto frame = lf::render_view(track, {0, 0, 0}, cam);
  const std::vector sigs{lf::signature_for_color(track.line_color)};
  std::size_t sink = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < repeats; ++i) sink += lf::track_frame(frame, sigs).size();
  const auto t1 = std::chrono::steady_clock::now();
  const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count() / repeats;
  std::printf("bench track_frame %dx%d: %.3f ms/frame over %d frames (budget 20 ms at 50 Hz) %s [regions %zu]\n",
              cam.image_width, cam.image_height, ms, repeats, ms <= 20.0 ? "within" : "OVER", sink / repeats);
}

int cmd_eval(const std::string& scenarios, int n, std::uint64_t seed, double noise, const std::string& rule_text,
             bool records, int bench) {
  lf::SampleGenConfig gen;
  gen.scenarios = parse_list(scenarios, 0, "--scenarios");
  if (gen.scenarios.empty()) throw UsageError("--scenarios needs at least one value");
  gen.n_per_class = n;
  gen.noise_stddev = noise;
  const auto rule = lf::parse_rule(rule_text);
  const auto report = lf::scenario_eval(lf::generate_samples(gen, seed), rule);
  std::printf("rule %s\n%s", lf::to_string(rule).c_str(), lf::format_table(report).c_str());
  if (records) std::printf("%s", lf::format_records(report).c_str());
  if (bench > 0) bench_tracking(bench);
  return kExitOk;
}

int cmd_render(const std::string& track_path, const std::string& pose_text, const std::string& output,
               std::uint64_t seed, bool centered) {
  const auto track = lf::load_track(track_path);
  lf::RobotPose pose;
  if (pose_text.empty()) {
    const auto& a = track.waypoints[0];
    const auto& b = track.waypoints[1];
    pose = {a.x, a.y, std::atan2(b.y - a.y, b.x - a.x)};
  } else {
    const auto v = parse_list(pose_text, 3, "--pose");
    pose = {v[0], v[1], lf::deg_to_rad(v[2])};
  }
  lf::CameraModel cam;
  if (centered) cam.axis_frac = 0.5;
  lf::save_image(lf::render_view(track, pose, cam, seed), output);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Line-follower vision, control and simulation toolkit"};
  app.require_subcommand(1);

  CommonMethodFlags seg_flags, track_flags, sim_flags;

  std::string seg_in, seg_out;
  auto* seg = app.add_subcommand("segment", "Segment an image into a binary line mask");
  seg->add_option("--input", seg_in, "PGM/PPM input")->required();
  seg->add_option("--output", seg_out, "PGM mask output")->required();
  seg_flags.attach(seg);

  std::string trk_in, trk_sigs, trk_learn;
  int trk_id = 1, trk_q = lf::kDefaultQuantLevels;
  auto* trk = app.add_subcommand("track", "Report colour regions, biggest first, or learn a signature");
  trk->add_option("--input", trk_in, "PPM input")->required();
  trk->add_option("--signatures", trk_sigs, "signature file")->required();
  trk->add_option("--learn", trk_learn, "x,y,w,h: learn a signature from this box and append it");
  trk->add_option("--id", trk_id, "signature id for --learn")->check(CLI::Range(1, 7));
  trk->add_option("--q-levels", trk_q, "quantization levels for --learn")->check(CLI::Range(2, 256));
  trk->add_option("--noise-min-run", track_flags.noise_min_run)->check(CLI::PositiveNumber);
  trk->add_option("--min-region-pixels", track_flags.min_region_pixels);

  std::string sim_track, sim_frames, sim_log;
  int sim_max_steps = 2000;
  std::uint64_t sim_seed = 0;
  auto* sim = app.add_subcommand("simulate", "Run one closed-loop episode");
  sim->add_option("--track", sim_track, "track file")->required();
  sim_flags.attach(sim);
  sim->add_option("--max-steps", sim_max_steps)->check(CLI::NonNegativeNumber);
  sim->add_option("--seed", sim_seed);
  sim->add_option("--frames", sim_frames, "directory for numbered PPM frame dumps");
  sim->add_option("--log", sim_log, "episode log path (default stdout)");

  std::string ev_scen = "0.8,1.0,1.2", ev_rule = std::string(lf::kBlackLineRule);
  int ev_n = 50, ev_bench = 0;
  double ev_noise = 12.0;
  std::uint64_t ev_seed = 0;
  bool ev_records = false;
  auto* ev = app.add_subcommand("eval", "Score an RGB rule on synthetic black/white samples");
  ev->add_option("--scenarios", ev_scen, "comma-separated brightness scales, darkest first");
  ev->add_option("--n", ev_n, "samples per class and scenario")->check(CLI::PositiveNumber);
  ev->add_option("--seed", ev_seed);
  ev->add_option("--noise", ev_noise, "per-channel noise stddev")->check(CLI::NonNegativeNumber);
  ev->add_option("--rule", ev_rule);
  ev->add_flag("--records", ev_records, "also print scenario,class,total,correct,rate records");
  ev->add_option("--bench", ev_bench, "time track_frame on a 400x300 frame over N repeats")
      ->check(CLI::NonNegativeNumber);

  std::string rd_track, rd_pose, rd_out;
  std::uint64_t rd_seed = 0;
  bool rd_centered = false;
  auto* rd = app.add_subcommand("render", "Render the robot's view of a track");
  rd->add_option("--track", rd_track)->required();
  rd->add_option("--pose", rd_pose, "x,y,heading_deg (default: start of track)");
  rd->add_option("--output", rd_out)->required();
  rd->add_option("--seed", rd_seed);
  rd->add_flag("--centered", rd_centered, "project the robot axis onto the image centre column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*seg) return cmd_segment(seg_in, seg_out, seg_flags);
    if (*trk) return cmd_track(trk_in, trk_sigs, trk_learn, trk_id, trk_q, track_flags);
    if (*sim) return cmd_simulate(sim_track, sim_flags, sim_max_steps, sim_seed, sim_frames, sim_log);
    if (*ev) return cmd_eval(ev_scen, ev_n, ev_seed, ev_noise, ev_rule, ev_records, ev_bench);
    if (*rd) return cmd_render(rd_track, rd_pose, rd_out, rd_seed, rd_centered);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const lf::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kExitUsage;
  } catch (const lf::ContractError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
