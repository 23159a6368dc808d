#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "linefollow/colortrack.hpp"
#include "linefollow/control.hpp"
#include "linefollow/gait.hpp"
#include "linefollow/image.hpp"
#include "linefollow/segmentation.hpp"

namespace linefollow {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// A taped path on the floor: polyline of waypoints (meters) with a width.
struct TrackSpec {
  std::vector<Point2> waypoints;
  double line_width_m = 0.025;
  Rgb line_color{0, 0, 0};
  Rgb background_color{255, 255, 255};
  double noise_stddev = 0.0;
  double brightness_scale = 1.0;

  void validate() const;
  double length() const;
};

/// Orthographic top-down footprint ahead of the robot. Image row 0 is the
/// far edge. `axis_frac` is the image x (as a fraction of width, in
/// continuous pixel coordinates) onto which the robot's heading axis
/// projects; the default lines the axis up with the middle of the forward
/// band of the default DecisionConfig.
struct CameraModel {
  double view_width_m = 0.20;
  double view_height_m = 0.15;
  int image_width = 400;
  int image_height = 300;
  double forward_offset_m = 0.05;
  double axis_frac = 150.5 / 400.0;

  void validate() const;
  double pixel_size_x() const { return view_width_m / image_width; }
  double pixel_size_y() const { return view_height_m / image_height; }

  /// Ground point (robot frame: forward, left) of the centre of pixel (col, row).
  Point2 pixel_to_robot(double col, double row) const;
  /// World-frame ground point under the centre of pixel (col, row).
  Point2 pixel_to_world(const RobotPose& pose, int col, int row) const;
};

/// Nearest point on the polyline: distance and arc-length parameter.
struct PolylineProjection {
  double distance = 0.0;
  double arc_length = 0.0;
};

PolylineProjection project_onto(const std::vector<Point2>& polyline, Point2 p);

double cross_track_error(const TrackSpec& track, const RobotPose& pose);

/// Renders the view. Noise (when the track asks for it) is drawn from a
/// generator seeded with `seed`.
PixelBuffer render_view(const TrackSpec& track, const RobotPose& pose, const CameraModel& cam = {},
                        std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Synthetic samples for rule evaluation

struct SampleGenConfig {
  std::vector<double> scenarios{0.8, 1.0, 1.2};  // brightness scale, darkest first
  int n_per_class = 50;
  double noise_stddev = 12.0;
  Rgb black_anchor{30, 30, 30};
  Rgb white_anchor{230, 230, 230};
};

std::vector<LabeledSample> generate_samples(const SampleGenConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Closed loop

enum class Method : std::uint8_t { Otsu, RgbRule, HsvTrack };

const char* to_string(Method m);
std::optional<Method> parse_method(const std::string& name);

struct MethodSelector {
  Method method = Method::RgbRule;
  ThresholdRule rule = parse_rule(kBlackLineRule);
  std::vector<ColorSignature> signatures;
  TrackerConfig tracker;

  void validate() const;
};

/// Line position seen in one frame, plus the resulting command.
struct Perception {
  std::optional<int> center;
  StepCommand command = StepCommand::Stop;
};

Perception perceive(const PixelBuffer& frame, const MethodSelector& method, const DecisionConfig& cfg);

enum class Outcome : std::uint8_t { Completed, Lost, MaxSteps };

const char* to_string(Outcome o);

struct EpisodeStep {
  RobotPose pose;  // pose at which the frame was captured
  StepCommand command = StepCommand::Stop;
  std::optional<int> center;
};

struct EpisodeLog {
  std::vector<EpisodeStep> steps;
  Outcome outcome = Outcome::MaxSteps;
  double distance_along_track_m = 0.0;
  RobotPose final_pose;
};

struct EpisodeConfig {
  int max_steps = 2000;
  int lost_after_stops = 10;
  std::uint64_t seed = 0;
  /// Starting pose; defaults to the first waypoint facing the second.
  std::optional<RobotPose> start;
  /// Called with (step index, frame) before each decision; used for frame dumps.
  std::function<void(int, const PixelBuffer&)> on_frame;
};

/// The tape continues past the final waypoint far enough to stay in view
/// while the robot covers the last step; completion is still judged against
/// the final waypoint.
TrackSpec with_runout(const TrackSpec& track, const CameraModel& cam);

EpisodeLog run_episode(const TrackSpec& track, const CameraModel& cam, const MethodSelector& method,
                       const DecisionConfig& cfg, const GaitParams& gait, const EpisodeConfig& ecfg);

/// `step pose_x pose_y heading_deg command center` lines plus the
/// `outcome <OUTCOME> distance <m>` trailer.
std::string format_episode(const EpisodeLog& log);

// Track file: `width_m <w>`, `line_color r g b`, `background r g b`, then
// `wp x y` lines; optional `noise <s>` and `brightness <k>`; '#' comments.
TrackSpec parse_track(const std::string& text);
TrackSpec load_track(const std::filesystem::path& path);
std::string format_track(const TrackSpec& track);

}  // namespace linefollow
