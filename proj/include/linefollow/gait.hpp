#pragma once

#include <array>
#include <string>
#include <vector>

#include "linefollow/control.hpp"

namespace linefollow {

struct GaitParams {
  int shoulder_contract_ms = 200;
  int extend_lift_ms = 100;
  int place_ms = 100;
  double translate_deg = 10.0;
  double rotate_deg = 15.0;
  double step_length_m = 0.006;  // 0.03 m/s at one step per 200 ms
  int step_period_ms = 200;

  void validate() const;
};

enum class Quadrant : int { I = 0, II = 1, III = 2, IV = 3 };
enum class Joint : int { Shoulder = 0, Elbow = 1 };

constexpr int servo_index(Quadrant q, Joint j) { return static_cast<int>(q) * 2 + static_cast<int>(j); }

/// One timed segment of a leg cycle. `targets` holds angle deltas in
/// degrees indexed by servo_index; untouched servos stay at 0.
struct ServoPhase {
  int duration_ms = 0;
  std::array<double, 8> targets{};
};

/// Shoulder-contract / lift / place cycle for one command; empty for Stop.
std::vector<ServoPhase> step_sequence(StepCommand cmd, const GaitParams& p = {});

int total_duration_ms(const std::vector<ServoPhase>& phases);

/// `duration_ms d1 .. d8` per phase.
std::string format_servo_trace(const std::vector<ServoPhase>& phases);

struct RobotPose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians, counterclockwise, in (-pi, pi]
};

double normalize_angle(double radians);
double deg_to_rad(double deg);
double rad_to_deg(double rad);

/// Turns rotate first, then every moving command advances one step length
/// along the (new) heading.
RobotPose apply_step(const RobotPose& pose, StepCommand cmd, const GaitParams& p = {});

}  // namespace linefollow
