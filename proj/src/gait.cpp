#include "linefollow/gait.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace linefollow {

void GaitParams::validate() const {
  if (shoulder_contract_ms <= 0 || extend_lift_ms <= 0 || place_ms <= 0 || step_period_ms <= 0 ||
      translate_deg <= 0 || rotate_deg <= 0 || step_length_m <= 0) {
    throw ContractError("GaitParams: all parameters must be positive");
  }
}

// Forward: shoulders I,II sweep against III,IV; the diagonal pair I,III
// lifts its elbows while II,IV stay planted. Turns sweep all four
// shoulders in one direction so the body yaws in place.
std::vector<ServoPhase> step_sequence(StepCommand cmd, const GaitParams& p) {
  if (cmd == StepCommand::Stop) return {};
  p.validate();

  const double amp = cmd == StepCommand::Forward ? p.translate_deg : p.rotate_deg;
  std::array<double, 4> shoulder_sign{};
  switch (cmd) {
    case StepCommand::Forward: shoulder_sign = {1, 1, -1, -1}; break;
    case StepCommand::Left: shoulder_sign = {1, 1, 1, 1}; break;
    case StepCommand::Right: shoulder_sign = {-1, -1, -1, -1}; break;
    case StepCommand::Stop: break;
  }
  constexpr std::array<double, 4> lifting = {1, 0, 1, 0};  // I and III

  std::vector<ServoPhase> phases(3);
  phases[0].duration_ms = p.shoulder_contract_ms;
  phases[1].duration_ms = p.extend_lift_ms;
  phases[2].duration_ms = p.place_ms;
  for (int q = 0; q < 4; ++q) {
    const int s = servo_index(static_cast<Quadrant>(q), Joint::Shoulder);
    const int e = servo_index(static_cast<Quadrant>(q), Joint::Elbow);
    phases[0].targets[s] = shoulder_sign[q] * amp;
    phases[1].targets[s] = -shoulder_sign[q] * amp / 2;
    phases[2].targets[s] = -shoulder_sign[q] * amp / 2;
    phases[1].targets[e] = lifting[q] * amp;
    phases[2].targets[e] = -lifting[q] * amp;
  }
  return phases;
}

int total_duration_ms(const std::vector<ServoPhase>& phases) {
  return std::accumulate(phases.begin(), phases.end(), 0,
                         [](int acc, const ServoPhase& ph) { return acc + ph.duration_ms; });
}

std::string format_servo_trace(const std::vector<ServoPhase>& phases) {
  std::ostringstream out;
  for (const auto& ph : phases) {
    out << ph.duration_ms;
    for (double d : ph.targets) out << ' ' << d;
    out << '\n';
  }
  return out.str();
}

double normalize_angle(double a) {
  constexpr double two_pi = 2 * std::numbers::pi;
  a = std::remainder(a, two_pi);  // [-pi, pi]
  if (a <= -std::numbers::pi) a += two_pi;
  return a;
}

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

RobotPose apply_step(const RobotPose& pose, StepCommand cmd, const GaitParams& p) {
  if (cmd == StepCommand::Stop) return pose;
  RobotPose next = pose;
  if (cmd == StepCommand::Left) next.heading = normalize_angle(pose.heading + deg_to_rad(p.rotate_deg));
  if (cmd == StepCommand::Right) next.heading = normalize_angle(pose.heading - deg_to_rad(p.rotate_deg));
  next.x += p.step_length_m * std::cos(next.heading);
  next.y += p.step_length_m * std::sin(next.heading);
  return next;
}

}  // namespace linefollow
