#include "rovertrack/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace rovertrack {

void DynamicsParams::validate() const {
  if (!(max_lin_speed > 0.0) || !(max_ang_speed > 0.0)) throw ConfigError("dynamics: max speeds must be > 0");
  if (!(dt > 0.0)) throw ConfigError("dynamics: dt must be > 0");
  if (!(slip_lin >= 0.0 && slip_lin < 1.0) || !(slip_ang >= 0.0 && slip_ang < 1.0))
    throw ConfigError("dynamics: slip coefficients must lie in [0, 1)");
  for (double g : gravity)
    if (!std::isfinite(g)) throw ConfigError("dynamics: gravity must be finite");
}

MappedAction map_action(const Action& action, const DynamicsParams& params) {
  MappedAction out;
  for (int i = 0; i < 2; ++i) {
    double a = action[i];
    if (!std::isfinite(a)) {
      a = 0.0;
      out.non_finite = true;
    }
    out.clamped[i] = std::clamp(a, -1.0, 1.0);
  }
  out.command = {out.clamped[0] * params.max_lin_speed, out.clamped[1] * params.max_ang_speed};
  return out;
}

Vec2 downhill_drift(Vec2 slope, const DynamicsParams& params) {
  if (params.downhill_drift_gain == 0.0) return {};
  const double inv = 1.0 / std::sqrt(1.0 + slope.x * slope.x + slope.y * slope.y);
  const double nx = -slope.x * inv, ny = -slope.y * inv, nz = inv;
  const auto& g = params.gravity;
  const double gn = g[0] * nx + g[1] * ny + g[2] * nz;
  return {params.downhill_drift_gain * (g[0] - gn * nx), params.downhill_drift_gain * (g[1] - gn * ny)};
}

RoverStepResult step_rover(const RoverState& state, VelocityCommand command, const DynamicsParams& params,
                           const HeightField& field, double dt) {
  const double v = (1.0 - params.slip_lin) * command.linear;
  const double w = (1.0 - params.slip_ang) * command.angular;
  const Vec2 drift = downhill_drift(field.sample_slope(state.pose.position).gradient, params);

  const double yaw_mid = state.pose.yaw + 0.5 * w * dt;
  Vec2 p = state.pose.position;
  p.x += (v * std::cos(yaw_mid) + drift.x) * dt;
  p.y += (v * std::sin(yaw_mid) + drift.y) * dt;

  RoverStepResult out;
  out.drift = drift;
  out.left_extent = !field.contains(p);
  out.state.pose.position = out.left_extent ? field.clamp(p) : p;
  out.state.pose.yaw = wrap_angle(state.pose.yaw + w * dt);
  out.state.last_command = command;
  return out;
}

Pose2 apply_base_offset(const Pose2& true_pose, const BaseFrameOffset& offset) {
  return {true_pose.position + rotate(offset.xy, true_pose.yaw), wrap_angle(true_pose.yaw + offset.yaw)};
}

}  // namespace rovertrack
