#pragma once

#include <array>

#include "rovertrack/common.hpp"
#include "rovertrack/terrain.hpp"

namespace rovertrack {

/// Constant transform between the true body frame and the frame used for
/// sensing (calibration error).
struct BaseFrameOffset {
  Vec2 xy;
  double yaw = 0.0;
};

struct DynamicsParams {
  double wheelbase = 0.295;
  double max_lin_speed = 0.40;
  double max_ang_speed = deg_to_rad(60.0);
  double dt = 0.04;
  std::array<double, 3> gravity{0.0, 0.0, -9.81};
  double slip_lin = 0.0;  // fraction of commanded linear speed lost
  double slip_ang = 0.0;  // fraction of commanded yaw rate lost
  double downhill_drift_gain = 0.05;  // s; tangential gravity -> drift velocity
  BaseFrameOffset base_frame_offset;

  void validate() const;
};

struct VelocityCommand {
  double linear = 0.0;   // m/s
  double angular = 0.0;  // rad/s
};

struct MappedAction {
  VelocityCommand command;
  Action clamped{0.0, 0.0};
  bool non_finite = false;  // at least one channel was NaN/inf and was zeroed
};

/// Clamps a normalized action to [-1, 1]^2 and scales it to velocities.
MappedAction map_action(const Action& action, const DynamicsParams& params);

struct RoverState {
  Pose2 pose;
  VelocityCommand last_command;
};

struct RoverStepResult {
  RoverState state;
  Vec2 drift;                 // m/s, slope-induced
  bool left_extent = false;   // position was clamped to the terrain border
};

/// Slope drift velocity from the tangential component of gravity on the
/// local surface with gradient `slope`.
Vec2 downhill_drift(Vec2 slope, const DynamicsParams& params);

/// One explicit-midpoint step of the slip-augmented unicycle.
RoverStepResult step_rover(const RoverState& state, VelocityCommand command, const DynamicsParams& params,
                           const HeightField& field, double dt);

inline RoverStepResult step_rover(const RoverState& state, VelocityCommand command,
                                  const DynamicsParams& params, const HeightField& field) {
  return step_rover(state, command, params, field, params.dt);
}

/// Pose of the sensing frame for a true body pose.
Pose2 apply_base_offset(const Pose2& true_pose, const BaseFrameOffset& offset);

}  // namespace rovertrack
