#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "rovertrack/common.hpp"

namespace rovertrack {

enum class TrajectoryKind { kTrainingRandom, kCapsule, kRectangle, kCircle, kLissajous, kLemniscate };

std::string_view to_string(TrajectoryKind kind);
/// Throws ConfigError for unknown names.
TrajectoryKind parse_trajectory_kind(std::string_view name);

/// Time-parameterized target pose.
class WaypointTrajectory {
 public:
  virtual ~WaypointTrajectory() = default;
  virtual Pose2 pose(double t) const = 0;
  virtual TrajectoryKind kind() const = 0;
  virtual double target_speed() const = 0;
  /// Lap time of closed paths; 0 for open (training) trajectories.
  virtual double period() const { return 0.0; }
  /// Perimeter of closed paths; 0 for open trajectories.
  virtual double path_length() const { return 0.0; }
};

/// Parameters of the smoothed random target motion used in training.
struct TrainingTrajectoryParams {
  double bounds_half_extent = 4.5;     // reflecting box [-b, b]^2
  std::array<double, 2> speed_range{0.0, 0.25};  // per-episode speed clamp ~ U[range]
  double relaxation_time = 5.0;        // OU relaxation of the driving velocity
  double smoothing_time = 2.0;         // first-order lag from driving to target velocity
  double horizon = 61.0;               // s of samples to precompute
  double dt = 0.04;
};

/// Target velocity follows an OU process (stationary std = speed clamp per
/// axis) smoothed by a first-order lag, clamped to the episode speed and
/// reflected at the bounds. Yaw follows the velocity direction and freezes
/// when the target is at rest. Samples on the dt grid; linear interpolation
/// in between, held constant past the horizon.
class SampledTrajectory final : public WaypointTrajectory {
 public:
  SampledTrajectory(Pose2 start, double speed_limit, const TrainingTrajectoryParams& params, std::uint64_t seed);

  Pose2 pose(double t) const override;
  TrajectoryKind kind() const override { return TrajectoryKind::kTrainingRandom; }
  double target_speed() const override { return speed_limit_; }
  const std::vector<Pose2>& samples() const { return samples_; }
  double dt() const { return dt_; }

 private:
  std::vector<Pose2> samples_;
  double dt_;
  double speed_limit_;
};

/// Closed path traversed at constant speed via arc-length reparameterization.
class ClosedPathTrajectory : public WaypointTrajectory {
 public:
  Pose2 pose(double t) const override;
  TrajectoryKind kind() const override { return kind_; }
  double target_speed() const override { return speed_; }
  double period() const override { return length_ / speed_; }
  double path_length() const override { return length_; }

  /// Pose at arc length s (wrapped into [0, length)).
  virtual Pose2 pose_at_arclength(double s) const = 0;

 protected:
  ClosedPathTrajectory(TrajectoryKind kind, double speed, double length);
  void set_length(double length) { length_ = length; }

 private:
  TrajectoryKind kind_;
  double speed_;
  double length_;
};

/// Smooth parametric closed curve c(u), u in [0, 2pi). Arc length is tabulated
/// with composite Simpson quadrature of |c'(u)|; the inverse map u(s) uses
/// cubic Hermite interpolation with du/ds = 1/|c'(u)| at the nodes.
class ParametricPath final : public ClosedPathTrajectory {
 public:
  using Curve = std::function<Vec2(double)>;
  ParametricPath(TrajectoryKind kind, double speed, Curve curve, Curve derivative, int table_size = 4096);

  Pose2 pose_at_arclength(double s) const override;
  double parameter_at_arclength(double s) const;

 private:
  Curve curve_;
  Curve derivative_;
  std::vector<double> u_nodes_;
  std::vector<double> s_nodes_;
  std::vector<double> speed_nodes_;  // |c'(u)| at nodes
};

/// Closed path built from straight and circular segments (capsule, rounded rectangle).
class SegmentPath final : public ClosedPathTrajectory {
 public:
  struct Segment {
    Vec2 start;
    double heading;    // initial tangent direction
    double length;
    double curvature;  // 0 for straight segments; signed (left turn positive)
  };
  SegmentPath(TrajectoryKind kind, double speed, std::vector<Segment> segments);

  Pose2 pose_at_arclength(double s) const override;
  const std::vector<Segment>& segments() const { return segments_; }

 private:
  std::vector<Segment> segments_;
};

/// Evaluation path geometry (meters), centered on the origin.
struct EvalPathGeometry {
  double capsule_straight = 1.5;
  double capsule_radius = 0.75;
  double rectangle_width = 3.0;
  double rectangle_height = 2.0;
  double rectangle_corner_radius = 0.3;
  double circle_radius = 1.0;
  double lissajous_ax = 1.5;  // x = ax sin(3u)
  double lissajous_ay = 1.0;  // y = ay sin(2u)
  double lemniscate_a = 1.5;  // Bernoulli lemniscate half-width
};

/// Named closed evaluation path at constant speed.
std::unique_ptr<ClosedPathTrajectory> eval_trajectory(TrajectoryKind kind, double target_speed,
                                                      const EvalPathGeometry& geometry = {});

/// Randomized training trajectory starting at `start`; deterministic per seed.
std::unique_ptr<SampledTrajectory> gen_training_trajectory(std::uint64_t seed, Pose2 start,
                                                           const TrainingTrajectoryParams& params);

}  // namespace rovertrack
