#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <vector>

#include "rovertrack/common.hpp"
#include "rovertrack/dynamics.hpp"
#include "rovertrack/filters.hpp"
#include "rovertrack/rng.hpp"
#include "rovertrack/terrain.hpp"
#include "rovertrack/trajectory.hpp"

namespace rovertrack {

inline constexpr int kObsDim = 4;
inline constexpr int kActDim = 2;

/// What the policy sees: target relative position in the (sensed) rover frame
/// and the relative yaw error encoded on the unit circle.
struct Observation {
  Vec2 rel_pos;
  double sin_yaw_err = 0.0;
  double cos_yaw_err = 1.0;

  std::array<double, kObsDim> to_array() const { return {rel_pos.x, rel_pos.y, sin_yaw_err, cos_yaw_err}; }
  bool operator==(const Observation&) const = default;
};

/// Per-episode sensing noise: constant bias plus white jitter.
struct NoiseModel {
  Vec2 bias_pos;
  double bias_yaw = 0.0;
  double step_pos_std = 0.0;
  double step_yaw_std = 0.0;
};

/// Observation built from a (sensed) rover pose and the target pose. Position
/// noise is added per rover-frame axis; yaw noise is added to the angle before
/// encoding.
Observation make_observation(const Pose2& rover, const Pose2& target, const NoiseModel& noise, CounterRng& rng);

struct RewardWeights {
  double dist = 0.1;
  double heading = 0.2;
  double pos_align = 1.0;
  double yaw_align = 0.5;
  double stillness = 0.5;
  double action_rate = 0.05;
  double sigma_pos = 0.2;               // m
  double sigma_yaw = deg_to_rad(10.0);  // rad
  double sigma_action = 0.1;
};

struct RewardTerms {
  double dist_penalty = 0.0;
  double heading_reward = 0.0;
  double pos_align_reward = 0.0;
  double yaw_align_reward = 0.0;
  double stillness_reward = 0.0;
  double action_rate_penalty = 0.0;
  double total = 0.0;
};

/// Shaped tracking reward on the true rover pose. The bearing term uses
/// cos(angle between rover heading and the direction to the target), taken as
/// 1 when the rover sits exactly on the target.
RewardTerms compute_reward(const Pose2& rover, const Pose2& target, const Action& action, const Action& prev_action,
                           const RewardWeights& weights);

/// FIFO with a variable delay. Each push releases the items that are due:
/// normally exactly one. When the delay shrinks, the surplus queued items are
/// released at once, in order. When it grows, nothing is due for a few pushes
/// and the caller repeats the last released value. Every pushed item is
/// released exactly once.
template <typename T>
class DelayLine {
 public:
  explicit DelayLine(int delay = 0) : delay_(delay) {}

  /// Clears the queue and pre-fills it so the first `delay` pushes release `fill`.
  void reset(int delay, const T& fill) {
    delay_ = delay;
    queue_.assign(static_cast<std::size_t>(delay), fill);
  }

  void set_delay(int delay) { delay_ = delay; }
  int delay() const { return delay_; }
  std::size_t pending() const { return queue_.size(); }

  /// Enqueue one item and append the released items to `out`.
  void push(const T& item, std::vector<T>& out) {
    queue_.push_back(item);
    while (static_cast<int>(queue_.size()) > delay_) {
      out.push_back(queue_.front());
      queue_.pop_front();
    }
  }

 private:
  int delay_;
  std::deque<T> queue_;
};

struct DelayModel {
  int obs_delay = 0;  // steps, {0, 1}
  int act_delay = 0;  // steps, {0..3}
};

struct NoiseConfig {
  double bias_pos_std = 0.01;
  double bias_yaw_std = deg_to_rad(2.5);
  double step_pos_std = 0.0025;
  double step_yaw_std = deg_to_rad(0.5);
};

struct DelayConfig {
  int max_obs_delay = 1;
  int max_act_delay = 3;
  int resample_interval_steps = 25;
  double resample_probability = 0.01;
};

/// Per-episode domain randomization distributions.
struct RandomizationRanges {
  std::array<double, 2> gravity_magnitude{1.62, 9.81};
  double gravity_max_tilt = deg_to_rad(2.0);
  double offset_xy_std = 0.005;
  double offset_yaw_std = deg_to_rad(1.0);
  std::array<double, 2> slip_lin{0.0, 0.3};
  std::array<double, 2> slip_ang{0.0, 0.3};
};

struct RandomizationToggles {
  bool gravity = true;
  bool base_offset = true;
  bool slip = true;
  bool obs_noise = true;
  bool delays = true;

  static RandomizationToggles all_off() { return {false, false, false, false, false}; }
};

struct SpawnConfig {
  double rover_half_extent = 3.0;  // rover spawns uniformly in [-h, h]^2
  double target_offset_max = 1.5;  // target starts within this distance
};

struct EnvConfig {
  DynamicsParams dynamics;
  RandomizationRanges ranges;
  NoiseConfig noise;
  DelayConfig delay;
  RewardWeights reward;
  TrainingTrajectoryParams trajectory;
  SpawnConfig spawn;
  int episode_steps = 1500;  // 60 s at 25 Hz
  FilterSpec filter;         // applied to policy output before the action delay

  void validate() const;
};

/// Ground truth available to privileged (scripted) controllers and loggers.
struct PrivilegedState {
  double t = 0.0;
  Pose2 rover;
  Pose2 target;
};

struct EnvStepRecord {
  double t = 0.0;
  Pose2 rover;
  Pose2 target;
  Action raw_action{0.0, 0.0};
  Action applied_action{0.0, 0.0};
  Observation observation;
  RewardTerms reward;
  bool terminated = false;
  bool truncated = false;
};

struct StepInfo {
  bool action_non_finite = false;
  bool left_extent = false;
  int obs_delay = 0;
  int act_delay = 0;
  int actions_applied = 1;  // > 1 when a delay decrease released a backlog
  bool auto_reset = false;  // set by the batch runner
  Observation final_observation;  // valid when auto_reset
};

struct StepOutput {
  Observation observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  StepInfo info;
  RewardTerms terms;
};

/// Per-episode draws; exposed for tests and logging.
struct EpisodeRandomization {
  DynamicsParams dynamics;
  NoiseModel noise;
  DelayModel delays;
};

/// Dynamic waypoint-tracking task on one terrain.
class RoverEnv {
 public:
  RoverEnv(EnvConfig config, RandomizationToggles toggles, std::shared_ptr<const Terrain> terrain,
           std::uint64_t master_seed, std::uint64_t instance_id);

  /// New training episode: per-episode randomization, spawn and a fresh
  /// random trajectory, all keyed by (master seed, instance, episode).
  Observation reset(std::uint64_t episode_id);

  /// Episode on a given trajectory (evaluation). The rover starts on the
  /// trajectory start pose unless `start` is given.
  Observation reset_with_trajectory(std::uint64_t episode_id, std::shared_ptr<const WaypointTrajectory> trajectory,
                                    int episode_steps, std::optional<Pose2> start = std::nullopt);

  StepOutput step(const Action& raw_action);

  const EnvStepRecord& last_record() const { return record_; }
  PrivilegedState privileged_state() const { return {t_, rover_.pose, trajectory_->pose(t_)}; }
  const EpisodeRandomization& randomization() const { return random_; }
  const Terrain& terrain() const { return *terrain_; }
  std::shared_ptr<const Terrain> terrain_ptr() const { return terrain_; }
  const EnvConfig& config() const { return config_; }
  int step_count() const { return steps_; }
  std::uint64_t episode_id() const { return episode_id_; }

 private:
  EpisodeRandomization draw_randomization(std::uint64_t episode_id) const;
  Observation begin_episode(std::uint64_t episode_id, Pose2 rover_start);

  EnvConfig config_;
  RandomizationToggles toggles_;
  std::shared_ptr<const Terrain> terrain_;
  std::uint64_t master_seed_;
  std::uint64_t instance_id_;

  std::uint64_t episode_id_ = 0;
  EpisodeRandomization random_;
  std::shared_ptr<const WaypointTrajectory> trajectory_;
  int episode_steps_ = 1500;
  RoverState rover_;
  double t_ = 0.0;
  int steps_ = 0;
  bool needs_reset_ = true;
  ActionFilter filter_;
  DelayLine<Action> action_delay_;
  DelayLine<Observation> obs_delay_;
  Action last_applied_{0.0, 0.0};
  Observation last_emitted_obs_;
  CounterRng noise_rng_{0};
  CounterRng delay_rng_{0};
  EnvStepRecord record_;
  std::vector<Action> released_actions_;
  std::vector<Observation> released_obs_;
};

}  // namespace rovertrack
