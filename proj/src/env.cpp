#include "rovertrack/env.hpp"

#include <algorithm>
#include <cmath>

namespace rovertrack {

Observation make_observation(const Pose2& rover, const Pose2& target, const NoiseModel& noise, CounterRng& rng) {
  const double nx = rng.normal();
  const double ny = rng.normal();
  const double nyaw = rng.normal();
  Vec2 rel = rotate(target.position - rover.position, -rover.yaw);
  rel.x += noise.bias_pos.x + noise.step_pos_std * nx;
  rel.y += noise.bias_pos.y + noise.step_pos_std * ny;
  const double e = wrap_angle(target.yaw - rover.yaw) + noise.bias_yaw + noise.step_yaw_std * nyaw;
  return {rel, std::sin(e), std::cos(e)};
}

RewardTerms compute_reward(const Pose2& rover, const Pose2& target, const Action& action, const Action& prev_action,
                           const RewardWeights& w) {
  const Vec2 dp = target.position - rover.position;
  const double dist2 = dp.squared_norm();
  const double dist = std::sqrt(dist2);
  const double cos_bearing =
      dist > 0.0 ? (std::cos(rover.yaw) * dp.x + std::sin(rover.yaw) * dp.y) / dist : 1.0;
  const double e = wrap_angle(target.yaw - rover.yaw);
  const double da0 = action[0] - prev_action[0];
  const double da1 = action[1] - prev_action[1];
  const double da2 = da0 * da0 + da1 * da1;

  const double near = std::exp(-dist2 / (w.sigma_pos * w.sigma_pos));
  const double aligned = std::exp(-(e * e) / (w.sigma_yaw * w.sigma_yaw));
  const double calm = std::exp(-da2 / (w.sigma_action * w.sigma_action));

  RewardTerms r;
  r.dist_penalty = -w.dist * dist;
  r.heading_reward = w.heading * cos_bearing;
  r.pos_align_reward = w.pos_align * near;
  r.yaw_align_reward = w.yaw_align * near * aligned;
  r.stillness_reward = w.stillness * near * aligned * calm;
  r.action_rate_penalty = -w.action_rate * da2;
  r.total = r.dist_penalty + r.heading_reward + r.pos_align_reward + r.yaw_align_reward + r.stillness_reward +
            r.action_rate_penalty;
  return r;
}

void EnvConfig::validate() const {
  dynamics.validate();
  filter.validate();
  if (episode_steps < 1) throw ConfigError("env: episode_steps must be >= 1");
  if (delay.max_obs_delay < 0 || delay.max_act_delay < 0) throw ConfigError("env: delays must be >= 0");
  if (delay.resample_interval_steps < 1) throw ConfigError("env: resample interval must be >= 1");
  if (!(delay.resample_probability >= 0.0 && delay.resample_probability <= 1.0))
    throw ConfigError("env: resample probability must lie in [0, 1]");
  if (!(reward.sigma_pos > 0.0 && reward.sigma_yaw > 0.0 && reward.sigma_action > 0.0))
    throw ConfigError("env: reward widths must be > 0");
  if (!(ranges.slip_lin[0] >= 0.0 && ranges.slip_lin[1] < 1.0 && ranges.slip_ang[0] >= 0.0 && ranges.slip_ang[1] < 1.0))
    throw ConfigError("env: slip ranges must lie in [0, 1)");
}

RoverEnv::RoverEnv(EnvConfig config, RandomizationToggles toggles, std::shared_ptr<const Terrain> terrain,
                   std::uint64_t master_seed, std::uint64_t instance_id)
    : config_(std::move(config)),
      toggles_(toggles),
      terrain_(std::move(terrain)),
      master_seed_(master_seed),
      instance_id_(instance_id),
      filter_(config_.filter) {
  config_.validate();
  if (!terrain_) throw ConfigError("env: terrain must not be null");
}

EpisodeRandomization RoverEnv::draw_randomization(std::uint64_t episode_id) const {
  // Every value is drawn regardless of the toggles so that the stream layout
  // does not depend on which randomizations are enabled.
  CounterRng rng(stream_key({master_seed_, instance_id_, episode_id, tag(Stream::kRandomization)}));
  const auto& r = config_.ranges;
  const double g_mag = rng.uniform(r.gravity_magnitude[0], r.gravity_magnitude[1]);
  const double tilt = r.gravity_max_tilt * rng.uniform();
  const double azimuth = kTwoPi * rng.uniform();
  const Vec2 offset_xy{rng.normal(0.0, r.offset_xy_std), rng.normal(0.0, r.offset_xy_std)};
  const double offset_yaw = rng.normal(0.0, r.offset_yaw_std);
  const double slip_lin = rng.uniform(r.slip_lin[0], r.slip_lin[1]);
  const double slip_ang = rng.uniform(r.slip_ang[0], r.slip_ang[1]);
  const Vec2 bias_pos{rng.normal(0.0, config_.noise.bias_pos_std), rng.normal(0.0, config_.noise.bias_pos_std)};
  const double bias_yaw = rng.normal(0.0, config_.noise.bias_yaw_std);
  const int obs_delay = static_cast<int>(rng.uniform_int(0, config_.delay.max_obs_delay));
  const int act_delay = static_cast<int>(rng.uniform_int(0, config_.delay.max_act_delay));

  EpisodeRandomization out;
  out.dynamics = config_.dynamics;
  if (toggles_.gravity)
    out.dynamics.gravity = {g_mag * std::sin(tilt) * std::cos(azimuth), g_mag * std::sin(tilt) * std::sin(azimuth),
                            -g_mag * std::cos(tilt)};
  if (toggles_.base_offset) out.dynamics.base_frame_offset = {offset_xy, offset_yaw};
  if (toggles_.slip) {
    out.dynamics.slip_lin = slip_lin;
    out.dynamics.slip_ang = slip_ang;
  }
  if (toggles_.obs_noise)
    out.noise = {bias_pos, bias_yaw, config_.noise.step_pos_std, config_.noise.step_yaw_std};
  if (toggles_.delays) out.delays = {obs_delay, act_delay};
  return out;
}

Observation RoverEnv::begin_episode(std::uint64_t episode_id, Pose2 rover_start) {
  episode_id_ = episode_id;
  random_ = draw_randomization(episode_id);
  noise_rng_ = CounterRng(stream_key({master_seed_, instance_id_, episode_id, tag(Stream::kStepNoise)}));
  delay_rng_ = CounterRng(stream_key({master_seed_, instance_id_, episode_id, tag(Stream::kDelayResample)}));
  rover_ = {rover_start, {}};
  t_ = 0.0;
  steps_ = 0;
  filter_.reset();
  last_applied_ = {0.0, 0.0};
  action_delay_.reset(random_.delays.act_delay, last_applied_);

  const Pose2 target = trajectory_->pose(0.0);
  const Observation obs = make_observation(apply_base_offset(rover_.pose, random_.dynamics.base_frame_offset), target,
                                           random_.noise, noise_rng_);
  obs_delay_.reset(random_.delays.obs_delay, obs);
  last_emitted_obs_ = obs;

  record_ = {};
  record_.rover = rover_.pose;
  record_.target = target;
  record_.observation = obs;
  needs_reset_ = false;
  return obs;
}

Observation RoverEnv::reset(std::uint64_t episode_id) {
  CounterRng spawn(stream_key({master_seed_, instance_id_, episode_id, tag(Stream::kSpawn)}));
  const double h = config_.spawn.rover_half_extent;
  Pose2 rover{{spawn.uniform(-h, h), spawn.uniform(-h, h)}, wrap_angle(spawn.uniform(-kPi, kPi))};
  const double radius = config_.spawn.target_offset_max * std::sqrt(spawn.uniform());
  const double angle = spawn.uniform(-kPi, kPi);
  const double b = config_.trajectory.bounds_half_extent;
  Pose2 target_start{rover.position + Vec2{radius * std::cos(angle), radius * std::sin(angle)},
                     wrap_angle(spawn.uniform(-kPi, kPi))};
  target_start.position = {std::clamp(target_start.position.x, -b, b), std::clamp(target_start.position.y, -b, b)};
  trajectory_ = gen_training_trajectory(
      stream_key({master_seed_, instance_id_, episode_id, tag(Stream::kTrajectory)}), target_start,
      config_.trajectory);
  episode_steps_ = config_.episode_steps;
  return begin_episode(episode_id, rover);
}

Observation RoverEnv::reset_with_trajectory(std::uint64_t episode_id,
                                            std::shared_ptr<const WaypointTrajectory> trajectory, int episode_steps,
                                            std::optional<Pose2> start) {
  if (!trajectory) throw UsageError("env: null trajectory");
  if (episode_steps < 1) throw UsageError("env: episode_steps must be >= 1");
  trajectory_ = std::move(trajectory);
  episode_steps_ = episode_steps;
  return begin_episode(episode_id, start.value_or(trajectory_->pose(0.0)));
}

StepOutput RoverEnv::step(const Action& raw_action) {
  if (needs_reset_) throw UsageError("env: step() called before reset() or after the episode was truncated");
  StepOutput out;

  // Delay resampling happens on whole simulated seconds.
  if (toggles_.delays && steps_ > 0 && steps_ % config_.delay.resample_interval_steps == 0) {
    const bool change_obs = delay_rng_.uniform() < config_.delay.resample_probability;
    const auto new_obs = static_cast<int>(delay_rng_.uniform_int(0, config_.delay.max_obs_delay));
    const bool change_act = delay_rng_.uniform() < config_.delay.resample_probability;
    const auto new_act = static_cast<int>(delay_rng_.uniform_int(0, config_.delay.max_act_delay));
    if (change_obs) {
      random_.delays.obs_delay = new_obs;
      obs_delay_.set_delay(new_obs);
    }
    if (change_act) {
      random_.delays.act_delay = new_act;
      action_delay_.set_delay(new_act);
    }
  }

  bool filter_flag = false;
  const Action filtered = filter_.step(raw_action, &filter_flag);
  out.info.action_non_finite = filter_flag;

  released_actions_.clear();
  action_delay_.push(filtered, released_actions_);
  if (released_actions_.empty()) released_actions_.push_back(last_applied_);

  const Action prev_applied = last_applied_;
  const DynamicsParams& dyn = random_.dynamics;
  const double sub_dt = dyn.dt / static_cast<double>(released_actions_.size());
  for (const Action& a : released_actions_) {
    const MappedAction mapped = map_action(a, dyn);
    out.info.action_non_finite |= mapped.non_finite;
    const RoverStepResult r = step_rover(rover_, mapped.command, dyn, terrain_->field, sub_dt);
    rover_ = r.state;
    out.info.left_extent |= r.left_extent;
    last_applied_ = mapped.clamped;
  }
  out.info.actions_applied = static_cast<int>(released_actions_.size());

  ++steps_;
  t_ = steps_ * dyn.dt;
  const Pose2 target = trajectory_->pose(t_);
  out.terms = compute_reward(rover_.pose, target, last_applied_, prev_applied, config_.reward);

  const Observation fresh = make_observation(apply_base_offset(rover_.pose, dyn.base_frame_offset), target,
                                             random_.noise, noise_rng_);
  released_obs_.clear();
  obs_delay_.push(fresh, released_obs_);
  if (!released_obs_.empty()) last_emitted_obs_ = released_obs_.back();

  out.observation = last_emitted_obs_;
  out.reward = out.terms.total;
  out.truncated = steps_ >= episode_steps_;
  out.terminated = false;
  out.info.obs_delay = random_.delays.obs_delay;
  out.info.act_delay = random_.delays.act_delay;
  if (out.truncated) needs_reset_ = true;

  record_.t = t_;
  record_.rover = rover_.pose;
  record_.target = target;
  record_.raw_action = raw_action;
  record_.applied_action = last_applied_;
  record_.observation = out.observation;
  record_.reward = out.terms;
  record_.terminated = out.terminated;
  record_.truncated = out.truncated;
  return out;
}

}  // namespace rovertrack
