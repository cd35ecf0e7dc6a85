#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rovertrack/episode_log.hpp"
#include "rovertrack/metrics.hpp"
#include "rovertrack/policy.hpp"
#include "rovertrack/vecsim.hpp"

namespace rovertrack {

struct PpoConfig {
  double lr_start = 1e-4;  // decays linearly to 0 over training
  double gamma = 0.997;
  int rollout_len = 128;
  int minibatch = 1024;
  int epochs = 16;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double grad_clip_norm = 0.5;  // applied to actor and critic parameters separately
  double adam_eps = 1e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  bool normalize_advantages = true;
  bool normalize_values = true;
  std::vector<int> hidden{384, 384};
  double log_std_init = -0.6931471805599453;
  std::int64_t total_steps = 2'000'000;
  int n_envs = 64;
  std::uint64_t seed = 0;
  int grad_chunks = 8;  // fixed minibatch split for deterministic gradient sums

  void validate() const;
  int batch_size() const { return rollout_len * n_envs; }
  int updates() const;
  PolicySpec policy_spec() const;
};

/// Learning rate at training fraction f in [0, 1].
double linear_lr(double lr_start, double fraction);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Single-environment time series. A truncated step bootstraps with
/// final_values[t], the value of the state the episode was cut at; a
/// terminated step does not bootstrap. The step after the last one is
/// bootstrapped with `bootstrap_value`.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, double bootstrap_value,
                      std::span<const std::uint8_t> terminated, std::span<const std::uint8_t> truncated,
                      std::span<const double> final_values, double gamma, double lambda);

/// Running mean and variance with batch merging.
class RunningMeanStd {
 public:
  void update(std::span<const double> xs);
  double mean() const { return mean_; }
  double var() const { return var_; }
  double std(double floor = 1e-4) const;
  double count() const { return count_; }
  void set(double mean, double var, double count) {
    mean_ = mean;
    var_ = var;
    count_ = count;
  }

 private:
  double mean_ = 0.0;
  double var_ = 1.0;
  double count_ = 1e-4;
};

class Adam {
 public:
  Adam(std::size_t n, double beta1, double beta2, double eps);
  void step(std::vector<float>& params, const std::vector<float>& grad, double lr);
  std::int64_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<float> m_, v_;
};

/// Scales grad[begin, end) so its Euclidean norm is at most max_norm. Returns
/// the norm before clipping.
double clip_grad_norm(std::vector<float>& grad, std::size_t begin, std::size_t end, double max_norm);

/// Rollout storage, index t * n_envs + i.
struct RolloutBuffer {
  int steps = 0;
  int n_envs = 0;
  std::vector<float> obs;         // kObsDim per entry
  std::vector<float> pre_squash;  // kActDim per entry
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> rewards;
  std::vector<std::uint8_t> terminated;
  std::vector<std::uint8_t> truncated;
  std::vector<double> final_values;
  std::vector<double> advantages;
  std::vector<double> returns;

  void resize(int steps, int n_envs);
  std::size_t size() const { return static_cast<std::size_t>(steps) * static_cast<std::size_t>(n_envs); }
  /// GAE over each environment's column of the buffer.
  void compute_advantages(std::span<const double> bootstrap_values, double gamma, double lambda);
};

/// Deterministic permutation of [0, n) for a given epoch.
std::vector<std::uint32_t> minibatch_order(std::size_t n, std::uint64_t seed, int update, int epoch);

struct LearningCurveRow {
  std::int64_t step = 0;
  double mean_return = 0.0;  // NaN until an episode has finished
  double std_return = 0.0;
};

struct UpdateStats {
  int update = 0;
  double lr = 0.0;
  LossStats loss;
  double actor_grad_norm = 0.0;
  double critic_grad_norm = 0.0;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  Policy policy;
  std::vector<LearningCurveRow> curve;
  std::vector<UpdateStats> updates;
  int update_count = 0;
};

using TrainProgress = std::function<void(const UpdateStats&, const LearningCurveRow&)>;

/// PPO on a vectorized batch. Throws TrainingError on non-finite loss or
/// parameters; `last_good` (if given) then holds the last finite policy.
TrainResult train(const PpoConfig& cfg, const RegimeConfig& regime, const TrainProgress& progress = {},
                  Policy* last_good = nullptr);

void write_learning_curve_csv(std::ostream& out, const std::vector<LearningCurveRow>& rows);

// --- evaluation ----------------------------------------------------------------

using Controller = std::function<Action(const Observation&, const PrivilegedState&)>;

Controller greedy_controller(const Policy& policy);
Controller zero_controller();
/// Uniform random actions in [-1, 1]^2.
Controller random_controller(std::uint64_t seed);

/// Classical tracking law on the true state (no noise, no delay knowledge):
/// feed-forward of the reference velocity plus pose-error feedback.
Controller tracking_controller(std::shared_ptr<const WaypointTrajectory> trajectory, const DynamicsParams& dynamics);

struct EvalConfig {
  TrajectoryKind trajectory = TrajectoryKind::kCapsule;
  double speed = 0.05;  // m/s
  FilterSpec filter;
  int episodes = 1;
  double laps = 2.0;  // episode length in target laps
  std::uint64_t seed = 0;
  RandomizationToggles toggles;
  TerrainParams terrain;
  EnvConfig env;
  EvalPathGeometry geometry;
};

/// Held-out terrain seed for evaluation episode i.
std::uint64_t eval_terrain_seed(std::uint64_t seed, int episode);

struct EvalResult {
  MetricsSummary mean;                    // averaged over episodes
  std::vector<MetricsSummary> episodes;   // per episode, after the first lap
  std::vector<EpisodeLog> logs;
  double path_length = 0.0;
  double period = 0.0;
};

/// Runs `episodes` evaluation episodes on held-out terrains. `make_controller`
/// receives the trajectory of each episode. If `baseline` is given (logs of a
/// reference run with the same config), jerk_rel is filled per episode.
EvalResult evaluate(const std::function<Controller(std::shared_ptr<const WaypointTrajectory>)>& make_controller,
                    const EvalConfig& cfg, const std::vector<EpisodeLog>* baseline = nullptr);

EvalResult evaluate_policy(const Policy& policy, const EvalConfig& cfg,
                           const std::vector<EpisodeLog>* baseline = nullptr);

/// Undiscounted episodic return of a controller on training-distribution
/// episodes (the same episodes for any controller given the regime).
std::vector<double> episode_returns(const Controller& controller, const RegimeConfig& regime, int episodes_per_env);

}  // namespace rovertrack
