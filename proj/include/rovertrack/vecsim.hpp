#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "rovertrack/env.hpp"

namespace rovertrack {

enum class Regime { kStacked, kProcedural };

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view name);

struct RegimeConfig {
  Regime regime = Regime::kProcedural;
  int n_envs = 64;
  std::uint64_t master_seed = 0;
  RandomizationToggles toggles;
  TerrainParams terrain;  // template; the seed field is replaced per instance
  EnvConfig env;
  int workers = 0;  // 0: use all hardware threads

  void validate() const;
};

/// Terrain seed used by instance i. Stacked runs share the seed of instance 0.
std::uint64_t instance_terrain_seed(const RegimeConfig& cfg, int instance);

struct BatchStep {
  std::vector<double> observations;  // n_envs x kObsDim, row-major
  std::vector<double> rewards;
  std::vector<std::uint8_t> terminated;
  std::vector<std::uint8_t> truncated;
  std::vector<StepInfo> infos;

  void resize(int n);
};

/// N environment instances stepped together. Instances write into disjoint
/// output slots, so results do not depend on the worker count.
class VecEnv {
 public:
  explicit VecEnv(RegimeConfig cfg);
  ~VecEnv();
  VecEnv(const VecEnv&) = delete;
  VecEnv& operator=(const VecEnv&) = delete;

  int size() const { return static_cast<int>(envs_.size()); }
  const RegimeConfig& config() const { return cfg_; }

  /// Resets every instance to episode 0 and returns the n_envs x kObsDim batch.
  const std::vector<double>& reset();

  /// Advances every instance one control step. Truncated instances are reset
  /// to their next episode; the returned observation is then the reset one
  /// and the last observation of the finished episode is in info.
  const BatchStep& step(std::span<const double> actions);

  RoverEnv& env(int i) { return *envs_.at(static_cast<std::size_t>(i)); }
  const RoverEnv& env(int i) const { return *envs_.at(static_cast<std::size_t>(i)); }
  std::uint64_t terrain_checksum(int i) const;
  /// Number of distinct terrain objects held.
  std::size_t terrain_count() const { return terrains_.size(); }
  /// Approximate heap footprint of environments and terrains in bytes.
  std::size_t memory_footprint() const;
  int workers() const;

 private:
  template <typename Fn>
  void for_each_instance(Fn&& fn);

  RegimeConfig cfg_;
  std::vector<std::shared_ptr<const Terrain>> terrains_;
  std::vector<std::unique_ptr<RoverEnv>> envs_;
  std::vector<std::uint64_t> episode_;
  std::vector<double> reset_obs_;
  BatchStep batch_;
  struct Pool;
  std::unique_ptr<Pool> pool_;
};

void write_observation(const Observation& obs, std::span<double> out);

}  // namespace rovertrack
