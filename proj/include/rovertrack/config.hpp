#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "rovertrack/ppo.hpp"
#include "rovertrack/vecsim.hpp"

namespace rovertrack {

using Json = nlohmann::ordered_json;

/// Evaluation grid used by eval and sweep.
struct EvalGrid {
  std::vector<TrajectoryKind> trajectories{TrajectoryKind::kCapsule};
  std::vector<double> speeds{0.05, 0.15, 0.25};
  std::vector<std::string> filters{"none", "ma", "sg", "bw"};
  int episodes = 1;
  double laps = 2.0;
  std::uint64_t seed = 1;
  RandomizationToggles toggles;
  EvalPathGeometry geometry;
};

/// Everything a run needs. The trainer's n_envs is taken from the regime.
struct RunConfig {
  RegimeConfig regime;
  PpoConfig ppo;
  EvalGrid eval;

  void validate() const;
  PpoConfig resolved_ppo() const;
  EvalConfig eval_config(TrajectoryKind kind, double speed, const FilterSpec& filter) const;
};

// JSON forms. Decoding starts from the defaults, rejects unknown keys and
// type mismatches with ConfigError naming the offending key path.
Json to_json(const RunConfig& c);
Json to_json(const RegimeConfig& c);
Json to_json(const PpoConfig& c);
Json to_json(const TerrainParams& c);
Json to_json(const EnvConfig& c);
Json to_json(const FilterSpec& c);

RunConfig run_config_from_json(const Json& j);
RegimeConfig regime_config_from_json(const Json& j);
FilterSpec filter_spec_from_json(const Json& j);

RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& c);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace rovertrack
