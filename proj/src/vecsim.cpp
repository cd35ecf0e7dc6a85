#include "rovertrack/vecsim.hpp"

#include <string>
#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace rovertrack {

std::string_view to_string(Regime regime) { return regime == Regime::kStacked ? "stacked" : "procedural"; }

Regime parse_regime(std::string_view name) {
  if (name == "stacked" || name == "static") return Regime::kStacked;
  if (name == "procedural") return Regime::kProcedural;
  throw ConfigError("unknown regime '" + std::string(name) + "'");
}

void RegimeConfig::validate() const {
  if (n_envs < 1) throw ConfigError("vecsim: n_envs must be >= 1");
  if (workers < 0) throw ConfigError("vecsim: workers must be >= 0");
  terrain.validate();
  env.validate();
}

std::uint64_t instance_terrain_seed(const RegimeConfig& cfg, int instance) {
  const auto i = cfg.regime == Regime::kStacked ? 0u : static_cast<std::uint64_t>(instance);
  return stream_key({cfg.master_seed, tag(Stream::kTerrain), cfg.terrain.seed, i});
}

void BatchStep::resize(int n) {
  const auto un = static_cast<std::size_t>(n);
  observations.assign(un * kObsDim, 0.0);
  rewards.assign(un, 0.0);
  terminated.assign(un, 0);
  truncated.assign(un, 0);
  infos.assign(un, StepInfo{});
}

void write_observation(const Observation& obs, std::span<double> out) {
  const auto a = obs.to_array();
  for (int k = 0; k < kObsDim; ++k) out[k] = a[k];
}

struct VecEnv::Pool {
  explicit Pool(int workers) : arena(workers > 0 ? workers : tbb::task_arena::automatic) {}
  tbb::task_arena arena;
};

VecEnv::VecEnv(RegimeConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  pool_ = std::make_unique<Pool>(cfg_.workers);
  const int n = cfg_.n_envs;
  const int n_terrains = cfg_.regime == Regime::kStacked ? 1 : n;
  terrains_.resize(static_cast<std::size_t>(n_terrains));
  std::vector<std::string> errors(static_cast<std::size_t>(n_terrains));
  pool_->arena.execute([&] {
    tbb::parallel_for(0, n_terrains, [&](int i) {
      try {
        TerrainParams p = cfg_.terrain;
        p.seed = instance_terrain_seed(cfg_, i);
        terrains_[static_cast<std::size_t>(i)] = std::make_shared<const Terrain>(generate_terrain(p));
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(i)] = e.what();
      }
    });
  });
  for (int i = 0; i < n_terrains; ++i)
    if (!errors[static_cast<std::size_t>(i)].empty())
      throw ConfigError("vecsim: terrain for instance " + std::to_string(i) + ": " + errors[static_cast<std::size_t>(i)]);

  envs_.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    envs_.push_back(std::make_unique<RoverEnv>(cfg_.env, cfg_.toggles, terrains_[n_terrains == 1 ? 0 : i],
                                               cfg_.master_seed, static_cast<std::uint64_t>(i)));
  episode_.assign(static_cast<std::size_t>(n), 0);
  reset_obs_.assign(static_cast<std::size_t>(n) * kObsDim, 0.0);
  batch_.resize(n);
}

VecEnv::~VecEnv() = default;

template <typename Fn>
void VecEnv::for_each_instance(Fn&& fn) {
  const int n = size();
  pool_->arena.execute([&] {
    tbb::parallel_for(tbb::blocked_range<int>(0, n, 4), [&](const tbb::blocked_range<int>& r) {
      for (int i = r.begin(); i != r.end(); ++i) fn(i);
    });
  });
}

const std::vector<double>& VecEnv::reset() {
  for_each_instance([this](int i) {
    const auto ui = static_cast<std::size_t>(i);
    episode_[ui] = 0;
    const Observation obs = envs_[ui]->reset(0);
    write_observation(obs, std::span<double>(reset_obs_).subspan(ui * kObsDim, kObsDim));
  });
  return reset_obs_;
}

const BatchStep& VecEnv::step(std::span<const double> actions) {
  if (actions.size() != static_cast<std::size_t>(size()) * kActDim)
    throw UsageError("vecsim: expected " + std::to_string(size() * kActDim) + " action values, got " +
                     std::to_string(actions.size()));
  for_each_instance([this, actions](int i) {
    const auto ui = static_cast<std::size_t>(i);
    RoverEnv& env = *envs_[ui];
    StepOutput out = env.step({actions[ui * kActDim], actions[ui * kActDim + 1]});
    Observation obs = out.observation;
    if (out.truncated || out.terminated) {
      out.info.auto_reset = true;
      out.info.final_observation = out.observation;
      obs = env.reset(++episode_[ui]);
    }
    write_observation(obs, std::span<double>(batch_.observations).subspan(ui * kObsDim, kObsDim));
    batch_.rewards[ui] = out.reward;
    batch_.terminated[ui] = out.terminated ? 1 : 0;
    batch_.truncated[ui] = out.truncated ? 1 : 0;
    batch_.infos[ui] = out.info;
  });
  return batch_;
}

std::uint64_t VecEnv::terrain_checksum(int i) const { return env(i).terrain().field.checksum(); }

std::size_t VecEnv::memory_footprint() const {
  std::size_t bytes = 0;
  for (const auto& t : terrains_)
    bytes += sizeof(Terrain) + t->field.memory_bytes() + t->craters.capacity() * sizeof(Crater) +
             t->boulders.capacity() * sizeof(Boulder);
  // Per-instance state: the env object plus its training trajectory samples.
  const auto traj_samples =
      static_cast<std::size_t>(cfg_.env.trajectory.horizon / cfg_.env.trajectory.dt) + 2;
  bytes += envs_.size() * (sizeof(RoverEnv) + traj_samples * sizeof(Pose2));
  bytes += batch_.observations.capacity() * sizeof(double) + batch_.infos.capacity() * sizeof(StepInfo);
  return bytes;
}

int VecEnv::workers() const { return pool_->arena.max_concurrency(); }

}  // namespace rovertrack
