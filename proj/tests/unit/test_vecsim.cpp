#include <doctest.h>

#include <chrono>
#include <cstring>
#include <set>

#include "rovertrack/rng.hpp"
#include "rovertrack/vecsim.hpp"

using namespace rovertrack;

namespace {

RegimeConfig small(Regime regime, int n, int workers = 1) {
  RegimeConfig cfg;
  cfg.regime = regime;
  cfg.n_envs = n;
  cfg.master_seed = 77;
  cfg.workers = workers;
  cfg.terrain.resolution = 129;
  return cfg;
}

std::vector<double> actions_for(int n, std::uint64_t step) {
  CounterRng rng(stream_key({99, step}));
  std::vector<double> a(static_cast<std::size_t>(n) * kActDim);
  for (double& v : a) v = rng.uniform(-1, 1);
  return a;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Measured about 9e5 env-steps/s on one sandbox core; the floor is the
// desktop target.
constexpr double kMinStepsPerSecond = 1.0e5;

}  // namespace

TEST_CASE("terrain sharing follows the regime") {
  VecEnv stacked(small(Regime::kStacked, 4));
  VecEnv procedural(small(Regime::kProcedural, 4));
  CHECK(stacked.terrain_count() == 1);
  CHECK(procedural.terrain_count() == 4);
  std::set<std::uint64_t> sums;
  for (int i = 0; i < 4; ++i) {
    CHECK(stacked.terrain_checksum(i) == stacked.terrain_checksum(0));
    CHECK(&stacked.env(i).terrain() == &stacked.env(0).terrain());
    sums.insert(procedural.terrain_checksum(i));
  }
  CHECK(sums.size() == 4);
}

TEST_CASE("a batch of one equals a single env") {
  const RegimeConfig cfg = small(Regime::kProcedural, 1);
  VecEnv vec(cfg);
  TerrainParams tp = cfg.terrain;
  tp.seed = instance_terrain_seed(cfg, 0);
  RoverEnv single(cfg.env, cfg.toggles, std::make_shared<const Terrain>(generate_terrain(tp)), cfg.master_seed, 0);

  std::vector<double> obs(kObsDim);
  write_observation(single.reset(0), obs);
  CHECK(same_bits(vec.reset(), obs));
  std::uint64_t episode = 0;
  for (std::uint64_t k = 0; k < 3200; ++k) {
    const auto a = actions_for(1, k);
    const BatchStep& b = vec.step(a);
    StepOutput out = single.step({a[0], a[1]});
    CHECK(b.rewards[0] == out.reward);
    CHECK(b.truncated[0] == (out.truncated ? 1 : 0));
    if (out.truncated) {
      CHECK(b.infos[0].auto_reset);
      CHECK(b.infos[0].final_observation == out.observation);
      out.observation = single.reset(++episode);
    }
    write_observation(out.observation, obs);
    REQUIRE(same_bits(b.observations, obs));
  }
  CHECK(episode == 2);
}

TEST_CASE("worker count does not change results") {
  VecEnv one(small(Regime::kProcedural, 16, 1));
  VecEnv eight(small(Regime::kProcedural, 16, 8));
  CHECK(same_bits(one.reset(), eight.reset()));
  int mismatches = 0;
  for (std::uint64_t k = 0; k < 10000; ++k) {
    const auto a = actions_for(16, k);
    const BatchStep& x = one.step(a);
    const BatchStep& y = eight.step(a);
    if (!same_bits(x.observations, y.observations) || !same_bits(x.rewards, y.rewards) ||
        x.truncated != y.truncated)
      ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("randomization draws do not depend on the regime") {
  VecEnv stacked(small(Regime::kStacked, 6));
  VecEnv procedural(small(Regime::kProcedural, 6));
  stacked.reset();
  procedural.reset();
  for (int i = 0; i < 6; ++i) {
    const EpisodeRandomization& a = stacked.env(i).randomization();
    const EpisodeRandomization& b = procedural.env(i).randomization();
    CHECK(a.dynamics.gravity == b.dynamics.gravity);
    CHECK(a.dynamics.slip_lin == b.dynamics.slip_lin);
    CHECK(a.noise.bias_pos == b.noise.bias_pos);
    CHECK(a.noise.bias_yaw == b.noise.bias_yaw);
    CHECK(a.delays.act_delay == b.delays.act_delay);
    CHECK(a.delays.obs_delay == b.delays.obs_delay);
  }
  CHECK(stacked.env(0).randomization().dynamics.gravity != stacked.env(1).randomization().dynamics.gravity);
}

TEST_CASE("action shape is checked") {
  VecEnv vec(small(Regime::kStacked, 3));
  vec.reset();
  std::vector<double> a(5, 0.0);
  CHECK_THROWS_AS(vec.step(a), UsageError);
  RegimeConfig bad = small(Regime::kStacked, 0);
  CHECK_THROWS_AS(VecEnv{bad}, ConfigError);
}

TEST_CASE("invalid terrain template is rejected") {
  RegimeConfig cfg = small(Regime::kProcedural, 2);
  cfg.terrain.resolution = 1;
  CHECK_THROWS_AS(VecEnv{cfg}, ConfigError);
}

TEST_CASE("memory grows linearly with N") {
  // Default terrain template; procedural keeps one field per instance.
  std::vector<double> per_env;
  for (int n : {64, 128, 256, 512}) {
    RegimeConfig cfg;
    cfg.n_envs = n;
    cfg.workers = 0;
    VecEnv vec(cfg);
    per_env.push_back(static_cast<double>(vec.memory_footprint()) / n);
  }
  for (double b : per_env) CHECK(std::abs(b / per_env.front() - 1.0) <= 0.2);
}

TEST_CASE("throughput at N=512") {
  RegimeConfig cfg;
  cfg.regime = Regime::kStacked;
  cfg.n_envs = 512;
  VecEnv vec(cfg);
  vec.reset();
  const auto a = actions_for(512, 0);
  for (int k = 0; k < 20; ++k) vec.step(a);
  const int steps = 400;
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < steps; ++k) vec.step(a);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double rate = 512.0 * steps / secs;
  MESSAGE("env-steps/s at N=512 with " << vec.workers() << " workers: " << rate);
  CHECK(rate >= kMinStepsPerSecond);
}
