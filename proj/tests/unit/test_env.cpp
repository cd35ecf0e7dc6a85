#include <doctest.h>

#include <bit>
#include <cmath>

#include "oracle_values.hpp"
#include "rovertrack/env.hpp"

using namespace rovertrack;

namespace {

std::shared_ptr<const Terrain> flat_terrain() {
  static const auto t = std::make_shared<const Terrain>(Terrain{TerrainParams{}, HeightField::flat(12.0, 49), {}, {}});
  return t;
}

std::shared_ptr<const Terrain> rough_terrain() {
  static const auto t = [] {
    TerrainParams p;
    p.seed = 77;
    p.resolution = 129;
    return std::make_shared<const Terrain>(generate_terrain(p));
  }();
  return t;
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool same_record(const EnvStepRecord& a, const EnvStepRecord& b) {
  const double xa[] = {a.t, a.rover.position.x, a.rover.position.y, a.rover.yaw, a.target.position.x,
                       a.target.position.y, a.target.yaw, a.applied_action[0], a.applied_action[1],
                       a.observation.rel_pos.x, a.observation.rel_pos.y, a.observation.sin_yaw_err,
                       a.observation.cos_yaw_err, a.reward.total};
  const double xb[] = {b.t, b.rover.position.x, b.rover.position.y, b.rover.yaw, b.target.position.x,
                       b.target.position.y, b.target.yaw, b.applied_action[0], b.applied_action[1],
                       b.observation.rel_pos.x, b.observation.rel_pos.y, b.observation.sin_yaw_err,
                       b.observation.cos_yaw_err, b.reward.total};
  for (std::size_t i = 0; i < std::size(xa); ++i)
    if (!same_bits(xa[i], xb[i])) return false;
  return a.truncated == b.truncated;
}

double reference_reward(const Pose2& r, const Pose2& t, const Action& a, const Action& p, const RewardWeights& w) {
  const double dx = t.position.x - r.position.x, dy = t.position.y - r.position.y;
  const double d = std::hypot(dx, dy);
  const double cb = d > 0 ? (std::cos(r.yaw) * dx + std::sin(r.yaw) * dy) / d : 1.0;
  const double e = std::remainder(t.yaw - r.yaw, kTwoPi);
  const double da2 = (a[0] - p[0]) * (a[0] - p[0]) + (a[1] - p[1]) * (a[1] - p[1]);
  const double near = std::exp(-d * d / (w.sigma_pos * w.sigma_pos));
  const double al = std::exp(-e * e / (w.sigma_yaw * w.sigma_yaw));
  const double calm = std::exp(-da2 / (w.sigma_action * w.sigma_action));
  return -w.dist * d + w.heading * cb + w.pos_align * near + w.yaw_align * near * al +
         w.stillness * near * al * calm - w.action_rate * da2;
}

// Episode id whose randomization has the requested delays.
std::uint64_t find_episode(RoverEnv& env, int obs_delay, int act_delay) {
  for (std::uint64_t ep = 0; ep < 10000; ++ep) {
    env.reset(ep);
    if (env.randomization().delays.obs_delay == obs_delay && env.randomization().delays.act_delay == act_delay)
      return ep;
  }
  FAIL("no episode with the requested delays");
  return 0;
}

}  // namespace

TEST_CASE("observation geometry") {
  CounterRng rng(1);
  const NoiseModel quiet;
  Observation o = make_observation({{0, 0}, 0}, {{1, 0}, 0}, quiet, rng);
  CHECK(o.rel_pos == Vec2{1.0, 0.0});
  CHECK(o.sin_yaw_err == 0.0);
  CHECK(o.cos_yaw_err == 1.0);
  o = make_observation({{0, 0}, 0.3}, {{0, 0}, 0.3 + kPi / 2}, quiet, rng);
  CHECK(o.sin_yaw_err == doctest::Approx(1.0));
  CHECK(std::abs(o.cos_yaw_err) < 1e-12);
  // Target ahead-left of a rover facing +y.
  o = make_observation({{1, 1}, kPi / 2}, {{1, 3}, 0}, quiet, rng);
  CHECK(o.rel_pos.x == doctest::Approx(2.0));
  CHECK(std::abs(o.rel_pos.y) < 1e-12);

  const NoiseModel noisy{{0.01, -0.02}, 0.05, 0.0025, deg_to_rad(0.5)};
  for (int i = 0; i < 1000; ++i) {
    o = make_observation({{0.1, 0.2}, 1.0}, {{-0.4, 0.9}, -2.0}, noisy, rng);
    CHECK(std::abs(o.sin_yaw_err * o.sin_yaw_err + o.cos_yaw_err * o.cos_yaw_err - 1.0) < 1e-9);
  }
}

TEST_CASE("step noise statistics") {
  CounterRng rng(2024);
  const NoiseModel noise{{0.0, 0.0}, 0.0, 0.0025, deg_to_rad(0.5)};
  const int n = 100000;
  double sx = 0, sxx = 0, sy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    const Observation o = make_observation({{0, 0}, 0}, {{1, 0}, 0}, noise, rng);
    const double ex = o.rel_pos.x - 1.0, ey = std::atan2(o.sin_yaw_err, o.cos_yaw_err);
    sx += ex;
    sxx += ex * ex;
    sy += ey;
    syy += ey * ey;
  }
  const double mx = sx / n, my = sy / n;
  const double sdx = std::sqrt(sxx / n - mx * mx), sdy = std::sqrt(syy / n - my * my);
  CHECK(std::abs(mx) <= 3 * 0.0025 / std::sqrt(n));
  CHECK(std::abs(my) <= 3 * deg_to_rad(0.5) / std::sqrt(n));
  CHECK(sdx == doctest::Approx(0.0025).epsilon(0.02));
  CHECK(sdy == doctest::Approx(deg_to_rad(0.5)).epsilon(0.02));
}

TEST_CASE("reward formula") {
  const RewardWeights w;
  SUBCASE("reference values") {
    for (const auto& c : oracle::kRewardCases) {
      const RewardTerms r = compute_reward({{c[0], c[1]}, c[2]}, {{c[3], c[4]}, c[5]}, {c[6], c[7]}, {c[8], c[9]}, w);
      CHECK(std::abs(r.total - c[10]) <= 1e-12);
    }
  }
  SUBCASE("random inputs against the reference formula") {
    CounterRng rng(5);
    for (int i = 0; i < 1000; ++i) {
      const Pose2 r{{rng.uniform(-3, 3), rng.uniform(-3, 3)}, rng.uniform(-kPi, kPi)};
      const Pose2 t{r.position + Vec2{rng.normal(0, 0.3), rng.normal(0, 0.3)}, rng.uniform(-kPi, kPi)};
      const Action a{rng.uniform(-1, 1), rng.uniform(-1, 1)}, p{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const RewardTerms terms = compute_reward(r, t, a, p, w);
      CHECK(std::abs(terms.total - reference_reward(r, t, a, p, w)) <= 1e-12);
      CHECK(terms.total == terms.dist_penalty + terms.heading_reward + terms.pos_align_reward +
                               terms.yaw_align_reward + terms.stillness_reward + terms.action_rate_penalty);
    }
  }
  SUBCASE("optimum value") {
    const RewardTerms r = compute_reward({{1, 1}, 0.4}, {{1, 1}, 0.4}, {0.2, 0.1}, {0.2, 0.1}, w);
    CHECK(r.total == doctest::Approx(w.heading + w.pos_align + w.yaw_align + w.stillness).epsilon(1e-15));
    CHECK(r.dist_penalty == 0.0);
    CHECK(r.action_rate_penalty == 0.0);
  }
  SUBCASE("brute-force argmax over poses and action changes") {
    const Pose2 target{{0.0, 0.0}, 0.0};
    const Action prev{0.3, -0.2};
    const double best = compute_reward(target, target, prev, prev, w).total;
    double runner_up = -1e9;
    for (int ix = -20; ix <= 20; ++ix)
      for (int iy = -20; iy <= 20; ++iy)
        for (int iyaw = -18; iyaw <= 18; ++iyaw)
          for (int ia = -4; ia <= 4; ++ia)
            for (int ib = -4; ib <= 4; ++ib) {
              if (ix == 0 && iy == 0 && iyaw == 0 && ia == 0 && ib == 0) continue;
              const Pose2 rover{{0.025 * ix, 0.025 * iy}, kPi * iyaw / 18.0};
              const Action a{prev[0] + 0.05 * ia, prev[1] + 0.05 * ib};
              runner_up = std::max(runner_up, compute_reward(rover, target, a, prev, w).total);
            }
    CHECK(runner_up < best);
  }
  SUBCASE("strictly decreasing with distance far from the target") {
    double last = 1e9;
    for (int i = 0; i < 200; ++i) {
      const double d = 1.0 + 0.05 * i;
      const double r = compute_reward({{0, 0}, 0}, {{d, 0}, 0}, {0, 0}, {0, 0}, w).total;
      CHECK(r < last);
      last = r;
    }
  }
}

TEST_CASE("delay line conserves items") {
  CounterRng rng(3);
  DelayLine<int> line;
  line.reset(2, -1);
  std::vector<int> out;
  int next = 0;
  for (int step = 0; step < 5000; ++step) {
    if (step % 25 == 0) line.set_delay(static_cast<int>(rng.uniform_int(0, 3)));
    line.push(next++, out);
  }
  // Two pre-fill items, then every pushed item in order, except those still queued.
  REQUIRE(out.size() >= 2);
  CHECK(out[0] == -1);
  CHECK(out[1] == -1);
  for (std::size_t i = 2; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i) - 2);
  CHECK(out.size() - 2 + line.pending() == static_cast<std::size_t>(next));
}

TEST_CASE("episode lifecycle") {
  EnvConfig cfg;
  RoverEnv env(cfg, RandomizationToggles{}, rough_terrain(), 11, 0);
  CHECK_THROWS_AS(env.step({0, 0}), UsageError);
  env.reset(0);
  StepOutput out;
  double last_t = -1.0;
  for (int k = 0; k < 1500; ++k) {
    CHECK(!out.truncated);
    out = env.step({0.3, 0.1});
    CHECK(env.last_record().t == doctest::Approx(last_t < 0 ? 0.04 : last_t + 0.04).epsilon(1e-12));
    last_t = env.last_record().t;
    CHECK(!out.terminated);
  }
  CHECK(out.truncated);
  CHECK(env.step_count() == 1500);
  CHECK_THROWS_AS(env.step({0, 0}), UsageError);
}

TEST_CASE("delays") {
  EnvConfig cfg;
  cfg.delay.resample_probability = 0.0;
  RandomizationToggles toggles = RandomizationToggles::all_off();
  toggles.delays = true;

  SUBCASE("no delay: observation reflects this step") {
    RoverEnv env(cfg, toggles, flat_terrain(), 3, 0);
    const std::uint64_t ep = find_episode(env, 0, 0);
    env.reset(ep);
    for (int k = 0; k < 50; ++k) {
      const StepOutput out = env.step({0.5, 0.3});
      const EnvStepRecord& r = env.last_record();
      CHECK(r.applied_action == Action{0.5, 0.3});
      const Vec2 rel = rotate(r.target.position - r.rover.position, -r.rover.yaw);
      CHECK(out.observation.rel_pos.x == doctest::Approx(rel.x).epsilon(1e-12));
      CHECK(out.observation.rel_pos.y == doctest::Approx(rel.y).epsilon(1e-12));
    }
  }
  SUBCASE("action delay of three steps") {
    RoverEnv env(cfg, toggles, flat_terrain(), 3, 0);
    const std::uint64_t ep = find_episode(env, 0, 3);
    env.reset(ep);
    const Pose2 start = env.last_record().rover;
    for (int k = 0; k < 10; ++k) env.step({0.0, 0.0});
    CHECK(env.last_record().rover == start);
    env.step({1.0, 0.0});  // issued at step t
    for (int k = 0; k < 2; ++k) {
      env.step({1.0, 0.0});
      CHECK(env.last_record().rover == start);
    }
    env.step({1.0, 0.0});  // step t + 3
    CHECK(!(env.last_record().rover == start));
    CHECK(env.last_record().applied_action == Action{1.0, 0.0});
  }
  SUBCASE("observation delay of one step") {
    RoverEnv env(cfg, toggles, flat_terrain(), 3, 0);
    const std::uint64_t ep = find_episode(env, 1, 0);
    env.reset(ep);
    EnvStepRecord previous = env.last_record();
    for (int k = 0; k < 30; ++k) {
      const StepOutput out = env.step({0.6, -0.4});
      const Vec2 rel = rotate(previous.target.position - previous.rover.position, -previous.rover.yaw);
      CHECK(out.observation.rel_pos.x == doctest::Approx(rel.x).epsilon(1e-12));
      previous = env.last_record();
    }
  }
  SUBCASE("resampled delays keep actions in order") {
    cfg.delay.resample_probability = 0.5;
    RoverEnv env(cfg, toggles, flat_terrain(), 8, 2);
    env.reset(0);
    int changes = 0, last_delay = env.randomization().delays.act_delay, backlog_steps = 0;
    double last_applied = -1.0;
    for (int k = 0; k < 1500; ++k) {
      const StepOutput out = env.step({k / 1500.0, 0.0});
      changes += out.info.act_delay != last_delay;
      backlog_steps += out.info.actions_applied > 1;
      last_delay = out.info.act_delay;
      const double applied = env.last_record().applied_action[0];
      CHECK(applied >= last_applied);
      CHECK(applied <= k / 1500.0);
      CHECK(applied >= (k - 3) / 1500.0 - 1e-12);
      last_applied = applied;
    }
    CHECK(changes > 5);
    CHECK(backlog_steps > 0);
  }
}

TEST_CASE("full-episode determinism") {
  EnvConfig cfg;
  auto run = [&](std::uint64_t seed) {
    RoverEnv env(cfg, RandomizationToggles{}, rough_terrain(), seed, 4);
    env.reset(2);
    std::vector<EnvStepRecord> log;
    CounterRng actions(9);
    for (int k = 0; k < 1500; ++k) {
      env.step({actions.uniform(-1, 1), actions.uniform(-1, 1)});
      log.push_back(env.last_record());
    }
    return log;
  };
  const auto a = run(5), b = run(5), c = run(6);
  bool identical = true, differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    identical &= same_record(a[i], b[i]);
    differs |= !same_record(a[i], c[i]);
  }
  CHECK(identical);
  CHECK(differs);
}

TEST_CASE("sensing bias is per episode") {
  EnvConfig cfg;
  RandomizationToggles toggles = RandomizationToggles::all_off();
  toggles.obs_noise = true;
  RoverEnv env(cfg, toggles, flat_terrain(), 1, 0);
  env.reset(0);
  const NoiseModel first = env.randomization().noise;
  for (int k = 0; k < 100; ++k) env.step({0.2, 0.0});
  CHECK(env.randomization().noise.bias_pos == first.bias_pos);
  env.reset(1);
  CHECK(!(env.randomization().noise.bias_pos == first.bias_pos));

  // Averaged over many steps, observation minus truth recovers the bias.
  Vec2 acc;
  env.reset(0);
  const int n = 1400;
  for (int k = 0; k < n; ++k) {
    const StepOutput out = env.step({0.0, 0.0});
    const EnvStepRecord& r = env.last_record();
    const Vec2 rel = rotate(r.target.position - r.rover.position, -r.rover.yaw);
    acc += out.observation.rel_pos - rel;
  }
  acc = acc * (1.0 / n);
  CHECK(std::abs(acc.x - first.bias_pos.x) < 4 * cfg.noise.step_pos_std / std::sqrt(n));
  CHECK(std::abs(acc.y - first.bias_pos.y) < 4 * cfg.noise.step_pos_std / std::sqrt(n));
}

TEST_CASE("randomization toggles") {
  EnvConfig cfg;
  RoverEnv off(cfg, RandomizationToggles::all_off(), flat_terrain(), 1, 0);
  off.reset(0);
  CHECK(off.randomization().dynamics.slip_lin == 0.0);
  CHECK(off.randomization().dynamics.gravity == cfg.dynamics.gravity);
  CHECK(off.randomization().delays.act_delay == 0);
  CHECK(off.randomization().noise.step_pos_std == 0.0);

  RoverEnv on(cfg, RandomizationToggles{}, flat_terrain(), 1, 0);
  double min_g = 1e9, max_g = 0;
  for (std::uint64_t ep = 0; ep < 200; ++ep) {
    on.reset(ep);
    const auto& d = on.randomization().dynamics;
    const double g = std::sqrt(d.gravity[0] * d.gravity[0] + d.gravity[1] * d.gravity[1] + d.gravity[2] * d.gravity[2]);
    min_g = std::min(min_g, g);
    max_g = std::max(max_g, g);
    CHECK(std::acos(-d.gravity[2] / g) <= deg_to_rad(2.0) + 1e-12);
    CHECK(d.slip_lin >= 0.0);
    CHECK(d.slip_lin <= 0.3);
    CHECK(on.randomization().delays.obs_delay <= 1);
    CHECK(on.randomization().delays.act_delay <= 3);
  }
  CHECK(min_g >= 1.62);
  CHECK(max_g <= 9.81);
  CHECK(max_g - min_g > 5.0);
}

TEST_CASE("non-finite actions are flagged and ignored") {
  RoverEnv env(EnvConfig{}, RandomizationToggles::all_off(), flat_terrain(), 1, 0);
  env.reset(0);
  env.step({0.5, 0.0});
  const StepOutput out = env.step({NAN, 0.0});
  CHECK(out.info.action_non_finite);
  CHECK(std::isfinite(env.last_record().rover.position.x));
  CHECK(env.last_record().applied_action == Action{0.5, 0.0});
}

TEST_CASE("filter sits before the action delay") {
  EnvConfig cfg;
  cfg.filter = FilterSpec::moving_average(5);
  RoverEnv env(cfg, RandomizationToggles::all_off(), flat_terrain(), 1, 0);
  env.reset(0);
  env.step({0.0, 0.0});
  env.step({1.0, 0.0});
  CHECK(env.last_record().applied_action[0] == doctest::Approx(0.2));
  CHECK(env.last_record().raw_action[0] == 1.0);
}
