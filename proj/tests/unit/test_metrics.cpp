#include <doctest.h>

#include <cmath>

#include "rovertrack/metrics.hpp"
#include "rovertrack/rng.hpp"
#include "rovertrack/trajectory.hpp"

using namespace rovertrack;

namespace {

EpisodeLog positions(const std::function<Vec2(double)>& p, int n, double dt = 0.04) {
  EpisodeLog log(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    log[i].t = dt * (i + 1);
    log[i].rover.position = p(log[i].t);
    log[i].target.position = p(log[i].t);
  }
  return log;
}

EpisodeLog random_log(std::uint64_t seed, int n) {
  CounterRng rng(seed);
  EpisodeLog log(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    log[i].t = 0.04 * (i + 1);
    log[i].rover = {{rng.uniform(-2, 2), rng.uniform(-2, 2)}, rng.uniform(-kPi, kPi)};
    log[i].target = {{rng.uniform(-2, 2), rng.uniform(-2, 2)}, rng.uniform(-kPi, kPi)};
  }
  return log;
}

}  // namespace

TEST_CASE("ATE") {
  SUBCASE("coincident") {
    const EpisodeLog log = positions([](double t) { return Vec2{t, -t}; }, 50);
    const AteResult a = ate(log);
    CHECK(a.pos == 0.0);
    CHECK(a.yaw == 0.0);
  }
  SUBCASE("constant offset") {
    EpisodeLog log = positions([](double t) { return Vec2{std::sin(t), t}; }, 50);
    for (auto& r : log) r.rover.position += rotate({0.05, 0.0}, 0.3 * r.t);
    CHECK(ate(log).pos == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(ate(log).yaw == 0.0);
  }
  SUBCASE("direct sum and symmetry") {
    EpisodeLog log = random_log(4, 100);
    double pos = 0.0, yaw = 0.0;
    for (const auto& r : log) {
      pos += std::hypot(r.rover.position.x - r.target.position.x, r.rover.position.y - r.target.position.y);
      double e = std::fmod(std::abs(r.rover.yaw - r.target.yaw), kTwoPi);
      yaw += std::min(e, kTwoPi - e);
    }
    CHECK(std::abs(ate(log).pos - pos / 100) <= 1e-12);
    CHECK(std::abs(ate(log).yaw - yaw / 100) <= 1e-12);
    CHECK(ate(log).yaw <= kPi);
    const double before = ate(log).pos;
    for (auto& r : log) std::swap(r.rover, r.target);
    CHECK(ate(log).pos == doctest::Approx(before).epsilon(1e-15));
  }
  SUBCASE("empty log") { CHECK_THROWS_AS(ate(EpisodeLog{}), UsageError); }
}

TEST_CASE("jerk") {
  SUBCASE("linear motion has none") {
    CHECK(jerk_abs(positions([](double t) { return Vec2{0.3 * t + 1, -0.1 * t}; }, 100)) ==
          doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("cubics are exact") {
    const Vec2 c{0.7, -0.4};
    const EpisodeLog log = positions([c](double t) { return c * (t * t * t) + Vec2{0.2 * t * t, t}; }, 200);
    CHECK(jerk_abs(log) == doctest::Approx(6.0 * c.norm()).epsilon(1e-6));
    const EpisodeLog four = positions([c](double t) { return c * (t * t * t); }, 4);
    CHECK(jerk_abs(four) == doctest::Approx(6.0 * c.norm()).epsilon(1e-6));
  }
  SUBCASE("self baseline is one hundred percent") {
    const EpisodeLog log = positions([](double t) { return Vec2{std::sin(3 * t), std::cos(2 * t)}; }, 300);
    CHECK(jerk(log, std::span<const EnvStepRecord>(log)).rel == doctest::Approx(100.0));
    CHECK(std::isnan(jerk(log, std::nullopt).rel));
  }
  SUBCASE("invariant under offsets and added constant velocity") {
    EpisodeLog log = random_log(8, 200);
    const double j0 = jerk_abs(log);
    for (auto& r : log) r.rover.position += Vec2{3.0, -1.0} + Vec2{0.2, 0.5} * r.t;
    CHECK(jerk_abs(log) == doctest::Approx(j0).epsilon(1e-6));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(jerk_abs(positions([](double t) { return Vec2{t, t}; }, 3)), UsageError);
    EpisodeLog log = positions([](double t) { return Vec2{t, t}; }, 20);
    log[10].t += 0.01;
    CHECK_THROWS_AS(jerk_abs(log), UsageError);
  }
}

TEST_CASE("lap detection") {
  const auto traj = eval_trajectory(TrajectoryKind::kCapsule, 0.15);
  const double period = traj->period();
  const int per_lap = static_cast<int>(std::ceil(period / 0.04));
  EpisodeLog log;
  for (int k = 0; k < 2 * per_lap + 10; ++k) {
    EnvStepRecord r;
    r.t = 0.04 * k;
    r.target = traj->pose(r.t);
    r.rover = r.target;
    log.push_back(r);
  }
  const auto end = detect_lap_end(log, traj->path_length());
  REQUIRE(end.has_value());
  CHECK(std::abs(static_cast<int>(*end) - per_lap) <= 1);
  CHECK(count_laps(log, traj->path_length()) == 2);
  CHECK(after_first_lap(log, traj->path_length(), 10).size() == log.size() - *end);

  // A rover that never moves completes no lap; the fallback cut applies.
  for (auto& r : log) r.rover = log.front().rover;
  CHECK(!detect_lap_end(log, traj->path_length()).has_value());
  CHECK(after_first_lap(log, traj->path_length(), 100).size() == log.size() - 100);
}

TEST_CASE("summaries and tables") {
  const EpisodeLog log = random_log(2, 300);
  const MetricsSummary m = summarize_all(log, std::span<const EnvStepRecord>(log));
  CHECK(m.n_steps == 300);
  const MetricsSummary back = metrics_from_json(to_json(m));
  CHECK(back.ate_pos == m.ate_pos);
  CHECK(back.jerk_rel == m.jerk_rel);
  CHECK(std::isnan(metrics_from_json(to_json(summarize_all(log))).jerk_rel));

  std::vector<SweepEntry> entries;
  for (double speed : {0.05, 0.15, 0.25})
    for (const char* v : {"none", "ma", "sg", "bw"}) entries.push_back({"capsule", speed, v, m});
  const std::string table = format_table(entries, "capsule");
  int lines = 0;
  for (char c : table) lines += c == '\n';
  CHECK(lines == 1 + 1 + 1 + 3);  // title, header, rule, three speed rows
  CHECK(table.find("15 cm/s") != std::string::npos);
  CHECK(table.find("bw") != std::string::npos);
  CHECK(sweep_to_json(entries).find("\"variant\": \"sg\"") != std::string::npos);
}
