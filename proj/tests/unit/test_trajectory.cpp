#include <doctest.h>

#include <cmath>

#include "oracle_values.hpp"
#include "rovertrack/trajectory.hpp"

using namespace rovertrack;

namespace {

const TrajectoryKind kEvalKinds[] = {TrajectoryKind::kCapsule, TrajectoryKind::kRectangle, TrajectoryKind::kCircle,
                                     TrajectoryKind::kLissajous, TrajectoryKind::kLemniscate};

// Largest relative deviation of the finite-difference speed from the target speed.
double speed_deviation(const WaypointTrajectory& traj, int samples) {
  const double period = traj.period();
  const double h = period / samples;
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const Pose2 a = traj.pose(i * h), b = traj.pose((i + 1) * h);
    const double v = (b.position - a.position).norm() / h;
    worst = std::max(worst, std::abs(v / traj.target_speed() - 1.0));
  }
  return worst;
}

}  // namespace

TEST_CASE("closed paths run at constant speed") {
  for (TrajectoryKind kind : kEvalKinds) {
    for (double speed : {0.05, 0.15, 0.25}) {
      const auto traj = eval_trajectory(kind, speed);
      CAPTURE(to_string(kind));
      // Chords on curved parts are shorter than arcs; 20000 samples keep that
      // effect well under the tolerance.
      CHECK(speed_deviation(*traj, 20000) < 1e-3);
      CHECK(traj->period() == doctest::Approx(traj->path_length() / speed).epsilon(1e-12));
      const Pose2 start = traj->pose(0.0), end = traj->pose(traj->period());
      CHECK((end.position - start.position).norm() < 1e-9);
    }
  }
}

TEST_CASE("path lengths") {
  const EvalPathGeometry g;
  CHECK(eval_trajectory(TrajectoryKind::kCapsule, 0.1)->path_length() ==
        doctest::Approx(2 * g.capsule_straight + kTwoPi * g.capsule_radius).epsilon(1e-12));
  CHECK(eval_trajectory(TrajectoryKind::kRectangle, 0.1)->path_length() ==
        doctest::Approx(2 * (g.rectangle_width + g.rectangle_height) - 8 * g.rectangle_corner_radius +
                        kTwoPi * g.rectangle_corner_radius)
            .epsilon(1e-12));
  CHECK(eval_trajectory(TrajectoryKind::kCircle, 0.1)->path_length() ==
        doctest::Approx(kTwoPi * g.circle_radius).epsilon(1e-10));
  CHECK(eval_trajectory(TrajectoryKind::kLemniscate, 0.1)->path_length() ==
        doctest::Approx(oracle::kLemniscateLength).epsilon(1e-8));
  CHECK(eval_trajectory(TrajectoryKind::kLissajous, 0.1)->path_length() ==
        doctest::Approx(oracle::kLissajousLength).epsilon(1e-8));
}

TEST_CASE("circle angular rate is v / R") {
  const double v = 0.15, r = 1.0;
  const auto traj = eval_trajectory(TrajectoryKind::kCircle, v);
  const double h = 0.04;
  for (int i = 0; i < 500; ++i) {
    const double rate = wrap_angle(traj->pose((i + 1) * h).yaw - traj->pose(i * h).yaw) / h;
    CHECK(rate == doctest::Approx(v / r).epsilon(1e-3));
  }
}

TEST_CASE("lemniscate arc-length table against dense quadrature") {
  const auto traj = eval_trajectory(TrajectoryKind::kLemniscate, 0.05);
  auto* path = dynamic_cast<ParametricPath*>(traj.get());
  REQUIRE(path != nullptr);
  // Recover u(s) on a fine grid and compare ds/du with |c'(u)|.
  const double a = 1.5;
  auto speed = [a](double u) {
    const double s = std::sin(u), c = std::cos(u), d = 1 + s * s;
    const double dx = -a * s * (3 - s * s) / (d * d);
    const double dy = a * (std::cos(2 * u) * d - 2 * s * s * c * c) / (d * d);
    return std::hypot(dx, dy);
  };
  const double length = path->path_length();
  const int n = 20000;
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double s0 = length * i / n, s1 = length * (i + 1) / n;
    const double u0 = path->parameter_at_arclength(s0);
    double u1 = path->parameter_at_arclength(s1);
    if (u1 < u0) u1 += kTwoPi;
    // Midpoint rule for the arc length between u0 and u1.
    const int m = 8;
    double arc = 0.0;
    for (int j = 0; j < m; ++j) arc += speed(u0 + (u1 - u0) * (j + 0.5) / m) * (u1 - u0) / m;
    worst = std::max(worst, std::abs(arc / (s1 - s0) - 1.0));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("target yaw follows the tangent") {
  for (TrajectoryKind kind : kEvalKinds) {
    const auto traj = eval_trajectory(kind, 0.1);
    const double h = 1e-4;
    for (int i = 1; i < 200; ++i) {
      const double t = traj->period() * i / 200.0;
      const Vec2 d = traj->pose(t + h).position - traj->pose(t - h).position;
      CHECK(std::abs(wrap_angle(std::atan2(d.y, d.x) - traj->pose(t).yaw)) < 1e-3);
    }
  }
}

TEST_CASE("training trajectories") {
  TrainingTrajectoryParams p;
  SUBCASE("deterministic per seed") {
    const auto a = gen_training_trajectory(5, {{0.3, 0.1}, 0.2}, p);
    const auto b = gen_training_trajectory(5, {{0.3, 0.1}, 0.2}, p);
    for (int k = 0; k <= 1500; ++k) CHECK(a->pose(k * 0.04) == b->pose(k * 0.04));
    const auto c = gen_training_trajectory(6, {{0.3, 0.1}, 0.2}, p);
    CHECK(!(a->pose(30.0) == c->pose(30.0)));
  }
  SUBCASE("stationary when the speed range is zero") {
    p.speed_range = {0.0, 0.0};
    const Pose2 start{{1.0, -1.0}, 0.7};
    const auto t = gen_training_trajectory(9, start, p);
    for (int k = 0; k <= 1500; k += 10) CHECK(t->pose(k * 0.04) == start);
  }
  SUBCASE("step speed never exceeds the clamp and positions stay in bounds") {
    p.horizon = 400.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto t = gen_training_trajectory(seed, {{0.0, 0.0}, 0.0}, p);
      const auto& s = t->samples();
      REQUIRE(s.size() > 10000);
      double max_speed = 0.0;
      for (std::size_t k = 1; k < 10001; ++k) {
        max_speed = std::max(max_speed, (s[k].position - s[k - 1].position).norm() / p.dt);
        CHECK(std::abs(s[k].position.x) <= p.bounds_half_extent);
        CHECK(std::abs(s[k].position.y) <= p.bounds_half_extent);
      }
      CHECK(max_speed <= t->target_speed() * (1 + 1e-12));
      CHECK(t->target_speed() <= p.speed_range[1]);
    }
  }
  SUBCASE("pose is continuous") {
    const auto t = gen_training_trajectory(3, {{0.0, 0.0}, 0.0}, p);
    for (int k = 0; k < 5000; ++k) {
      const double time = k * 0.0123;
      CHECK((t->pose(time + 1e-6).position - t->pose(time).position).norm() < 1e-6);
    }
  }
}

TEST_CASE("names and errors") {
  for (TrajectoryKind kind : kEvalKinds) CHECK(parse_trajectory_kind(to_string(kind)) == kind);
  CHECK_THROWS_AS(parse_trajectory_kind("spiral"), ConfigError);
  CHECK_THROWS_AS(eval_trajectory(TrajectoryKind::kCapsule, 0.0), ConfigError);
  CHECK_THROWS_AS(eval_trajectory(TrajectoryKind::kTrainingRandom, 0.1), ConfigError);
}
