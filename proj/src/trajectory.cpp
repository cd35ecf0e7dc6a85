#include "rovertrack/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rovertrack/rng.hpp"

namespace rovertrack {

std::string_view to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::kTrainingRandom: return "training";
    case TrajectoryKind::kCapsule: return "capsule";
    case TrajectoryKind::kRectangle: return "rectangle";
    case TrajectoryKind::kCircle: return "circle";
    case TrajectoryKind::kLissajous: return "lissajous";
    case TrajectoryKind::kLemniscate: return "lemniscate";
  }
  return "training";
}

TrajectoryKind parse_trajectory_kind(std::string_view name) {
  for (auto k : {TrajectoryKind::kTrainingRandom, TrajectoryKind::kCapsule, TrajectoryKind::kRectangle,
                 TrajectoryKind::kCircle, TrajectoryKind::kLissajous, TrajectoryKind::kLemniscate})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown trajectory kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

SampledTrajectory::SampledTrajectory(Pose2 start, double speed_limit, const TrainingTrajectoryParams& params,
                                     std::uint64_t seed)
    : dt_(params.dt), speed_limit_(speed_limit) {
  if (!(params.dt > 0.0) || !(params.horizon > 0.0)) throw ConfigError("trajectory: dt and horizon must be > 0");
  const auto n = static_cast<std::size_t>(std::ceil(params.horizon / params.dt)) + 1;
  samples_.reserve(n);
  samples_.push_back(start);

  CounterRng rng(seed);
  const double b = params.bounds_half_extent;
  const double sigma = speed_limit * std::sqrt(2.0 / params.relaxation_time);
  const double sqrt_dt = std::sqrt(params.dt);
  const double init_speed = speed_limit * rng.uniform();
  Vec2 v{init_speed * std::cos(start.yaw), init_speed * std::sin(start.yaw)};
  Vec2 drive = v;
  Vec2 p = start.position;
  double yaw = start.yaw;

  auto reflect = [b](double& pos, double& vel, double& drv) {
    if (pos > b) {
      pos = 2.0 * b - pos;
      vel = -vel;
      drv = -drv;
    } else if (pos < -b) {
      pos = -2.0 * b - pos;
      vel = -vel;
      drv = -drv;
    }
    pos = std::clamp(pos, -b, b);
  };

  for (std::size_t k = 1; k < n; ++k) {
    if (speed_limit > 0.0) {
      const double nx = rng.normal();
      const double ny = rng.normal();
      drive.x += -drive.x * params.dt / params.relaxation_time + sigma * sqrt_dt * nx;
      drive.y += -drive.y * params.dt / params.relaxation_time + sigma * sqrt_dt * ny;
      v += (drive - v) * (params.dt / params.smoothing_time);
      const double speed = v.norm();
      if (speed > speed_limit) v = v * (speed_limit / speed);
      p += v * params.dt;
      reflect(p.x, v.x, drive.x);
      reflect(p.y, v.y, drive.y);
      if (v.norm() > 1e-6) yaw = std::atan2(v.y, v.x);
    }
    samples_.push_back({p, yaw});
  }
}

Pose2 SampledTrajectory::pose(double t) const {
  const double k = std::max(0.0, t / dt_);
  if (k >= static_cast<double>(samples_.size() - 1)) return samples_.back();
  const auto i = static_cast<std::size_t>(k);
  const double f = k - static_cast<double>(i);
  const Pose2& a = samples_[i];
  const Pose2& b = samples_[i + 1];
  return {a.position + (b.position - a.position) * f, wrap_angle(a.yaw + f * wrap_angle(b.yaw - a.yaw))};
}

std::unique_ptr<SampledTrajectory> gen_training_trajectory(std::uint64_t seed, Pose2 start,
                                                           const TrainingTrajectoryParams& params) {
  const auto& r = params.speed_range;
  if (!(r[0] >= 0.0 && r[0] <= r[1])) throw ConfigError("trajectory: invalid speed range");
  CounterRng rng(stream_key({seed, 0}));
  const double limit = rng.uniform(r[0], r[1]);
  return std::make_unique<SampledTrajectory>(start, limit, params, stream_key({seed, 1}));
}

// ---------------------------------------------------------------------------

ClosedPathTrajectory::ClosedPathTrajectory(TrajectoryKind kind, double speed, double length)
    : kind_(kind), speed_(speed), length_(length) {
  if (!(speed > 0.0)) throw ConfigError("trajectory: target speed must be > 0");
}

Pose2 ClosedPathTrajectory::pose(double t) const { return pose_at_arclength(speed_ * t); }

ParametricPath::ParametricPath(TrajectoryKind kind, double speed, Curve curve, Curve derivative, int table_size)
    : ClosedPathTrajectory(kind, speed, 0.0), curve_(std::move(curve)), derivative_(std::move(derivative)) {
  const int n = std::max(16, table_size);
  const double h = kTwoPi / n;
  auto speed_at = [this](double u) { return derivative_(u).norm(); };
  u_nodes_.resize(n + 1);
  s_nodes_.resize(n + 1);
  speed_nodes_.resize(n + 1);
  s_nodes_[0] = 0.0;
  for (int i = 0; i <= n; ++i) {
    u_nodes_[i] = h * i;
    speed_nodes_[i] = speed_at(u_nodes_[i]);
    if (i > 0) {
      const double mid = speed_at(u_nodes_[i - 1] + 0.5 * h);
      s_nodes_[i] = s_nodes_[i - 1] + h / 6.0 * (speed_nodes_[i - 1] + 4.0 * mid + speed_nodes_[i]);
    }
  }
  set_length(s_nodes_.back());
}

double ParametricPath::parameter_at_arclength(double s) const {
  const double length = path_length();
  s = std::fmod(s, length);
  if (s < 0.0) s += length;
  auto it = std::upper_bound(s_nodes_.begin(), s_nodes_.end(), s);
  std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - s_nodes_.begin())) - 1;
  i = std::min(i, s_nodes_.size() - 2);
  const double hs = s_nodes_[i + 1] - s_nodes_[i];
  const double tau = (s - s_nodes_[i]) / hs;
  const double t2 = tau * tau, t3 = t2 * tau;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + tau;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * u_nodes_[i] + h10 * hs / speed_nodes_[i] + h01 * u_nodes_[i + 1] + h11 * hs / speed_nodes_[i + 1];
}

Pose2 ParametricPath::pose_at_arclength(double s) const {
  const double u = parameter_at_arclength(s);
  const Vec2 d = derivative_(u);
  return {curve_(u), std::atan2(d.y, d.x)};
}

SegmentPath::SegmentPath(TrajectoryKind kind, double speed, std::vector<Segment> segments)
    : ClosedPathTrajectory(kind, speed, 0.0), segments_(std::move(segments)) {
  double total = 0.0;
  for (const auto& seg : segments_) total += seg.length;
  if (!(total > 0.0)) throw ConfigError("trajectory: empty segment path");
  set_length(total);
}

Pose2 SegmentPath::pose_at_arclength(double s) const {
  const double length = path_length();
  s = std::fmod(s, length);
  if (s < 0.0) s += length;
  for (const auto& seg : segments_) {
    if (s <= seg.length || &seg == &segments_.back()) {
      const double d = std::min(s, seg.length);
      if (seg.curvature == 0.0)
        return {seg.start + Vec2{std::cos(seg.heading), std::sin(seg.heading)} * d, wrap_angle(seg.heading)};
      const double k = seg.curvature;
      const double heading = seg.heading + k * d;
      const Vec2 offset{(std::sin(heading) - std::sin(seg.heading)) / k,
                        (std::cos(seg.heading) - std::cos(heading)) / k};
      return {seg.start + offset, wrap_angle(heading)};
    }
    s -= seg.length;
  }
  return {};
}

namespace {

std::vector<SegmentPath::Segment> chain(Vec2 start, double heading,
                                        std::initializer_list<std::pair<double, double>> pieces) {
  // pieces: (length, curvature)
  std::vector<SegmentPath::Segment> out;
  Vec2 p = start;
  double h = heading;
  for (auto [len, k] : pieces) {
    out.push_back({p, h, len, k});
    if (k == 0.0) {
      p += Vec2{std::cos(h), std::sin(h)} * len;
    } else {
      const double h1 = h + k * len;
      p += Vec2{(std::sin(h1) - std::sin(h)) / k, (std::cos(h) - std::cos(h1)) / k};
      h = h1;
    }
  }
  return out;
}

}  // namespace

std::unique_ptr<ClosedPathTrajectory> eval_trajectory(TrajectoryKind kind, double target_speed,
                                                      const EvalPathGeometry& g) {
  if (!(target_speed > 0.0)) throw ConfigError("eval trajectory: target speed must be > 0");
  switch (kind) {
    case TrajectoryKind::kCapsule: {
      const double l = g.capsule_straight, r = g.capsule_radius;
      return std::make_unique<SegmentPath>(
          kind, target_speed, chain({-0.5 * l, -r}, 0.0, {{l, 0.0}, {kPi * r, 1.0 / r}, {l, 0.0}, {kPi * r, 1.0 / r}}));
    }
    case TrajectoryKind::kRectangle: {
      const double rc = g.rectangle_corner_radius;
      const double w = g.rectangle_width - 2.0 * rc, h = g.rectangle_height - 2.0 * rc;
      if (!(w >= 0.0 && h >= 0.0 && rc > 0.0)) throw ConfigError("eval trajectory: bad rectangle geometry");
      const double arc = 0.5 * kPi * rc;
      return std::make_unique<SegmentPath>(
          kind, target_speed,
          chain({-0.5 * w, -0.5 * g.rectangle_height}, 0.0,
                {{w, 0.0}, {arc, 1.0 / rc}, {h, 0.0}, {arc, 1.0 / rc}, {w, 0.0}, {arc, 1.0 / rc}, {h, 0.0}, {arc, 1.0 / rc}}));
    }
    case TrajectoryKind::kCircle: {
      const double r = g.circle_radius;
      return std::make_unique<ParametricPath>(
          kind, target_speed, [r](double u) { return Vec2{r * std::sin(u), -r * std::cos(u)}; },
          [r](double u) { return Vec2{r * std::cos(u), r * std::sin(u)}; });
    }
    case TrajectoryKind::kLissajous: {
      const double ax = g.lissajous_ax, ay = g.lissajous_ay;
      return std::make_unique<ParametricPath>(
          kind, target_speed, [=](double u) { return Vec2{ax * std::sin(3 * u), ay * std::sin(2 * u)}; },
          [=](double u) { return Vec2{3 * ax * std::cos(3 * u), 2 * ay * std::cos(2 * u)}; });
    }
    case TrajectoryKind::kLemniscate: {
      const double a = g.lemniscate_a;
      return std::make_unique<ParametricPath>(
          kind, target_speed,
          [a](double u) {
            const double s = std::sin(u), c = std::cos(u), d = 1.0 + s * s;
            return Vec2{a * c / d, a * s * c / d};
          },
          [a](double u) {
            const double s = std::sin(u), c = std::cos(u), d = 1.0 + s * s;
            return Vec2{-a * s * (3.0 - s * s) / (d * d), a * (std::cos(2 * u) * d - 2.0 * s * s * c * c) / (d * d)};
          });
    }
    case TrajectoryKind::kTrainingRandom: break;
  }
  throw ConfigError("eval trajectory: '" + std::string(to_string(kind)) + "' is not an evaluation path");
}

}  // namespace rovertrack
