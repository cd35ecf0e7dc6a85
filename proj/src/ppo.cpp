#include "rovertrack/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <tbb/parallel_for.h>

#include "rovertrack/rng.hpp"

namespace rovertrack {

void PpoConfig::validate() const {
  if (!(lr_start > 0.0)) throw ConfigError("ppo: lr_start must be > 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo: gamma must lie in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("ppo: gae_lambda must lie in [0, 1]");
  if (rollout_len < 1 || n_envs < 1 || epochs < 1 || minibatch < 1) throw ConfigError("ppo: sizes must be >= 1");
  if (batch_size() % minibatch != 0) throw ConfigError("ppo: minibatch must divide rollout_len * n_envs");
  if (grad_chunks < 1 || minibatch % grad_chunks != 0) throw ConfigError("ppo: grad_chunks must divide minibatch");
  if (!(clip > 0.0)) throw ConfigError("ppo: clip must be > 0");
  if (!(entropy_coef >= 0.0 && value_coef > 0.0)) throw ConfigError("ppo: invalid loss coefficients");
  if (!(grad_clip_norm > 0.0)) throw ConfigError("ppo: grad_clip_norm must be > 0");
  if (!(adam_eps > 0.0)) throw ConfigError("ppo: adam_eps must be > 0");
  if (total_steps < batch_size()) throw ConfigError("ppo: total_steps must cover at least one rollout");
  policy_spec().validate();
}

int PpoConfig::updates() const { return static_cast<int>(total_steps / batch_size()); }

PolicySpec PpoConfig::policy_spec() const {
  PolicySpec s;
  s.hidden = hidden;
  s.log_std_init = log_std_init;
  return s;
}

double linear_lr(double lr_start, double fraction) { return lr_start * (1.0 - std::clamp(fraction, 0.0, 1.0)); }

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, double bootstrap_value,
                      std::span<const std::uint8_t> terminated, std::span<const std::uint8_t> truncated,
                      std::span<const double> final_values, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || terminated.size() != n || truncated.size() != n || final_values.size() != n)
    throw UsageError("gae: array lengths differ");
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const bool term = terminated[k] != 0;
    const bool trunc = truncated[k] != 0;
    double next_value = k + 1 < n ? values[k + 1] : bootstrap_value;
    if (trunc) next_value = final_values[k];
    if (term) next_value = 0.0;
    const double delta = rewards[k] + gamma * next_value - values[k];
    const double carry = (term || trunc) ? 0.0 : gamma * lambda * next_adv;
    out.advantages[k] = delta + carry;
    out.returns[k] = out.advantages[k] + values[k];
    next_adv = out.advantages[k];
  }
  return out;
}

void RunningMeanStd::update(std::span<const double> xs) {
  if (xs.empty()) return;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= static_cast<double>(xs.size());
  const double n = static_cast<double>(xs.size());
  const double total = count_ + n;
  const double delta = m - mean_;
  mean_ += delta * n / total;
  var_ = (var_ * count_ + v * n + delta * delta * count_ * n / total) / total;
  count_ = total;
}

double RunningMeanStd::std(double floor) const { return std::max(std::sqrt(var_), floor); }

Adam::Adam(std::size_t n, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0f), v_(n, 0.0f) {}

void Adam::step(std::vector<float>& params, const std::vector<float>& grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw UsageError("adam: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const auto b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
  const auto step = static_cast<float>(lr / c1);
  const auto inv_c2 = static_cast<float>(1.0 / c2);
  const auto eps = static_cast<float>(eps_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0f - b1) * grad[i];
    v_[i] = b2 * v_[i] + (1.0f - b2) * grad[i] * grad[i];
    params[i] -= step * m_[i] / (std::sqrt(v_[i] * inv_c2) + eps);
  }
}

double clip_grad_norm(std::vector<float>& grad, std::size_t begin, std::size_t end, double max_norm) {
  double sq = 0.0;
  for (std::size_t i = begin; i < end; ++i) sq += static_cast<double>(grad[i]) * grad[i];
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const auto scale = static_cast<float>(max_norm / (norm + 1e-12));
    for (std::size_t i = begin; i < end; ++i) grad[i] *= scale;
  }
  return norm;
}

void RolloutBuffer::resize(int n_steps, int envs) {
  steps = n_steps;
  n_envs = envs;
  const std::size_t n = size();
  obs.assign(n * kObsDim, 0.0f);
  pre_squash.assign(n * kActDim, 0.0f);
  log_probs.assign(n, 0.0);
  values.assign(n, 0.0);
  rewards.assign(n, 0.0);
  terminated.assign(n, 0);
  truncated.assign(n, 0);
  final_values.assign(n, 0.0);
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
}

void RolloutBuffer::compute_advantages(std::span<const double> bootstrap_values, double gamma, double lambda) {
  if (bootstrap_values.size() != static_cast<std::size_t>(n_envs)) throw UsageError("rollout: bootstrap size");
  const auto T = static_cast<std::size_t>(steps);
  const auto N = static_cast<std::size_t>(n_envs);
  std::vector<double> r(T), v(T), f(T);
  std::vector<std::uint8_t> te(T), tr(T);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t k = t * N + i;
      r[t] = rewards[k];
      v[t] = values[k];
      f[t] = final_values[k];
      te[t] = terminated[k];
      tr[t] = truncated[k];
    }
    const GaeResult g = compute_gae(r, v, bootstrap_values[i], te, tr, f, gamma, lambda);
    for (std::size_t t = 0; t < T; ++t) {
      advantages[t * N + i] = g.advantages[t];
      returns[t * N + i] = g.returns[t];
    }
  }
}

std::vector<std::uint32_t> minibatch_order(std::size_t n, std::uint64_t seed, int update, int epoch) {
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  CounterRng rng(stream_key({seed, tag(Stream::kMinibatch), static_cast<std::uint64_t>(update),
                             static_cast<std::uint64_t>(epoch)}));
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

namespace {

bool all_finite(const std::vector<float>& v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

Policy make_policy(const PpoConfig& cfg, const std::vector<float>& params, const RunningMeanStd& stats) {
  Policy p;
  p.spec = cfg.policy_spec();
  p.params = params;
  if (cfg.normalize_values) {
    p.value_mean = stats.mean();
    p.value_std = stats.std();
  }
  return p;
}

}  // namespace

TrainResult train(const PpoConfig& cfg, const RegimeConfig& regime, const TrainProgress& progress,
                  Policy* last_good) {
  cfg.validate();
  if (regime.n_envs != cfg.n_envs) throw ConfigError("ppo: n_envs differs between trainer and regime config");
  const PolicyLayout layout(cfg.policy_spec());
  const std::size_t n_params = layout.count();
  std::vector<float> params = init_policy_params(layout, cfg.seed);
  Adam adam(n_params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  RunningMeanStd value_stats;

  VecEnv venv(regime);
  const int N = cfg.n_envs;
  const int T = cfg.rollout_len;
  const int U = cfg.updates();
  const auto B = static_cast<std::size_t>(cfg.batch_size());
  const auto M = static_cast<std::size_t>(cfg.minibatch);
  const int C = cfg.grad_chunks;
  const auto chunk = M / static_cast<std::size_t>(C);

  MatX<float> obs(kObsDim, N);
  auto load_obs = [&](const std::vector<double>& flat) {
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < kObsDim; ++k)
        obs(k, i) = static_cast<float>(flat[static_cast<std::size_t>(i) * kObsDim + static_cast<std::size_t>(k)]);
  };
  load_obs(venv.reset());

  RolloutBuffer buf;
  buf.resize(T, N);
  PolicyEvaluator evaluator(layout);
  PolicyEvaluator final_evaluator(layout);
  std::vector<double> running_return(static_cast<std::size_t>(N), 0.0);
  std::deque<double> recent;
  std::vector<double> actions(static_cast<std::size_t>(N) * kActDim);

  TrainResult result;
  PpoCoefficients coefs;
  coefs.clip = cfg.clip;
  coefs.value = cfg.value_coef;
  std::vector<float> grad(n_params);
  std::vector<std::vector<float>> chunk_grads(static_cast<std::size_t>(C), std::vector<float>(n_params));
  std::vector<LossStats> chunk_stats(static_cast<std::size_t>(C));
  std::vector<PpoBatch<float>> chunk_batches(static_cast<std::size_t>(C));

  for (int u = 0; u < U; ++u) {
    const double lr = linear_lr(cfg.lr_start, static_cast<double>(u) / U);
    const double vmean = cfg.normalize_values ? value_stats.mean() : 0.0;
    const double vstd = cfg.normalize_values ? value_stats.std() : 1.0;
    const float* log_std = params.data() + layout.log_std_offset();

    // --- rollout ---
    for (int t = 0; t < T; ++t) {
      const MatX<float> mean = evaluator.means(params, obs);
      const MatX<float>& value = evaluator.values(params, obs);
      CounterRng rng(stream_key({cfg.seed, tag(Stream::kPolicySample), static_cast<std::uint64_t>(u),
                                 static_cast<std::uint64_t>(t)}));
      for (int i = 0; i < N; ++i) {
        const std::size_t k = static_cast<std::size_t>(t) * N + static_cast<std::size_t>(i);
        float uu[kActDim];
        for (int a = 0; a < kActDim; ++a) {
          uu[a] = mean(a, i) + std::exp(log_std[a]) * static_cast<float>(rng.normal());
          buf.pre_squash[k * kActDim + static_cast<std::size_t>(a)] = uu[a];
          actions[static_cast<std::size_t>(i) * kActDim + static_cast<std::size_t>(a)] = std::tanh(static_cast<double>(uu[a]));
        }
        buf.log_probs[k] = gaussian_log_prob<float>(uu, mean.col(i).data(), log_std, kActDim);
        buf.values[k] = vmean + vstd * value(0, i);
        for (int o = 0; o < kObsDim; ++o) buf.obs[k * kObsDim + static_cast<std::size_t>(o)] = obs(o, i);
      }
      const BatchStep& step = venv.step(actions);
      std::vector<int> finished;
      for (int i = 0; i < N; ++i) {
        const std::size_t k = static_cast<std::size_t>(t) * N + static_cast<std::size_t>(i);
        const auto ui = static_cast<std::size_t>(i);
        buf.rewards[k] = step.rewards[ui];
        buf.terminated[k] = step.terminated[ui];
        buf.truncated[k] = step.truncated[ui];
        buf.final_values[k] = 0.0;
        running_return[ui] += step.rewards[ui];
        if (step.infos[ui].auto_reset) {
          recent.push_back(running_return[ui]);
          if (recent.size() > static_cast<std::size_t>(N)) recent.pop_front();
          running_return[ui] = 0.0;
          if (step.truncated[ui]) finished.push_back(i);
        }
      }
      if (!finished.empty()) {
        MatX<float> fobs(kObsDim, static_cast<int>(finished.size()));
        for (std::size_t j = 0; j < finished.size(); ++j) {
          const auto a = step.infos[static_cast<std::size_t>(finished[j])].final_observation.to_array();
          for (int o = 0; o < kObsDim; ++o) fobs(o, static_cast<int>(j)) = static_cast<float>(a[static_cast<std::size_t>(o)]);
        }
        const MatX<float>& fv = final_evaluator.values(params, fobs);
        for (std::size_t j = 0; j < finished.size(); ++j)
          buf.final_values[static_cast<std::size_t>(t) * N + static_cast<std::size_t>(finished[j])] =
              vmean + vstd * fv(0, static_cast<int>(j));
      }
      load_obs(step.observations);
    }
    std::vector<double> bootstrap(static_cast<std::size_t>(N));
    {
      const MatX<float>& v = evaluator.values(params, obs);
      for (int i = 0; i < N; ++i) bootstrap[static_cast<std::size_t>(i)] = vmean + vstd * v(0, i);
    }
    buf.compute_advantages(bootstrap, cfg.gamma, cfg.gae_lambda);

    // --- targets ---
    if (cfg.normalize_values) value_stats.update(buf.returns);
    const double tmean = cfg.normalize_values ? value_stats.mean() : 0.0;
    const double tstd = cfg.normalize_values ? value_stats.std() : 1.0;
    std::vector<float> adv(B), target(B);
    {
      double am = 0.0, as = 1.0;
      if (cfg.normalize_advantages) {
        am = std::accumulate(buf.advantages.begin(), buf.advantages.end(), 0.0) / static_cast<double>(B);
        double sq = 0.0;
        for (double a : buf.advantages) sq += (a - am) * (a - am);
        as = std::sqrt(sq / static_cast<double>(B)) + 1e-8;
      }
      for (std::size_t k = 0; k < B; ++k) {
        adv[k] = static_cast<float>((buf.advantages[k] - am) / as);
        target[k] = static_cast<float>((buf.returns[k] - tmean) / tstd);
      }
    }

    // --- update ---
    UpdateStats us;
    us.update = u;
    us.lr = lr;
    double loss_sum = 0.0, pol_sum = 0.0, val_sum = 0.0, kl_sum = 0.0, clip_sum = 0.0;
    double an_sum = 0.0, cn_sum = 0.0;
    int n_mb = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const auto order = minibatch_order(B, cfg.seed, u, epoch);
      for (std::size_t start = 0; start < B; start += M) {
        tbb::parallel_for(0, C, [&](int c) {
          const auto uc = static_cast<std::size_t>(c);
          PpoBatch<float>& b = chunk_batches[uc];
          const auto n = static_cast<int>(chunk);
          b.obs.resize(kObsDim, n);
          b.pre_squash.resize(kActDim, n);
          b.old_log_prob.resize(n);
          b.advantages.resize(n);
          b.value_targets.resize(n);
          for (int j = 0; j < n; ++j) {
            const std::size_t k = order[start + uc * chunk + static_cast<std::size_t>(j)];
            for (int o = 0; o < kObsDim; ++o) b.obs(o, j) = buf.obs[k * kObsDim + static_cast<std::size_t>(o)];
            for (int a = 0; a < kActDim; ++a)
              b.pre_squash(a, j) = buf.pre_squash[k * kActDim + static_cast<std::size_t>(a)];
            b.old_log_prob[j] = static_cast<float>(buf.log_probs[k]);
            b.advantages[j] = adv[k];
            b.value_targets[j] = target[k];
          }
          PpoCoefficients cc = coefs;
          cc.entropy = c == 0 ? cfg.entropy_coef : 0.0;
          std::fill(chunk_grads[uc].begin(), chunk_grads[uc].end(), 0.0f);
          chunk_stats[uc] = ppo_loss<float>(layout, params.data(), b, cc, chunk_grads[uc].data(), 1.0f, M);
        });
        std::fill(grad.begin(), grad.end(), 0.0f);
        double total = 0.0;
        for (int c = 0; c < C; ++c) {
          const auto uc = static_cast<std::size_t>(c);
          for (std::size_t i = 0; i < n_params; ++i) grad[i] += chunk_grads[uc][i];
          total += chunk_stats[uc].total;
          pol_sum += chunk_stats[uc].policy;
          val_sum += chunk_stats[uc].value;
          kl_sum += chunk_stats[uc].approx_kl;
          clip_sum += chunk_stats[uc].clip_fraction;
        }
        if (!std::isfinite(total) || !all_finite(grad)) {
          if (last_good) *last_good = make_policy(cfg, params, value_stats);
          throw TrainingError("ppo: non-finite loss or gradient at update " + std::to_string(u) + ", epoch " +
                              std::to_string(epoch) + " (loss " + std::to_string(total) + ")");
        }
        loss_sum += total;
        an_sum += clip_grad_norm(grad, 0, layout.actor_end(), cfg.grad_clip_norm);
        cn_sum += clip_grad_norm(grad, layout.actor_end(), n_params, cfg.grad_clip_norm);
        adam.step(params, grad, lr);
        ++n_mb;
      }
    }
    if (!all_finite(params)) {
      throw TrainingError("ppo: parameters became non-finite at update " + std::to_string(u));
    }
    if (last_good) *last_good = make_policy(cfg, params, value_stats);
    us.loss.total = loss_sum / n_mb;
    us.loss.policy = pol_sum / n_mb;
    us.loss.value = val_sum / n_mb;
    us.loss.entropy = gaussian_entropy<float>(params.data() + layout.log_std_offset(), kActDim);
    us.loss.approx_kl = kl_sum / n_mb;
    us.loss.clip_fraction = clip_sum / n_mb;
    us.actor_grad_norm = an_sum / n_mb;
    us.critic_grad_norm = cn_sum / n_mb;

    LearningCurveRow row;
    row.step = static_cast<std::int64_t>(u + 1) * static_cast<std::int64_t>(B);
    if (recent.empty()) {
      row.mean_return = row.std_return = std::numeric_limits<double>::quiet_NaN();
    } else {
      double m = 0.0;
      for (double r : recent) m += r;
      m /= static_cast<double>(recent.size());
      double s = 0.0;
      for (double r : recent) s += (r - m) * (r - m);
      row.mean_return = m;
      row.std_return = std::sqrt(s / static_cast<double>(recent.size()));
    }
    result.curve.push_back(row);
    result.updates.push_back(us);
    if (progress) progress(us, row);
  }
  result.update_count = U;
  result.policy = make_policy(cfg, params, value_stats);
  return result;
}

void write_learning_curve_csv(std::ostream& out, const std::vector<LearningCurveRow>& rows) {
  out << "step,mean_return,std_return\n";
  out.precision(10);
  for (const auto& r : rows) out << r.step << "," << r.mean_return << "," << r.std_return << "\n";
}

// --- evaluation ----------------------------------------------------------------

Controller greedy_controller(const Policy& policy) {
  auto p = std::make_shared<const Policy>(policy);
  return [p](const Observation& obs, const PrivilegedState&) { return p->act(obs); };
}

Controller zero_controller() {
  return [](const Observation&, const PrivilegedState&) { return Action{0.0, 0.0}; };
}

Controller random_controller(std::uint64_t seed) {
  auto rng = std::make_shared<CounterRng>(seed);
  return [rng](const Observation&, const PrivilegedState&) {
    const double a0 = rng->uniform(-1.0, 1.0);
    const double a1 = rng->uniform(-1.0, 1.0);
    return Action{a0, a1};
  };
}

Controller tracking_controller(std::shared_ptr<const WaypointTrajectory> trajectory, const DynamicsParams& dyn) {
  return [trajectory, dyn](const Observation&, const PrivilegedState& s) {
    constexpr double h = 0.02;
    const Pose2 ahead = trajectory->pose(s.t + h);
    const Pose2 behind = trajectory->pose(std::max(0.0, s.t - h));
    const double span = s.t + h - std::max(0.0, s.t - h);
    const double v_ref = (ahead.position - behind.position).norm() / span;
    const double w_ref = wrap_angle(ahead.yaw - behind.yaw) / span;

    const Vec2 d = s.target.position - s.rover.position;
    const double c = std::cos(s.rover.yaw), sn = std::sin(s.rover.yaw);
    const double ex = c * d.x + sn * d.y;
    const double ey = -sn * d.x + c * d.y;
    const double eth = wrap_angle(s.target.yaw - s.rover.yaw);
    constexpr double kx = 3.0, ky = 60.0, kth = 6.0;
    const double v = v_ref * std::cos(eth) + kx * ex;
    const double w = w_ref + v_ref * (ky * ey + kth * std::sin(eth)) + 1.5 * std::sin(eth) * (v_ref < 1e-3 ? 1.0 : 0.0);
    return Action{std::clamp(v / dyn.max_lin_speed, -1.0, 1.0), std::clamp(w / dyn.max_ang_speed, -1.0, 1.0)};
  };
}

std::uint64_t eval_terrain_seed(std::uint64_t seed, int episode) {
  return stream_key({seed, tag(Stream::kEvalTerrain), static_cast<std::uint64_t>(episode)});
}

EvalResult evaluate(const std::function<Controller(std::shared_ptr<const WaypointTrajectory>)>& make_controller,
                    const EvalConfig& cfg, const std::vector<EpisodeLog>* baseline) {
  if (cfg.episodes < 1) throw ConfigError("eval: episodes must be >= 1");
  if (!(cfg.laps > 1.0)) throw ConfigError("eval: laps must be > 1 so that a lap remains after the first");
  if (baseline && baseline->size() != static_cast<std::size_t>(cfg.episodes))
    throw UsageError("eval: baseline episode count differs");
  std::shared_ptr<const ClosedPathTrajectory> traj = eval_trajectory(cfg.trajectory, cfg.speed, cfg.geometry);
  EnvConfig env_cfg = cfg.env;
  env_cfg.filter = cfg.filter;
  EvalResult res;
  res.path_length = traj->path_length();
  res.period = traj->period();
  const double dt = env_cfg.dynamics.dt;
  const int steps = static_cast<int>(std::ceil(cfg.laps * res.period / dt));
  const auto lap_steps = static_cast<std::size_t>(std::ceil(res.period / dt));

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    TerrainParams tp = cfg.terrain;
    tp.seed = eval_terrain_seed(cfg.seed, ep);
    auto terrain = std::make_shared<const Terrain>(generate_terrain(tp));
    RoverEnv env(env_cfg, cfg.toggles, terrain, stream_key({cfg.seed, tag(Stream::kEvalTerrain)}),
                 static_cast<std::uint64_t>(ep));
    Observation obs = env.reset_with_trajectory(0, traj, steps);
    Controller ctl = make_controller(traj);
    EpisodeLog log;
    log.reserve(static_cast<std::size_t>(steps));
    for (int s = 0; s < steps; ++s) {
      const StepOutput out = env.step(ctl(obs, env.privileged_state()));
      log.push_back(env.last_record());
      obs = out.observation;
    }
    std::optional<std::span<const EnvStepRecord>> base;
    if (baseline) base = std::span<const EnvStepRecord>((*baseline)[static_cast<std::size_t>(ep)]);
    res.episodes.push_back(summarize(log, res.path_length, lap_steps, base));
    res.logs.push_back(std::move(log));
  }
  MetricsSummary& m = res.mean;
  const auto n = static_cast<double>(res.episodes.size());
  m.jerk_rel = 0.0;
  for (const auto& e : res.episodes) {
    m.ate_pos += e.ate_pos / n;
    m.ate_yaw += e.ate_yaw / n;
    m.jerk_abs += e.jerk_abs / n;
    m.jerk_rel += e.jerk_rel / n;
    m.n_steps += e.n_steps;
    m.lap_count += e.lap_count;
  }
  return res;
}

EvalResult evaluate_policy(const Policy& policy, const EvalConfig& cfg, const std::vector<EpisodeLog>* baseline) {
  const Controller ctl = greedy_controller(policy);
  return evaluate([&](std::shared_ptr<const WaypointTrajectory>) { return ctl; }, cfg, baseline);
}

std::vector<double> episode_returns(const Controller& controller, const RegimeConfig& regime, int episodes_per_env) {
  if (episodes_per_env < 1) throw ConfigError("episode_returns: episodes_per_env must be >= 1");
  VecEnv venv(regime);
  const int N = venv.size();
  std::vector<double> obs = venv.reset();
  std::vector<double> running(static_cast<std::size_t>(N), 0.0), returns;
  std::vector<int> done(static_cast<std::size_t>(N), 0);
  std::vector<double> actions(static_cast<std::size_t>(N) * kActDim);
  const int steps = episodes_per_env * regime.env.episode_steps;
  for (int s = 0; s < steps; ++s) {
    for (int i = 0; i < N; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      Observation o{{obs[ui * kObsDim], obs[ui * kObsDim + 1]}, obs[ui * kObsDim + 2], obs[ui * kObsDim + 3]};
      const Action a = controller(o, venv.env(i).privileged_state());
      actions[ui * kActDim] = a[0];
      actions[ui * kActDim + 1] = a[1];
    }
    const BatchStep& b = venv.step(actions);
    for (int i = 0; i < N; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      running[ui] += b.rewards[ui];
      if (b.infos[ui].auto_reset) {
        returns.push_back(running[ui]);
        running[ui] = 0.0;
      }
    }
    obs = b.observations;
  }
  return returns;
}

}  // namespace rovertrack
