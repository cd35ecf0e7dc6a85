#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rovertrack/env.hpp"
#include "rovertrack/mlp.hpp"

namespace rovertrack {

struct PolicySpec {
  int obs_dim = kObsDim;
  int act_dim = kActDim;
  std::vector<int> hidden{384, 384};
  double log_std_init = -0.6931471805599453;  // ln 0.5

  void validate() const;
};

/// Named slice of the flat parameter vector.
struct TensorView {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size() const;
};

/// Actor network, state-independent log-std, critic network, in that order.
class PolicyLayout {
 public:
  explicit PolicyLayout(const PolicySpec& spec);

  /// Closed-form parameter count for a spec.
  static std::size_t count_for(const PolicySpec& spec);

  const PolicySpec& spec() const { return spec_; }
  const MlpLayout& actor() const { return actor_; }
  const MlpLayout& critic() const { return critic_; }
  std::size_t log_std_offset() const { return log_std_offset_; }
  /// Actor parameters (network plus log-std) occupy [0, actor_end()).
  std::size_t actor_end() const { return critic_.offset(); }
  std::size_t count() const { return critic_.end(); }
  const std::vector<TensorView>& tensors() const { return tensors_; }

 private:
  PolicySpec spec_;
  MlpLayout actor_;
  std::size_t log_std_offset_ = 0;
  MlpLayout critic_;
  std::vector<TensorView> tensors_;
};

/// Scaled-uniform weights (output heads shrunk), zero biases, log-std at its
/// initial value. Deterministic in seed.
std::vector<float> init_policy_params(const PolicyLayout& layout, std::uint64_t seed);

inline constexpr double kLogSqrtTwoPi = 0.91893853320467274178;

/// Log-density of u under N(mean, exp(log_std)^2), summed over dimensions.
template <typename S>
S gaussian_log_prob(const S* u, const S* mean, const S* log_std, int dim) {
  S lp = 0;
  for (int k = 0; k < dim; ++k) {
    const S z = (u[k] - mean[k]) / std::exp(log_std[k]);
    lp += S(-0.5) * z * z - log_std[k] - S(kLogSqrtTwoPi);
  }
  return lp;
}

/// Log-density of a = tanh(u) including the change-of-variables term.
double squashed_log_prob(const Action& a, const Action& mean, const Action& log_std);

/// Entropy of the diagonal Gaussian before squashing.
template <typename S>
S gaussian_entropy(const S* log_std, int dim) {
  S h = 0;
  for (int k = 0; k < dim; ++k) h += S(0.5) + S(kLogSqrtTwoPi) + log_std[k];
  return h;
}

/// Minibatch for the PPO objective. Columns are samples.
template <typename S>
struct PpoBatch {
  MatX<S> obs;              // obs_dim x B
  MatX<S> pre_squash;       // act_dim x B, the sampled Gaussian variable u
  VecX<S> old_log_prob;     // Gaussian part only; the squash term cancels in the ratio
  VecX<S> advantages;
  VecX<S> value_targets;    // in the critic's (normalized) output scale
};

struct PpoCoefficients {
  double clip = 0.2;
  double entropy = 0.01;
  double value = 0.5;
  double policy = 1.0;  // scales the surrogate term; set to 0 to isolate others
};

struct LossStats {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

/// loss = -mean(min(rA, clip(r, 1-eps, 1+eps)A)) - c_e H + c_v mean((V - target)^2)
/// If `grad` is non-null the gradient with respect to all parameters is
/// accumulated into it (scaled by `grad_scale`, e.g. chunk weight).
template <typename S>
LossStats ppo_loss(const PolicyLayout& layout, const S* params, const PpoBatch<S>& batch, const PpoCoefficients& c,
                   S* grad, S grad_scale = S(1), std::size_t normalizer = 0) {
  const int act_dim = layout.spec().act_dim;
  const auto n = static_cast<int>(batch.obs.cols());
  const S inv_n = S(1) / static_cast<S>(normalizer ? normalizer : static_cast<std::size_t>(n));
  const S* log_std = params + layout.log_std_offset();

  MlpCache<S> actor_cache, critic_cache;
  const MatX<S>& mean = mlp_forward(layout.actor(), params, batch.obs, actor_cache);
  const MatX<S>& value = mlp_forward(layout.critic(), params, batch.obs, critic_cache);

  LossStats st;
  MatX<S> d_mean(act_dim, n);
  std::vector<S> d_log_std(static_cast<std::size_t>(act_dim), S(0));
  MatX<S> d_value(1, n);
  double pol = 0.0, val = 0.0, kl = 0.0, clipped = 0.0;
  for (int i = 0; i < n; ++i) {
    const S lp = gaussian_log_prob<S>(batch.pre_squash.col(i).data(), mean.col(i).data(), log_std, act_dim);
    const S log_ratio = lp - batch.old_log_prob[i];
    const S ratio = std::exp(log_ratio);
    const S adv = batch.advantages[i];
    const S lo = S(1) - S(c.clip), hi = S(1) + S(c.clip);
    const S clipped_ratio = ratio < lo ? lo : (ratio > hi ? hi : ratio);
    const S s1 = ratio * adv, s2 = clipped_ratio * adv;
    const bool unclipped = s1 <= s2;
    pol += static_cast<double>(unclipped ? s1 : s2);
    if (ratio < lo || ratio > hi) clipped += 1.0;
    kl += static_cast<double>((ratio - S(1)) - log_ratio);

    // d(-c_p * surrogate / n)/d lp
    const S g_lp = unclipped ? -S(c.policy) * ratio * adv * inv_n : S(0);
    for (int k = 0; k < act_dim; ++k) {
      const S sigma = std::exp(log_std[k]);
      const S z = (batch.pre_squash(k, i) - mean(k, i)) / sigma;
      d_mean(k, i) = g_lp * z / sigma;
      d_log_std[static_cast<std::size_t>(k)] += g_lp * (z * z - S(1));
    }
    const S err = value(0, i) - batch.value_targets[i];
    val += static_cast<double>(err * err);
    d_value(0, i) = S(2) * S(c.value) * err * inv_n;
  }
  const double entropy = static_cast<double>(gaussian_entropy<S>(log_std, act_dim));
  st.policy = -c.policy * pol * static_cast<double>(inv_n);
  st.value = val * static_cast<double>(inv_n);
  st.entropy = entropy;
  st.approx_kl = kl * static_cast<double>(inv_n);
  st.clip_fraction = clipped * static_cast<double>(inv_n);
  // The entropy term does not depend on the batch; a chunked caller keeps it
  // in one chunk only.
  st.total = st.policy + c.value * st.value - c.entropy * entropy;

  if (grad) {
    if (grad_scale != S(1)) {
      d_mean *= grad_scale;
      d_value *= grad_scale;
      for (auto& g : d_log_std) g *= grad_scale;
    }
    mlp_backward(layout.actor(), params, actor_cache, d_mean, grad);
    mlp_backward(layout.critic(), params, critic_cache, d_value, grad);
    for (int k = 0; k < act_dim; ++k)
      grad[layout.log_std_offset() + static_cast<std::size_t>(k)] +=
          d_log_std[static_cast<std::size_t>(k)] - grad_scale * S(c.entropy);
  }
  return st;
}

/// Batched actor/critic evaluation in single precision for rollouts.
class PolicyEvaluator {
 public:
  explicit PolicyEvaluator(const PolicyLayout& layout) : layout_(&layout) {}
  /// obs: obs_dim x B. Returns the pre-squash means (act_dim x B).
  const MatX<float>& means(const std::vector<float>& params, const MatX<float>& obs);
  /// Critic output (1 x B), in the critic's own scale.
  const MatX<float>& values(const std::vector<float>& params, const MatX<float>& obs);

 private:
  const PolicyLayout* layout_;
  MlpCache<float> actor_cache_, critic_cache_;
};

/// Trained policy plus what is needed to run and reproduce it.
struct Policy {
  PolicySpec spec;
  std::vector<float> params;
  double value_mean = 0.0;  // critic output de-normalization
  double value_std = 1.0;
  std::string config_json = "{}";  // echo of the training configuration

  /// Greedy action tanh(mean(obs)).
  Action act(const Observation& obs) const;
};

inline constexpr char kPolicyMagic[8] = {'R', 'T', 'P', 'O', 'L', 'I', 'C', 'Y'};
inline constexpr std::uint32_t kPolicyFormatVersion = 1;

/// Artifact layout: magic, u32 version, u32 length + config JSON, u32 tensor
/// count, then per tensor u16 name length + name, u32 rank, u32 dims, float32
/// little-endian data; finally a u64 FNV-1a checksum of everything before it.
void write_policy(std::ostream& out, const Policy& policy);
Policy read_policy(std::istream& in);
void save_policy(const std::string& path, const Policy& policy);
Policy load_policy(const std::string& path);

}  // namespace rovertrack
