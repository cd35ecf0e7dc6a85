#include "rovertrack/policy.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "rovertrack/rng.hpp"

namespace rovertrack {

void PolicySpec::validate() const {
  if (obs_dim < 1 || act_dim < 1) throw ConfigError("policy: dimensions must be >= 1");
  for (int h : hidden)
    if (h < 1) throw ConfigError("policy: hidden sizes must be >= 1");
  if (!std::isfinite(log_std_init)) throw ConfigError("policy: log_std_init must be finite");
}

std::size_t TensorView::size() const {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

namespace {

std::vector<int> net_sizes(const PolicySpec& spec, int out) {
  std::vector<int> sizes{spec.obs_dim};
  sizes.insert(sizes.end(), spec.hidden.begin(), spec.hidden.end());
  sizes.push_back(out);
  return sizes;
}

void add_net_views(std::vector<TensorView>& views, const std::string& prefix, const MlpLayout& net) {
  for (int l = 0; l < net.layers(); ++l) {
    const std::string base = prefix + ".l" + std::to_string(l);
    views.push_back({base + ".weight", {net.out(l), net.in(l)}, net.weight_offset(l)});
    views.push_back({base + ".bias", {net.out(l)}, net.bias_offset(l)});
  }
}

}  // namespace

PolicyLayout::PolicyLayout(const PolicySpec& spec) : spec_(spec) {
  spec_.validate();
  actor_ = MlpLayout(net_sizes(spec_, spec_.act_dim), 0);
  log_std_offset_ = actor_.end();
  critic_ = MlpLayout(net_sizes(spec_, 1), log_std_offset_ + static_cast<std::size_t>(spec_.act_dim));
  add_net_views(tensors_, "actor", actor_);
  tensors_.push_back({"actor.log_std", {spec_.act_dim}, log_std_offset_});
  add_net_views(tensors_, "critic", critic_);
}

std::size_t PolicyLayout::count_for(const PolicySpec& spec) {
  return MlpLayout::count_for(net_sizes(spec, spec.act_dim)) + static_cast<std::size_t>(spec.act_dim) +
         MlpLayout::count_for(net_sizes(spec, 1));
}

std::vector<float> init_policy_params(const PolicyLayout& layout, std::uint64_t seed) {
  std::vector<float> p(layout.count(), 0.0f);
  CounterRng rng(stream_key({seed, tag(Stream::kPolicyInit)}));
  auto fill = [&](const MlpLayout& net, double head_scale) {
    for (int l = 0; l < net.layers(); ++l) {
      double bound = std::sqrt(6.0 / (net.in(l) + net.out(l)));
      if (l + 1 == net.layers()) bound *= head_scale;
      const std::size_t n = static_cast<std::size_t>(net.in(l)) * net.out(l);
      for (std::size_t i = 0; i < n; ++i) p[net.weight_offset(l) + i] = static_cast<float>(rng.uniform(-bound, bound));
    }
  };
  fill(layout.actor(), 0.01);
  fill(layout.critic(), 1.0);
  for (int k = 0; k < layout.spec().act_dim; ++k)
    p[layout.log_std_offset() + static_cast<std::size_t>(k)] = static_cast<float>(layout.spec().log_std_init);
  return p;
}

double squashed_log_prob(const Action& a, const Action& mean, const Action& log_std) {
  double lp = 0.0;
  for (int k = 0; k < kActDim; ++k) {
    const double u = std::atanh(a[k]);
    const double z = (u - mean[k]) / std::exp(log_std[k]);
    lp += -0.5 * z * z - log_std[k] - kLogSqrtTwoPi - std::log1p(-a[k] * a[k]);
  }
  return lp;
}

const MatX<float>& PolicyEvaluator::means(const std::vector<float>& params, const MatX<float>& obs) {
  return mlp_forward(layout_->actor(), params.data(), obs, actor_cache_);
}

const MatX<float>& PolicyEvaluator::values(const std::vector<float>& params, const MatX<float>& obs) {
  return mlp_forward(layout_->critic(), params.data(), obs, critic_cache_);
}

Action Policy::act(const Observation& obs) const {
  // Evaluated in double from the stored float weights so that greedy
  // evaluation does not depend on float GEMM blocking.
  const PolicyLayout layout(spec);
  const MlpLayout& net = layout.actor();
  const auto o = obs.to_array();
  std::vector<double> x(o.begin(), o.end());
  for (int l = 0; l < net.layers(); ++l) {
    const auto rows = static_cast<std::size_t>(net.out(l));
    std::vector<double> y(params.begin() + static_cast<std::ptrdiff_t>(net.bias_offset(l)),
                          params.begin() + static_cast<std::ptrdiff_t>(net.bias_offset(l) + rows));
    const float* w = params.data() + net.weight_offset(l);
    for (std::size_t c = 0; c < x.size(); ++c)
      for (std::size_t r = 0; r < rows; ++r) y[r] += static_cast<double>(w[c * rows + r]) * x[c];
    if (l + 1 < net.layers())
      for (auto& v : y) v = std::tanh(v);
    x = std::move(y);
  }
  return {std::tanh(x[0]), std::tanh(x[1])};
}

// --- artifact IO ------------------------------------------------------------

namespace {

template <typename T>
struct Bits {
  using type = std::make_unsigned_t<T>;
};
template <>
struct Bits<float> {
  using type = std::uint32_t;
};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <typename T>
  void le(T v) {
    static_assert(std::is_integral_v<T> || std::is_same_v<T, float>);
    using U = typename Bits<T>::type;
    U u = std::bit_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
  }
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(const std::vector<char>& buf) : buf_(buf) {}
  void bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, buf_.data() + at_, n);
    at_ += n;
  }
  template <typename T>
  T le() {
    using U = typename Bits<T>::type;
    need(sizeof(U));
    U u = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      u |= static_cast<U>(static_cast<unsigned char>(buf_[at_ + i])) << (8 * i);
    at_ += sizeof(U);
    return std::bit_cast<T>(u);
  }
  std::size_t position() const { return at_; }

 private:
  void need(std::size_t n) const {
    if (at_ + n > buf_.size()) throw ConfigError("policy artifact: truncated file");
  }
  const std::vector<char>& buf_;
  std::size_t at_ = 0;
};

}  // namespace

void write_policy(std::ostream& out, const Policy& policy) {
  const PolicyLayout layout(policy.spec);
  if (policy.params.size() != layout.count()) throw UsageError("policy: parameter count does not match spec");
  Writer w;
  w.bytes(kPolicyMagic, sizeof(kPolicyMagic));
  w.le<std::uint32_t>(kPolicyFormatVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(policy.config_json.size()));
  w.bytes(policy.config_json.data(), policy.config_json.size());

  std::vector<TensorView> views = layout.tensors();
  views.push_back({"spec.hidden", {static_cast<int>(policy.spec.hidden.size())}, 0});
  views.push_back({"value_norm", {2}, 0});
  w.le<std::uint32_t>(static_cast<std::uint32_t>(views.size()));
  for (const auto& v : views) {
    w.le<std::uint16_t>(static_cast<std::uint16_t>(v.name.size()));
    w.bytes(v.name.data(), v.name.size());
    w.le<std::uint32_t>(static_cast<std::uint32_t>(v.shape.size()));
    for (int d : v.shape) w.le<std::uint32_t>(static_cast<std::uint32_t>(d));
    if (v.name == "spec.hidden") {
      for (int h : policy.spec.hidden) w.le<float>(static_cast<float>(h));
    } else if (v.name == "value_norm") {
      w.le<float>(static_cast<float>(policy.value_mean));
      w.le<float>(static_cast<float>(policy.value_std));
    } else {
      for (std::size_t i = 0; i < v.size(); ++i) w.le<float>(policy.params[v.offset + i]);
    }
  }
  const std::uint64_t sum = fnv1a64(w.data().data(), w.data().size());
  w.le<std::uint64_t>(sum);
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  if (!out) throw std::runtime_error("policy: write failed");
}

Policy read_policy(std::istream& in) {
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kPolicyMagic) + 8) throw ConfigError("policy artifact: file too short");
  Reader r(buf);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kPolicyMagic, sizeof(magic)) != 0) throw ConfigError("policy artifact: bad magic");
  if (const auto v = r.le<std::uint32_t>(); v != kPolicyFormatVersion)
    throw ConfigError("policy artifact: unsupported version " + std::to_string(v));
  {
    std::vector<char> body(buf.begin(), buf.end() - 8);
    std::uint64_t stored = 0;
    for (std::size_t i = 0; i < 8; ++i)
      stored |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[buf.size() - 8 + i])) << (8 * i);
    if (stored != fnv1a64(body.data(), body.size())) throw ConfigError("policy artifact: checksum mismatch");
  }
  Policy p;
  const auto cfg_len = r.le<std::uint32_t>();
  p.config_json.assign(cfg_len, '\0');
  r.bytes(p.config_json.data(), cfg_len);

  struct Raw {
    std::vector<int> shape;
    std::vector<float> data;
  };
  std::vector<std::pair<std::string, Raw>> raw;
  const auto count = r.le<std::uint32_t>();
  for (std::uint32_t t = 0; t < count; ++t) {
    std::string name(r.le<std::uint16_t>(), '\0');
    r.bytes(name.data(), name.size());
    Raw tensor;
    const auto rank = r.le<std::uint32_t>();
    if (rank > 8) throw ConfigError("policy artifact: bad tensor rank");
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      tensor.shape.push_back(static_cast<int>(r.le<std::uint32_t>()));
      n *= static_cast<std::size_t>(tensor.shape.back());
    }
    if (n > buf.size()) throw ConfigError("policy artifact: tensor larger than file");
    tensor.data.resize(n);
    for (auto& x : tensor.data) x = r.le<float>();
    raw.emplace_back(std::move(name), std::move(tensor));
  }
  auto find = [&](const std::string& name) -> const Raw& {
    for (const auto& [n, t] : raw)
      if (n == name) return t;
    throw ConfigError("policy artifact: missing tensor '" + name + "'");
  };
  const Raw& hidden = find("spec.hidden");
  p.spec.hidden.clear();
  for (float h : hidden.data) p.spec.hidden.push_back(static_cast<int>(h));
  const Raw& l0 = find("actor.l0.weight");
  if (l0.shape.size() != 2) throw ConfigError("policy artifact: bad actor input layer");
  p.spec.obs_dim = l0.shape[1];
  p.spec.act_dim = find("actor.log_std").shape.at(0);
  p.spec.log_std_init = find("actor.log_std").data.at(0);
  const PolicyLayout layout(p.spec);
  p.params.assign(layout.count(), 0.0f);
  for (const auto& v : layout.tensors()) {
    const Raw& t = find(v.name);
    if (t.shape != v.shape) throw ConfigError("policy artifact: shape mismatch for '" + v.name + "'");
    std::copy(t.data.begin(), t.data.end(), p.params.begin() + static_cast<std::ptrdiff_t>(v.offset));
  }
  const Raw& vn = find("value_norm");
  p.value_mean = vn.data.at(0);
  p.value_std = vn.data.at(1);
  return p;
}

void save_policy(const std::string& path, const Policy& policy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("policy: cannot open '" + path + "' for writing");
  write_policy(out, policy);
}

Policy load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("policy: cannot open '" + path + "'");
  return read_policy(in);
}

}  // namespace rovertrack
