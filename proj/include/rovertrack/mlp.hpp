#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

#include "rovertrack/common.hpp"

namespace rovertrack {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Dense network with tanh hidden layers and a linear output layer, stored in
/// an external flat parameter vector starting at `offset`. Per layer the
/// weight matrix (out x in, column-major) is followed by the bias.
class MlpLayout {
 public:
  MlpLayout() = default;
  MlpLayout(std::vector<int> sizes, std::size_t offset) : sizes_(std::move(sizes)), offset_(offset) {
    if (sizes_.size() < 2) throw ConfigError("mlp: need at least input and output sizes");
    for (int s : sizes_)
      if (s < 1) throw ConfigError("mlp: layer sizes must be >= 1");
    std::size_t at = offset_;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weight_.push_back(at);
      at += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1];
      bias_.push_back(at);
      at += static_cast<std::size_t>(sizes_[l + 1]);
    }
    end_ = at;
  }

  static std::size_t count_for(const std::vector<int>& sizes) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
      n += static_cast<std::size_t>(sizes[l]) * sizes[l + 1] + sizes[l + 1];
    return n;
  }

  const std::vector<int>& sizes() const { return sizes_; }
  int layers() const { return static_cast<int>(sizes_.size()) - 1; }
  int in(int l) const { return sizes_[static_cast<std::size_t>(l)]; }
  int out(int l) const { return sizes_[static_cast<std::size_t>(l) + 1]; }
  std::size_t weight_offset(int l) const { return weight_[static_cast<std::size_t>(l)]; }
  std::size_t bias_offset(int l) const { return bias_[static_cast<std::size_t>(l)]; }
  std::size_t offset() const { return offset_; }
  std::size_t end() const { return end_; }
  std::size_t count() const { return end_ - offset_; }

 private:
  std::vector<int> sizes_;
  std::size_t offset_ = 0;
  std::size_t end_ = 0;
  std::vector<std::size_t> weight_;
  std::vector<std::size_t> bias_;
};

/// Activations kept for the backward pass; acts[0] is the input batch
/// (features x batch), acts[l] the output of layer l.
template <typename S>
struct MlpCache {
  std::vector<MatX<S>> acts;
};

template <typename S>
const MatX<S>& mlp_forward(const MlpLayout& layout, const S* params, const MatX<S>& x, MlpCache<S>& cache) {
  using CMap = Eigen::Map<const MatX<S>>;
  using CVec = Eigen::Map<const VecX<S>>;
  const int n_layers = layout.layers();
  cache.acts.resize(static_cast<std::size_t>(n_layers) + 1);
  cache.acts[0] = x;
  for (int l = 0; l < n_layers; ++l) {
    CMap w(params + layout.weight_offset(l), layout.out(l), layout.in(l));
    CVec b(params + layout.bias_offset(l), layout.out(l));
    MatX<S>& y = cache.acts[static_cast<std::size_t>(l) + 1];
    y.noalias() = w * cache.acts[static_cast<std::size_t>(l)];
    y.colwise() += b;
    if (l + 1 < n_layers) y = y.array().tanh();
  }
  return cache.acts.back();
}

/// Accumulates dLoss/dparams into `grad` (same indexing as params) given the
/// loss gradient with respect to the network output.
template <typename S>
void mlp_backward(const MlpLayout& layout, const S* params, const MlpCache<S>& cache, const MatX<S>& dy, S* grad) {
  using CMap = Eigen::Map<const MatX<S>>;
  using Map = Eigen::Map<MatX<S>>;
  using VMap = Eigen::Map<VecX<S>>;
  // Products and reductions are evaluated into owning (aligned) storage before
  // touching params/grad: with an unaligned Map on either side Eigen splits
  // the work between packet and scalar paths by address, which changes the
  // summation order and makes results depend on heap layout.
  MatX<S> delta = dy, gw_l, w_l;
  VecX<S> gb_l;
  for (int l = layout.layers() - 1; l >= 0; --l) {
    const MatX<S>& input = cache.acts[static_cast<std::size_t>(l)];
    Map gw(grad + layout.weight_offset(l), layout.out(l), layout.in(l));
    VMap gb(grad + layout.bias_offset(l), layout.out(l));
    gw_l.noalias() = delta * input.transpose();
    gw += gw_l;
    gb_l = delta.rowwise().sum();
    gb += gb_l;
    if (l > 0) {
      w_l = CMap(params + layout.weight_offset(l), layout.out(l), layout.in(l));
      MatX<S> back = w_l.transpose() * delta;
      delta = back.array() * (S(1) - input.array().square());
    }
  }
}

}  // namespace rovertrack
