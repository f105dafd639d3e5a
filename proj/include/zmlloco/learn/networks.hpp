#pragma once

#include <cmath>
#include <numbers>

#include "zmlloco/learn/mlp.hpp"
#include "zmlloco/types.hpp"

namespace zmlloco {

inline std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

// Diagonal Gaussian policy: MLP mean with a state-independent log-std.
template <typename S>
struct PolicyNet {
  Mlp<S> net;
  VectorS<S> log_std;

  PolicyNet() = default;
  PolicyNet(int obs_dim, const std::vector<int>& hidden, int n_act, double init_std = 1.0)
      : net(layer_sizes(obs_dim, hidden, n_act)),
        log_std(VectorS<S>::Constant(n_act, static_cast<S>(std::log(init_std)))) {}

  int n_act() const { return net.out_dim(); }
  MatrixS<S> mean(const MatrixS<S>& obs) const { return net.forward(obs); }

  // Log-density of `actions` (n_act x B) under N(mean, exp(log_std)^2).
  VectorS<S> log_prob(const MatrixS<S>& mean, const MatrixS<S>& actions) const {
    const VectorS<S> inv_std = (-log_std.array()).exp().matrix();
    const S constant = log_std.sum() + static_cast<S>(0.5 * std::log(2.0 * std::numbers::pi)) * static_cast<S>(n_act());
    VectorS<S> lp(actions.cols());
    for (Eigen::Index i = 0; i < actions.cols(); ++i) {
      const auto z = ((actions.col(i) - mean.col(i)).array() * inv_std.array());
      lp(i) = static_cast<S>(-0.5) * z.square().sum() - constant;
    }
    return lp;
  }

  S entropy() const {
    return log_std.sum() + static_cast<S>(0.5 * (1.0 + std::log(2.0 * std::numbers::pi))) * static_cast<S>(n_act());
  }

  template <typename T>
  PolicyNet<T> cast() const {
    PolicyNet<T> p;
    p.net = net.template cast<T>();
    p.log_std = log_std.template cast<T>();
    return p;
  }
};

// Critic with one output head per reward term; V_total is the head sum.
template <typename S>
struct ValueNet {
  Mlp<S> net;

  ValueNet() = default;
  ValueNet(int obs_dim, const std::vector<int>& hidden, int heads)
      : net(layer_sizes(obs_dim, hidden, heads)) {}

  int heads() const { return net.out_dim(); }
  MatrixS<S> values(const MatrixS<S>& obs) const { return net.forward(obs); }
  VectorS<S> total(const MatrixS<S>& obs) const { return values(obs).colwise().sum().transpose(); }

  template <typename T>
  ValueNet<T> cast() const {
    ValueNet<T> v;
    v.net = net.template cast<T>();
    return v;
  }
};

// Running mean and variance over observation columns, merged batch-wise.
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(int dim, double clip = 5.0)
      : mean_(VecX::Zero(dim)), var_(VecX::Ones(dim)), clip_(clip) {}

  int dim() const { return static_cast<int>(mean_.size()); }
  const VecX& mean() const { return mean_; }
  const VecX& var() const { return var_; }
  double count() const { return count_; }
  double clip() const { return clip_; }
  void set_state(VecX mean, VecX var, double count) {
    mean_ = std::move(mean);
    var_ = std::move(var);
    count_ = count;
  }

  void update(const MatX& batch) {
    const double n = static_cast<double>(batch.cols());
    if (n == 0.0) return;
    const VecX bm = batch.rowwise().mean();
    const VecX bv = (batch.colwise() - bm).array().square().rowwise().sum().matrix() / n;
    const double total = count_ + n;
    const VecX delta = bm - mean_;
    if (count_ == 0.0) {
      mean_ = bm;
      var_ = bv;
    } else {
      mean_ += delta * (n / total);
      var_ = (var_ * count_ + bv * n + delta.cwiseAbs2() * (count_ * n / total)) / total;
    }
    count_ = total;
  }

  template <typename S>
  MatrixS<S> normalize(const MatX& x) const {
    const VecX inv = (var_.array() + 1e-8).rsqrt().matrix();
    MatX z = ((x.colwise() - mean_).array().colwise() * inv.array()).matrix();
    return z.cwiseMax(-clip_).cwiseMin(clip_).template cast<S>();
  }

 private:
  VecX mean_;
  VecX var_;
  double count_ = 0.0;
  double clip_ = 5.0;
};

}  // namespace zmlloco
