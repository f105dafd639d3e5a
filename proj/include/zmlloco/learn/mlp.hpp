#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "zmlloco/rng.hpp"

namespace zmlloco {

template <typename S>
using MatrixS = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VectorS = Eigen::Matrix<S, Eigen::Dynamic, 1>;

enum class Activation { elu, tanh, identity };

// Fully connected network over column batches. Parameters live in one flat
// vector, layer by layer: W (out x in, column-major) then b (out).
template <typename S>
class Mlp {
 public:
  struct Cache {
    std::vector<MatrixS<S>> pre;  // pre-activations per layer
    std::vector<MatrixS<S>> act;  // act[0] is the input
  };

  Mlp() = default;
  explicit Mlp(std::vector<int> sizes, Activation hidden = Activation::elu)
      : sizes_(std::move(sizes)), hidden_(hidden) {
    if (sizes_.size() < 2) throw std::invalid_argument("an MLP needs at least two layer sizes");
    Eigen::Index n = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back(n);
      n += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
    }
    params_ = VectorS<S>::Zero(n);
  }

  const std::vector<int>& sizes() const { return sizes_; }
  Activation hidden_activation() const { return hidden_; }
  int in_dim() const { return sizes_.front(); }
  int out_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  Eigen::Index num_params() const { return params_.size(); }
  VectorS<S>& params() { return params_; }
  const VectorS<S>& params() const { return params_; }

  // He-scaled normal weights, zero biases; the output layer is scaled by
  // `output_gain`.
  void init(Rng& rng, double output_gain = 1.0) {
    for (int l = 0; l < num_layers(); ++l) {
      auto W = weight(l);
      const double scale = std::sqrt(2.0 / sizes_[static_cast<std::size_t>(l)]) *
                           (l + 1 == num_layers() ? output_gain : 1.0);
      for (Eigen::Index j = 0; j < W.cols(); ++j)
        for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = static_cast<S>(scale * rng.normal());
      bias(l).setZero();
    }
  }

  Eigen::Map<MatrixS<S>> weight(int l) {
    return {params_.data() + offsets_[static_cast<std::size_t>(l)], sizes_[static_cast<std::size_t>(l) + 1],
            sizes_[static_cast<std::size_t>(l)]};
  }
  Eigen::Map<const MatrixS<S>> weight(int l) const {
    return {params_.data() + offsets_[static_cast<std::size_t>(l)], sizes_[static_cast<std::size_t>(l) + 1],
            sizes_[static_cast<std::size_t>(l)]};
  }
  Eigen::Map<VectorS<S>> bias(int l) {
    return {params_.data() + offsets_[static_cast<std::size_t>(l)] +
                static_cast<Eigen::Index>(sizes_[static_cast<std::size_t>(l) + 1]) * sizes_[static_cast<std::size_t>(l)],
            sizes_[static_cast<std::size_t>(l) + 1]};
  }
  Eigen::Map<const VectorS<S>> bias(int l) const {
    return {params_.data() + offsets_[static_cast<std::size_t>(l)] +
                static_cast<Eigen::Index>(sizes_[static_cast<std::size_t>(l) + 1]) * sizes_[static_cast<std::size_t>(l)],
            sizes_[static_cast<std::size_t>(l) + 1]};
  }

  MatrixS<S> forward(const MatrixS<S>& x) const {
    MatrixS<S> a = x;
    for (int l = 0; l < num_layers(); ++l) {
      MatrixS<S> z = weight(l) * a;
      z.colwise() += bias(l);
      a = l + 1 == num_layers() ? z : activate(z);
    }
    return a;
  }

  MatrixS<S> forward(const MatrixS<S>& x, Cache& c) const {
    c.pre.resize(static_cast<std::size_t>(num_layers()));
    c.act.resize(static_cast<std::size_t>(num_layers()) + 1);
    c.act[0] = x;
    for (int l = 0; l < num_layers(); ++l) {
      const std::size_t k = static_cast<std::size_t>(l);
      c.pre[k] = weight(l) * c.act[k];
      c.pre[k].colwise() += bias(l);
      c.act[k + 1] = l + 1 == num_layers() ? c.pre[k] : activate(c.pre[k]);
    }
    return c.act.back();
  }

  // Accumulates dLoss/dparams into `grad`; optionally returns dLoss/dx.
  void backward(const Cache& c, const MatrixS<S>& dy, VectorS<S>& grad,
                MatrixS<S>* dx = nullptr) const {
    if (grad.size() != num_params()) grad = VectorS<S>::Zero(num_params());
    MatrixS<S> d = dy;
    for (int l = num_layers() - 1; l >= 0; --l) {
      const std::size_t k = static_cast<std::size_t>(l);
      if (l + 1 != num_layers()) d = d.cwiseProduct(activate_grad(c.pre[k], c.act[k + 1]));
      const Eigen::Index off = offsets_[k];
      const int out = sizes_[k + 1], in = sizes_[k];
      Eigen::Map<MatrixS<S>>(grad.data() + off, out, in).noalias() += d * c.act[k].transpose();
      Eigen::Map<VectorS<S>>(grad.data() + off + static_cast<Eigen::Index>(out) * in, out) += d.rowwise().sum();
      if (l > 0 || dx) d = weight(l).transpose() * d;
    }
    if (dx) *dx = d;
  }

  template <typename T>
  Mlp<T> cast() const {
    Mlp<T> m(sizes_, hidden_);
    m.params() = params_.template cast<T>();
    return m;
  }

 private:
  MatrixS<S> activate(const MatrixS<S>& z) const {
    switch (hidden_) {
      case Activation::elu:
        return z.unaryExpr([](S v) { return v > S(0) ? v : std::expm1(v); });
      case Activation::tanh: return z.array().tanh().matrix();
      case Activation::identity: return z;
    }
    return z;
  }
  MatrixS<S> activate_grad(const MatrixS<S>& z, const MatrixS<S>& a) const {
    switch (hidden_) {
      case Activation::elu:
        return z.binaryExpr(a, [](S zv, S av) { return zv > S(0) ? S(1) : av + S(1); });
      case Activation::tanh: return (S(1) - a.array().square()).matrix();
      case Activation::identity: return MatrixS<S>::Ones(z.rows(), z.cols());
    }
    return MatrixS<S>::Ones(z.rows(), z.cols());
  }

  std::vector<int> sizes_;
  Activation hidden_ = Activation::elu;
  std::vector<Eigen::Index> offsets_;
  VectorS<S> params_;
};

}  // namespace zmlloco
