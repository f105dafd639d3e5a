#pragma once

#include <cmath>
#include <algorithm>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "zmlloco/env/observation.hpp"
#include "zmlloco/json_util.hpp"
#include "zmlloco/learn/networks.hpp"
#include "zmlloco/rng.hpp"

namespace zmlloco {

class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  int epochs = 5;
  int minibatches = 4;
  double learning_rate = 1e-3;
  bool adaptive_lr = true;
  double desired_kl = 0.01;
  double lr_min = 1e-5;
  double lr_max = 1e-2;
  double value_coef = 1.0;
  double symmetry_weight = 1.0;
  double entropy_coef = 1e-3;
  double max_grad_norm = 1.0;
};

Json to_json(const PpoConfig& c);
PpoConfig ppo_config_from_json(const Json& j, const std::string& path = "ppo");

// Transitions laid out column-wise with index t * num_envs + env.
struct RolloutBuffer {
  int horizon = 0;
  int num_envs = 0;
  int heads = 0;
  MatX actor_obs;   // raw, unnormalized
  MatX critic_obs;
  MatX actions;
  VecX log_probs;
  MatX rewards;     // heads x T*N
  MatX values;      // heads x T*N
  std::vector<std::uint8_t> dones;
  MatX last_values; // heads x N, bootstrap for the state after the last step

  MatX returns;     // heads x T*N, filled by value_targets
  VecX advantages;  // T*N

  RolloutBuffer() = default;
  RolloutBuffer(int horizon, int num_envs, int heads, int actor_dim, int critic_dim, int n_act);
  int size() const { return horizon * num_envs; }
  int index(int t, int env) const { return t * num_envs + env; }
};

// Per-head lambda-returns with each head bootstrapped on its own value, and
// GAE advantages on the summed reward and summed value streams. Terminal
// transitions zero the bootstrap.
void value_targets(RolloutBuffer& buf, double gamma, double lambda);

template <typename S>
struct Adam {
  VectorS<S> m, v;
  long long t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  void step(VectorS<S>& params, const VectorS<S>& grad, double lr) {
    if (m.size() != params.size()) {
      m = VectorS<S>::Zero(params.size());
      v = VectorS<S>::Zero(params.size());
    }
    ++t;
    const S b1 = static_cast<S>(beta1), b2 = static_cast<S>(beta2);
    m = b1 * m + (S(1) - b1) * grad;
    v = b2 * v + (S(1) - b2) * grad.cwiseAbs2();
    const S c1 = static_cast<S>(1.0 - std::pow(beta1, static_cast<double>(t)));
    const S c2 = static_cast<S>(1.0 - std::pow(beta2, static_cast<double>(t)));
    const S a = static_cast<S>(lr);
    params.array() -= a * (m.array() / c1) / ((v.array() / c2).sqrt() + static_cast<S>(eps));
  }
};

template <typename S>
struct Gradients {
  VectorS<S> actor, log_std, critic;

  void zero(const PolicyNet<S>& p, const ValueNet<S>& v) {
    actor = VectorS<S>::Zero(p.net.num_params());
    log_std = VectorS<S>::Zero(p.log_std.size());
    critic = VectorS<S>::Zero(v.net.num_params());
  }
  S squared_norm() const { return actor.squaredNorm() + log_std.squaredNorm() + critic.squaredNorm(); }
  bool all_finite() const { return actor.allFinite() && log_std.allFinite() && critic.allFinite(); }
  void scale(S s) {
    actor *= s;
    log_std *= s;
    critic *= s;
  }
};

// Clipped surrogate on precomputed action means. Returns the loss (mean over
// the batch) and writes dL/dmean, dL/dlog_std.
template <typename S>
struct SurrogateTerms {
  S loss = 0, clip_fraction = 0;
  MatrixS<S> dmean;
  VectorS<S> dlog_std;
};

template <typename S>
SurrogateTerms<S> surrogate_terms(const MatrixS<S>& mean, const VectorS<S>& log_std,
                                  const MatrixS<S>& actions, const VectorS<S>& old_log_prob,
                                  const VectorS<S>& advantages, S clip) {
  const Eigen::Index B = actions.cols();
  const S inv_b = S(1) / static_cast<S>(B);
  const VectorS<S> inv_var = (S(-2) * log_std.array()).exp().matrix();
  const S constant = log_std.sum() + static_cast<S>(0.5 * std::log(2.0 * std::numbers::pi)) * static_cast<S>(log_std.size());
  SurrogateTerms<S> out;
  out.dmean = MatrixS<S>::Zero(mean.rows(), B);
  out.dlog_std = VectorS<S>::Zero(log_std.size());
  S clipped = 0;
  for (Eigen::Index i = 0; i < B; ++i) {
    const VectorS<S> diff = actions.col(i) - mean.col(i);
    const VectorS<S> z2 = diff.cwiseAbs2().cwiseProduct(inv_var);
    const S lp = S(-0.5) * z2.sum() - constant;
    const S ratio = std::exp(lp - old_log_prob(i));
    const S a = advantages(i);
    const S unclipped = ratio * a;
    const S bounded = std::clamp(ratio, S(1) - clip, S(1) + clip) * a;
    if (std::abs(ratio - S(1)) > clip) clipped += S(1);
    out.loss -= std::min(unclipped, bounded) * inv_b;
    if (unclipped <= bounded) {
      // d(-ratio * A)/dlogp = -ratio * A
      const S g = -unclipped * inv_b;
      out.dmean.col(i) = g * diff.cwiseProduct(inv_var);
      out.dlog_std += g * (z2.array() - S(1)).matrix();
    }
  }
  out.clip_fraction = clipped * inv_b;
  return out;
}

template <typename S>
S entropy_of(const VectorS<S>& log_std) {
  return log_std.sum() + static_cast<S>(0.5 * (1.0 + std::log(2.0 * std::numbers::pi))) * static_cast<S>(log_std.size());
}

// Sum over heads of the mean squared error between head outputs and targets.
template <typename S>
S value_loss_terms(const MatrixS<S>& values, const MatrixS<S>& targets, MatrixS<S>* dvalues) {
  const S inv_b = S(1) / static_cast<S>(values.cols());
  const MatrixS<S> err = values - targets;
  if (dvalues) *dvalues = (S(2) * inv_b) * err;
  return err.squaredNorm() * inv_b;
}

template <typename S>
S value_loss(const ValueNet<S>& net, const MatrixS<S>& critic_obs, const MatrixS<S>& targets,
             VectorS<S>* grad = nullptr) {
  if (!grad) return value_loss_terms<S>(net.values(critic_obs), targets, nullptr);
  typename Mlp<S>::Cache cache;
  const MatrixS<S> v = net.net.forward(critic_obs, cache);
  MatrixS<S> dv;
  const S loss = value_loss_terms<S>(v, targets, &dv);
  net.net.backward(cache, dv, *grad);
  return loss;
}

// Reflection consistency: mean_i (V(G s) - V(s))^2 with V the head sum, and
// mean_i |pi(G o) - G pi(o)|^2 with pi the action mean.
template <typename S>
struct SymmetryTerms {
  S value = 0, policy = 0;
  MatrixS<S> dmean, dmean_mirror;     // n_act x B
  MatrixS<S> dvalues, dvalues_mirror; // heads x B
};

template <typename S>
SymmetryTerms<S> symmetry_terms(const MatrixS<S>& mean, const MatrixS<S>& mean_mirror,
                                const MatrixS<S>& values, const MatrixS<S>& values_mirror,
                                const SignedPermutation& action_map) {
  const S inv_b = S(1) / static_cast<S>(mean.cols());
  SymmetryTerms<S> out;
  const Eigen::Matrix<S, 1, Eigen::Dynamic> dv = values_mirror.colwise().sum() - values.colwise().sum();
  out.value = dv.squaredNorm() * inv_b;
  out.dvalues_mirror = (S(2) * inv_b * dv).replicate(values.rows(), 1);
  out.dvalues = -out.dvalues_mirror;
  const MatrixS<S> e = mean_mirror - action_map.apply(mean);
  out.policy = e.squaredNorm() * inv_b;
  out.dmean_mirror = (S(2) * inv_b) * e;
  out.dmean.resize(mean.rows(), mean.cols());
  for (int j = 0; j < action_map.size(); ++j)
    out.dmean.row(j) = static_cast<S>(-action_map.sign[static_cast<std::size_t>(j)]) *
                       out.dmean_mirror.row(action_map.index[static_cast<std::size_t>(j)]);
  return out;
}

template <typename S>
struct SymmetryInputs {
  MatrixS<S> obs, obs_mirror;                // normalized actor observations
  MatrixS<S> critic_obs, critic_obs_mirror;  // normalized critic observations
};

template <typename S>
S symmetry_loss(const PolicyNet<S>& policy, const ValueNet<S>& value, const SymmetryInputs<S>& in,
                const SignedPermutation& action_map, Gradients<S>* grads = nullptr) {
  if (!grads) {
    const auto t = symmetry_terms<S>(policy.mean(in.obs), policy.mean(in.obs_mirror), value.values(in.critic_obs),
                                     value.values(in.critic_obs_mirror), action_map);
    return t.value + t.policy;
  }
  typename Mlp<S>::Cache pc, pcm, vc, vcm;
  const MatrixS<S> m = policy.net.forward(in.obs, pc);
  const MatrixS<S> mm = policy.net.forward(in.obs_mirror, pcm);
  const MatrixS<S> v = value.net.forward(in.critic_obs, vc);
  const MatrixS<S> vm = value.net.forward(in.critic_obs_mirror, vcm);
  const auto t = symmetry_terms<S>(m, mm, v, vm, action_map);
  policy.net.backward(pc, t.dmean, grads->actor);
  policy.net.backward(pcm, t.dmean_mirror, grads->actor);
  value.net.backward(vc, t.dvalues, grads->critic);
  value.net.backward(vcm, t.dvalues_mirror, grads->critic);
  return t.value + t.policy;
}

template <typename S>
struct Minibatch {
  SymmetryInputs<S> inputs;
  MatrixS<S> actions;
  VectorS<S> old_log_prob;
  VectorS<S> advantages;
  MatrixS<S> returns;
};

struct LossWeights {
  double surrogate = 1.0;
  double value = 1.0;
  double symmetry = 1.0;
  double entropy = 0.0;
};

template <typename S>
struct LossBreakdown {
  S surrogate = 0, value = 0, symmetry_value = 0, symmetry_policy = 0, entropy = 0, total = 0;
  S clip_fraction = 0;
  MatrixS<S> mean;  // policy mean on the minibatch
};

// Total loss w_s * surrogate + w_v * value + w_sym * symmetry - w_e * entropy
// and, when `grads` is given, its gradient (accumulated).
template <typename S>
LossBreakdown<S> ppo_loss(const PolicyNet<S>& policy, const ValueNet<S>& value, const Minibatch<S>& mb,
                          const SignedPermutation* action_map, double clip, const LossWeights& w,
                          Gradients<S>* grads) {
  const bool sym = action_map && w.symmetry != 0.0;
  typename Mlp<S>::Cache pc, pcm, vc, vcm;
  LossBreakdown<S> out;
  out.mean = policy.net.forward(mb.inputs.obs, pc);
  const MatrixS<S> v = value.net.forward(mb.inputs.critic_obs, vc);

  const auto sur = surrogate_terms<S>(out.mean, policy.log_std, mb.actions, mb.old_log_prob, mb.advantages,
                                      static_cast<S>(clip));
  out.surrogate = sur.loss;
  out.clip_fraction = sur.clip_fraction;
  MatrixS<S> dv;
  out.value = value_loss_terms<S>(v, mb.returns, grads ? &dv : nullptr);
  out.entropy = entropy_of<S>(policy.log_std);

  const S ws = static_cast<S>(w.surrogate), wv = static_cast<S>(w.value), wy = static_cast<S>(w.symmetry),
          we = static_cast<S>(w.entropy);
  MatrixS<S> dmean, dmean_m, dv_m;
  MatrixS<S> mm, vm;
  if (sym) {
    mm = policy.net.forward(mb.inputs.obs_mirror, pcm);
    vm = value.net.forward(mb.inputs.critic_obs_mirror, vcm);
    auto st = symmetry_terms<S>(out.mean, mm, v, vm, *action_map);
    out.symmetry_value = st.value;
    out.symmetry_policy = st.policy;
    if (grads) {
      dmean = ws * sur.dmean + wy * st.dmean;
      dmean_m = wy * st.dmean_mirror;
      dv = wv * dv + wy * st.dvalues;
      dv_m = wy * st.dvalues_mirror;
    }
  } else if (grads) {
    dmean = ws * sur.dmean;
    dv = wv * dv;
  }
  out.total = ws * out.surrogate + wv * out.value + wy * (out.symmetry_value + out.symmetry_policy) -
              we * out.entropy;
  if (grads) {
    policy.net.backward(pc, dmean, grads->actor);
    value.net.backward(vc, dv, grads->critic);
    if (sym) {
      policy.net.backward(pcm, dmean_m, grads->actor);
      value.net.backward(vcm, dv_m, grads->critic);
    }
    grads->log_std += ws * sur.dlog_std - we * VectorS<S>::Ones(policy.log_std.size());
  }
  return out;
}

// KL(old || new) between diagonal Gaussians, averaged over the batch.
template <typename S>
double gaussian_kl(const MatrixS<S>& old_mean, const VectorS<S>& old_log_std, const MatrixS<S>& new_mean,
                   const VectorS<S>& new_log_std) {
  const Eigen::ArrayXd os = old_log_std.template cast<double>().array();
  const Eigen::ArrayXd ns = new_log_std.template cast<double>().array();
  const Eigen::ArrayXd inv_nv = (-2.0 * ns).exp();
  const double per = (ns - os + 0.5 * (2.0 * os).exp() * inv_nv - 0.5).sum();
  const MatX d = (old_mean - new_mean).template cast<double>();
  const double quad = (d.array().square().colwise() * inv_nv).sum();
  return per + 0.5 * quad / static_cast<double>(d.cols());
}

struct MirrorMaps {
  SignedPermutation actor, critic, action;
};

struct UpdateStats {
  double surrogate = 0, value = 0, symmetry = 0, entropy = 0, kl = 0, clip_fraction = 0, lr = 0,
         grad_norm = 0;
  int minibatches = 0;
};

// Actor, critic and their optimizer state.
template <typename S>
struct Learner {
  PolicyNet<S> policy;
  ValueNet<S> value;
  Adam<S> adam_actor, adam_log_std, adam_critic;
  double lr = 1e-3;
};

inline double next_learning_rate(double lr, double kl, const PpoConfig& c) {
  if (!c.adaptive_lr) return lr;
  if (kl > 2.0 * c.desired_kl) return std::max(c.lr_min, lr / 1.5);
  if (kl < 0.5 * c.desired_kl && kl > 0.0) return std::min(c.lr_max, lr * 1.5);
  return lr;
}

// Fisher-Yates shuffle of [0, n).
inline std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(idx[static_cast<std::size_t>(i)], idx[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  return idx;
}

template <typename S>
MatrixS<S> gather_columns(const MatrixS<S>& m, const std::vector<int>& cols, std::size_t begin, std::size_t end) {
  MatrixS<S> out(m.rows(), static_cast<Eigen::Index>(end - begin));
  for (std::size_t k = begin; k < end; ++k) out.col(static_cast<Eigen::Index>(k - begin)) = m.col(cols[k]);
  return out;
}

// Per-minibatch advantage standardization.
template <typename S>
VectorS<S> normalize_advantages(const VectorS<S>& a) {
  const S mean = a.mean();
  const S var = a.size() > 1 ? (a.array() - mean).square().sum() / static_cast<S>(a.size() - 1) : S(0);
  return ((a.array() - mean) / (std::sqrt(var) + static_cast<S>(1e-8))).matrix();
}

// Clipped-surrogate PPO over `epochs` passes of shuffled minibatches. Requires
// value_targets to have run. Observations are normalized with the given
// normalizers; mirrored observations are mirrored before normalization. On a
// non-finite loss or gradient the learner is restored and NonFiniteLoss is
// thrown.
template <typename S>
UpdateStats ppo_update(Learner<S>& learner, const RolloutBuffer& buf, const RunningNormalizer& actor_norm,
                       const RunningNormalizer& critic_norm, const MirrorMaps* maps, const PpoConfig& cfg,
                       Rng& rng) {
  const Learner<S> snapshot = learner;
  const bool sym = maps && cfg.symmetry_weight != 0.0;
  const MatrixS<S> obs = actor_norm.normalize<S>(buf.actor_obs);
  const MatrixS<S> cobs = critic_norm.normalize<S>(buf.critic_obs);
  MatrixS<S> obs_m, cobs_m;
  if (sym) {
    obs_m = actor_norm.normalize<S>(maps->actor.apply(buf.actor_obs));
    cobs_m = critic_norm.normalize<S>(maps->critic.apply(buf.critic_obs));
  }
  const MatrixS<S> actions = buf.actions.cast<S>();
  const VectorS<S> old_lp = buf.log_probs.cast<S>();
  const VectorS<S> adv = buf.advantages.cast<S>();
  const MatrixS<S> returns = buf.returns.cast<S>();
  const MatrixS<S> old_mean = learner.policy.mean(obs);
  const VectorS<S> old_log_std = learner.policy.log_std;

  const int n = buf.size();
  const int mb_size = n / cfg.minibatches;
  if (mb_size < 1) throw std::invalid_argument("fewer transitions than minibatches");
  LossWeights w{1.0, cfg.value_coef, sym ? cfg.symmetry_weight : 0.0, cfg.entropy_coef};
  UpdateStats stats;
  Gradients<S> g;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<int> order = shuffled_indices(n, rng);
    for (int b = 0; b < cfg.minibatches; ++b) {
      const std::size_t begin = static_cast<std::size_t>(b * mb_size);
      const std::size_t end = begin + static_cast<std::size_t>(mb_size);
      Minibatch<S> mb;
      mb.inputs.obs = gather_columns<S>(obs, order, begin, end);
      mb.inputs.critic_obs = gather_columns<S>(cobs, order, begin, end);
      if (sym) {
        mb.inputs.obs_mirror = gather_columns<S>(obs_m, order, begin, end);
        mb.inputs.critic_obs_mirror = gather_columns<S>(cobs_m, order, begin, end);
      }
      mb.actions = gather_columns<S>(actions, order, begin, end);
      mb.returns = gather_columns<S>(returns, order, begin, end);
      mb.old_log_prob.resize(mb_size);
      VectorS<S> a(mb_size);
      for (std::size_t k = begin; k < end; ++k) {
        mb.old_log_prob(static_cast<Eigen::Index>(k - begin)) = old_lp(order[k]);
        a(static_cast<Eigen::Index>(k - begin)) = adv(order[k]);
      }
      mb.advantages = normalize_advantages<S>(a);

      g.zero(learner.policy, learner.value);
      const auto loss = ppo_loss<S>(learner.policy, learner.value, mb, sym ? &maps->action : nullptr, cfg.clip, w, &g);
      if (!std::isfinite(static_cast<double>(loss.total)) || !g.all_finite()) {
        learner = snapshot;
        throw NonFiniteLoss("non-finite loss or gradient in epoch " + std::to_string(epoch) + ", minibatch " +
                            std::to_string(b));
      }
      const double norm = std::sqrt(static_cast<double>(g.squared_norm()));
      if (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm)
        g.scale(static_cast<S>(cfg.max_grad_norm / (norm + 1e-6)));

      const MatrixS<S> old_mb_mean = gather_columns<S>(old_mean, order, begin, end);
      const double kl = gaussian_kl<S>(old_mb_mean, old_log_std, loss.mean, learner.policy.log_std);
      learner.lr = next_learning_rate(learner.lr, kl, cfg);

      learner.adam_actor.step(learner.policy.net.params(), g.actor, learner.lr);
      learner.adam_log_std.step(learner.policy.log_std, g.log_std, learner.lr);
      learner.adam_critic.step(learner.value.net.params(), g.critic, learner.lr);

      stats.surrogate += static_cast<double>(loss.surrogate);
      stats.value += static_cast<double>(loss.value);
      stats.symmetry += static_cast<double>(loss.symmetry_value + loss.symmetry_policy);
      stats.entropy += static_cast<double>(loss.entropy);
      stats.kl += kl;
      stats.clip_fraction += static_cast<double>(loss.clip_fraction);
      stats.grad_norm += norm;
      ++stats.minibatches;
    }
  }
  const double m = std::max(1, stats.minibatches);
  stats.surrogate /= m;
  stats.value /= m;
  stats.symmetry /= m;
  stats.entropy /= m;
  stats.kl /= m;
  stats.clip_fraction /= m;
  stats.grad_norm /= m;
  stats.lr = learner.lr;
  return stats;
}

// Largest relative difference between `analytic` and central differences of
// `loss` with respect to `params` (perturbed in place and restored). The
// denominator is max(|analytic|, |numeric|, floor * max(1, |loss|)).
double grad_check(VectorS<double>& params, const std::function<double()>& loss, const VectorS<double>& analytic,
                  double h = 1e-5, double floor = 1e-6);

}  // namespace zmlloco
