#include "zmlloco/learn/ppo.hpp"

#include <algorithm>

namespace zmlloco {

Json to_json(const PpoConfig& c) {
  return Json{{"gamma", c.gamma},
              {"lambda", c.lambda},
              {"clip", c.clip},
              {"epochs", c.epochs},
              {"minibatches", c.minibatches},
              {"learning_rate", c.learning_rate},
              {"adaptive_lr", c.adaptive_lr},
              {"desired_kl", c.desired_kl},
              {"lr_min", c.lr_min},
              {"lr_max", c.lr_max},
              {"value_coef", c.value_coef},
              {"symmetry_weight", c.symmetry_weight},
              {"entropy_coef", c.entropy_coef},
              {"max_grad_norm", c.max_grad_norm}};
}

PpoConfig ppo_config_from_json(const Json& j, const std::string& path) {
  PpoConfig c;
  JsonReader r(j, path);
  r.get("gamma", c.gamma);
  r.get("lambda", c.lambda);
  r.get("clip", c.clip);
  r.get("epochs", c.epochs);
  r.get("minibatches", c.minibatches);
  r.get("learning_rate", c.learning_rate);
  r.get("adaptive_lr", c.adaptive_lr);
  r.get("desired_kl", c.desired_kl);
  r.get("lr_min", c.lr_min);
  r.get("lr_max", c.lr_max);
  r.get("value_coef", c.value_coef);
  r.get("symmetry_weight", c.symmetry_weight);
  r.get("entropy_coef", c.entropy_coef);
  r.get("max_grad_norm", c.max_grad_norm);
  r.finish();
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) throw ConfigError(path + ".gamma must lie in (0, 1]");
  if (!(c.lambda > 0.0 && c.lambda <= 1.0)) throw ConfigError(path + ".lambda must lie in (0, 1]");
  if (!(c.clip > 0.0)) throw ConfigError(path + ".clip must be positive");
  if (c.epochs < 1 || c.minibatches < 1) throw ConfigError(path + ": epochs and minibatches must be positive");
  if (!(c.learning_rate > 0.0) || !(c.lr_min > 0.0) || c.lr_min > c.lr_max)
    throw ConfigError(path + ": learning rates must be positive with lr_min <= lr_max");
  if (!(c.desired_kl > 0.0)) throw ConfigError(path + ".desired_kl must be positive");
  if (c.value_coef < 0.0 || c.symmetry_weight < 0.0 || c.entropy_coef < 0.0 || c.max_grad_norm < 0.0)
    throw ConfigError(path + ": loss weights and max_grad_norm must be non-negative");
  return c;
}

RolloutBuffer::RolloutBuffer(int horizon_, int num_envs_, int heads_, int actor_dim, int critic_dim, int n_act)
    : horizon(horizon_), num_envs(num_envs_), heads(heads_) {
  const int n = horizon * num_envs;
  actor_obs.resize(actor_dim, n);
  critic_obs.resize(critic_dim, n);
  actions.resize(n_act, n);
  log_probs.resize(n);
  rewards.resize(heads, n);
  values.resize(heads, n);
  dones.assign(static_cast<std::size_t>(n), 0);
  last_values.resize(heads, num_envs);
}

void value_targets(RolloutBuffer& buf, double gamma, double lambda) {
  const int T = buf.horizon, N = buf.num_envs, K = buf.heads;
  buf.returns.resize(K, buf.size());
  buf.advantages.resize(buf.size());
  const Eigen::RowVectorXd r_sum = buf.rewards.colwise().sum();
  const Eigen::RowVectorXd v_sum = buf.values.colwise().sum();
  const Eigen::RowVectorXd last_sum = buf.last_values.colwise().sum();
  for (int e = 0; e < N; ++e) {
    VecX head_gae = VecX::Zero(K);
    double gae = 0.0;
    for (int t = T - 1; t >= 0; --t) {
      const int i = buf.index(t, e);
      const double live = buf.dones[static_cast<std::size_t>(i)] ? 0.0 : 1.0;
      const bool last = t == T - 1;
      for (int k = 0; k < K; ++k) {
        const double next = last ? buf.last_values(k, e) : buf.values(k, buf.index(t + 1, e));
        const double delta = buf.rewards(k, i) + gamma * next * live - buf.values(k, i);
        head_gae(k) = delta + gamma * lambda * live * head_gae(k);
        buf.returns(k, i) = head_gae(k) + buf.values(k, i);
      }
      const double next = last ? last_sum(e) : v_sum(buf.index(t + 1, e));
      const double delta = r_sum(i) + gamma * next * live - v_sum(i);
      gae = delta + gamma * lambda * live * gae;
      buf.advantages(i) = gae;
    }
  }
}

double grad_check(VectorS<double>& params, const std::function<double()>& loss, const VectorS<double>& analytic,
                  double h, double floor) {
  const double scaled_floor = floor * std::max(1.0, std::abs(loss()));
  double worst = 0.0;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double p = params(i);
    params(i) = p + h;
    const double up = loss();
    params(i) = p - h;
    const double down = loss();
    params(i) = p;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic(i)), std::abs(numeric), scaled_floor});
    worst = std::max(worst, std::abs(analytic(i) - numeric) / denom);
  }
  return worst;
}

}  // namespace zmlloco
