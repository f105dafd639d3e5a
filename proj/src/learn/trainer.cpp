#include "zmlloco/learn/trainer.hpp"

#include <chrono>
#include <ostream>

namespace zmlloco {

Json to_json(const TrainConfig& c) {
  return Json{{"ppo", to_json(c.ppo)},
              {"network",
               {{"actor_hidden", c.network.actor_hidden},
                {"critic_hidden", c.network.critic_hidden},
                {"init_std", c.network.init_std},
                {"output_gain", c.network.output_gain}}},
              {"num_envs", c.num_envs},
              {"horizon", c.horizon},
              {"iterations", c.iterations},
              {"checkpoint_every", c.checkpoint_every},
              {"reward_scale", c.reward_scale},
              {"vectorized", c.vectorized},
              {"curriculum",
               {{"promote", c.curriculum.promote},
                {"demote", c.curriculum.demote},
                {"min_commanded", c.curriculum.min_commanded}}},
              {"workers", c.workers}};
}

TrainConfig train_config_from_json(const Json& j, const std::string& path) {
  TrainConfig c;
  JsonReader r(j, path);
  c.ppo = ppo_config_from_json(r.child("ppo"), r.path("ppo"));
  {
    const Json nj = r.child("network");
    JsonReader n(nj, r.path("network"));
    n.get("actor_hidden", c.network.actor_hidden);
    n.get("critic_hidden", c.network.critic_hidden);
    n.get("init_std", c.network.init_std);
    n.get("output_gain", c.network.output_gain);
    n.finish();
  }
  r.get("num_envs", c.num_envs);
  r.get("horizon", c.horizon);
  r.get("iterations", c.iterations);
  r.get("checkpoint_every", c.checkpoint_every);
  r.get("reward_scale", c.reward_scale);
  r.get("vectorized", c.vectorized);
  {
    const Json cj = r.child("curriculum");
    JsonReader n(cj, r.path("curriculum"));
    n.get("promote", c.curriculum.promote);
    n.get("demote", c.curriculum.demote);
    n.get("min_commanded", c.curriculum.min_commanded);
    n.finish();
  }
  r.get("workers", c.workers);
  r.finish();
  if (c.num_envs < 1 || c.horizon < 1 || c.iterations < 0 || c.checkpoint_every < 0 || c.workers < 0)
    throw ConfigError(path + ": num_envs and horizon must be positive; iterations, checkpoint_every, workers >= 0");
  if (c.num_envs * c.horizon < c.ppo.minibatches)
    throw ConfigError(path + ": fewer transitions per iteration than minibatches");
  if (!(c.reward_scale > 0.0)) throw ConfigError(path + ".reward_scale must be positive");
  if (!(c.network.init_std > 0.0)) throw ConfigError(path + ".network.init_std must be positive");
  for (int h : c.network.actor_hidden)
    if (h < 1) throw ConfigError(path + ".network.actor_hidden entries must be positive");
  for (int h : c.network.critic_hidden)
    if (h < 1) throw ConfigError(path + ".network.critic_hidden entries must be positive");
  if (!(c.curriculum.demote <= c.curriculum.promote))
    throw ConfigError(path + ".curriculum: demote must not exceed promote");
  return c;
}

std::vector<std::string> metrics_columns() {
  std::vector<std::string> c{"iteration", "episodes", "mean_episode_s", "success_rate", "mean_level"};
  for (const auto& n : kRewardNames) c.push_back("rew_" + std::string(n));
  for (const auto& n : kRewardNames) c.push_back("ep_" + std::string(n));
  for (const char* n : {"surrogate_loss", "value_loss", "symmetry_loss", "entropy", "kl", "clip_fraction", "lr",
                        "grad_norm", "action_std"})
    c.push_back(n);
  return c;
}

void write_metrics_header(std::ostream& os) {
  const auto cols = metrics_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
}

void write_metrics_row(std::ostream& os, const IterationMetrics& m) {
  const auto old = os.precision(10);
  os << m.iteration << ',' << m.episodes << ',' << m.mean_episode_s << ','
     << m.success_rate << ',' << m.mean_level;
  for (int k = 0; k < kNumRewardTerms; ++k) os << ',' << m.step_mean(k);
  for (int k = 0; k < kNumRewardTerms; ++k) os << ',' << m.episode_mean(k);
  const UpdateStats& u = m.update;
  os << ',' << u.surrogate << ',' << u.value << ',' << u.symmetry << ',' << u.entropy << ',' << u.kl << ','
     << u.clip_fraction << ',' << u.lr << ',' << u.grad_norm << ',' << m.action_std << '\n';
  os.precision(old);
  os.flush();
  if (!os) throw std::runtime_error("failed to write metrics row");
}

Trainer::Trainer(std::shared_ptr<const RobotModel> model, const EnvConfig& env, const TrainConfig& train,
                 std::uint64_t seed)
    : model_(std::move(model)), env_cfg_(env), train_(train), rng_(Rng::derive(seed, 0xFFFF'FFFF'0000ull)) {
  const int workers = worker_count(train_.workers > 0 ? train_.workers : train_.num_envs);
  envs_ = std::make_unique<VecEnv>(model_, env_cfg_, train_.num_envs, seed, workers);
  envs_->curriculum() = train_.curriculum;
  envs_->reset_all();

  const ObservationLayout& layout = envs_->layout();
  const int n_act = envs_->n_act();
  learner_.policy = PolicyNet<float>(layout.actor_dim(), train_.network.actor_hidden, n_act, train_.network.init_std);
  learner_.value = ValueNet<float>(layout.critic_dim(), train_.network.critic_hidden, heads());
  learner_.policy.net.init(rng_, train_.network.output_gain);
  learner_.value.net.init(rng_, 1.0);
  learner_.lr = train_.ppo.learning_rate;

  const auto& joints = envs_->env(0).action_joints();
  maps_.actor = actor_obs_mirror(*model_, layout, joints);
  maps_.critic = critic_obs_mirror(*model_, layout, joints);
  maps_.action = action_mirror(*model_, joints);

  actor_norm_ = RunningNormalizer(layout.actor_dim());
  critic_norm_ = RunningNormalizer(layout.critic_dim());
  actor_norm_.update(envs_->actor_obs());
  critic_norm_.update(envs_->critic_obs());

  buffer_ = RolloutBuffer(train_.horizon, train_.num_envs, heads(), layout.actor_dim(), layout.critic_dim(), n_act);
}

IterationMetrics Trainer::iterate() {
  const auto t0 = std::chrono::steady_clock::now();
  const int T = train_.horizon, N = train_.num_envs, K = heads();
  const double gamma = train_.ppo.gamma;
  const int max_steps = env_cfg_.max_episode_steps();
  IterationMetrics m;
  m.iteration = iteration_ + 1;

  RewardVector step_sum = RewardVector::Zero();
  RewardVector ep_sum = RewardVector::Zero();
  double ep_len = 0.0;
  int successes = 0;
  VecEnv::Step step;
  for (int t = 0; t < T; ++t) {
    const MatX a_obs = envs_->actor_obs();
    const MatX c_obs = envs_->critic_obs();
    buffer_.actor_obs.middleCols(t * N, N) = a_obs;
    buffer_.critic_obs.middleCols(t * N, N) = c_obs;

    const MatrixS<float> mean = learner_.policy.mean(actor_norm_.normalize<float>(a_obs));
    const VectorS<float> std = learner_.policy.log_std.array().exp().matrix();
    MatrixS<float> actions(mean.rows(), N);
    for (int i = 0; i < N; ++i)
      for (Eigen::Index j = 0; j < mean.rows(); ++j)
        actions(j, i) = mean(j, i) + std(j) * static_cast<float>(rng_.normal());
    buffer_.log_probs.segment(t * N, N) = learner_.policy.log_prob(mean, actions).cast<double>();
    buffer_.actions.middleCols(t * N, N) = actions.cast<double>();
    const MatX values = learner_.value.values(critic_norm_.normalize<float>(c_obs)).cast<double>();
    buffer_.values.middleCols(t * N, N) = values;

    envs_->step(buffer_.actions.middleCols(t * N, N), step);
    step_sum += step.rewards.rowwise().sum();
    MatX r = train_.reward_scale * step.rewards;
    if (K == 1) r = MatX(r.colwise().sum());
    for (int i = 0; i < N; ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      if (step.timeouts[k]) r.col(i) += gamma * values.col(i);
      buffer_.dones[static_cast<std::size_t>(t * N + i)] = step.dones[k];
    }
    buffer_.rewards.middleCols(t * N, N) = r;

    for (const EpisodeStats& ep : step.finished) {
      ep_sum += ep.reward_sums / static_cast<double>(max_steps);
      ep_len += ep.length_s;
      successes += ep.success ? 1 : 0;
      const std::size_t lv = static_cast<std::size_t>(ep.level);
      ++level_episodes_[lv];
      level_successes_[lv] += ep.success ? 1 : 0;
      ++m.episodes;
    }
  }
  buffer_.last_values = learner_.value.values(critic_norm_.normalize<float>(envs_->critic_obs())).cast<double>();
  value_targets(buffer_, gamma, train_.ppo.lambda);
  m.update = ppo_update<float>(learner_, buffer_, actor_norm_, critic_norm_, &maps_, train_.ppo, rng_);
  actor_norm_.update(buffer_.actor_obs);
  critic_norm_.update(buffer_.critic_obs);

  ++iteration_;
  m.step_mean = step_sum / static_cast<double>(T * N);
  if (m.episodes > 0) {
    m.episode_mean = ep_sum / m.episodes;
    m.mean_episode_s = ep_len / m.episodes;
    m.success_rate = static_cast<double>(successes) / m.episodes;
  }
  m.mean_level = envs_->mean_level();
  m.action_std = static_cast<double>(learner_.policy.log_std.array().exp().mean());
  elapsed_s_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m.elapsed_s = elapsed_s_;
  return m;
}

Checkpoint Trainer::checkpoint(const Json& run_config) const {
  Checkpoint c;
  c.model_hash = model_->hash();
  c.header = Json{{"iteration", iteration_},
                  {"lr", learner_.lr},
                  {"elapsed_s", elapsed_s_},
                  {"actor_sizes", learner_.policy.net.sizes()},
                  {"critic_sizes", learner_.value.net.sizes()},
                  {"adam_steps",
                   {learner_.adam_actor.t, learner_.adam_log_std.t, learner_.adam_critic.t}},
                  {"normalizer_counts", {actor_norm_.count(), critic_norm_.count()}},
                  {"normalizer_clip", {actor_norm_.clip(), critic_norm_.clip()}},
                  {"levels", envs_->levels()},
                  {"level_episodes", level_episodes_},
                  {"level_successes", level_successes_},
                  {"env_rng", envs_->rng_states()},
                  {"trainer_rng", rng_.state()},
                  {"run_config", run_config}};
  c.put_cast("actor.params", learner_.policy.net.params());
  c.put_cast("actor.log_std", learner_.policy.log_std);
  c.put_cast("critic.params", learner_.value.net.params());
  c.put_cast("adam.actor.m", learner_.adam_actor.m);
  c.put_cast("adam.actor.v", learner_.adam_actor.v);
  c.put_cast("adam.log_std.m", learner_.adam_log_std.m);
  c.put_cast("adam.log_std.v", learner_.adam_log_std.v);
  c.put_cast("adam.critic.m", learner_.adam_critic.m);
  c.put_cast("adam.critic.v", learner_.adam_critic.v);
  c.put("normalizer.actor.mean", actor_norm_.mean());
  c.put("normalizer.actor.var", actor_norm_.var());
  c.put("normalizer.critic.mean", critic_norm_.mean());
  c.put("normalizer.critic.var", critic_norm_.var());
  return c;
}

namespace {

template <typename S>
void assign(VectorS<S>& dst, const VecX& src, const std::string& name) {
  if (dst.size() != 0 && dst.size() != src.size() && src.size() != 0)
    throw CheckpointError("array " + name + " has size " + std::to_string(src.size()) + ", expected " +
                          std::to_string(dst.size()));
  dst = src.cast<S>();
}

}  // namespace

void Trainer::restore(const Checkpoint& c) {
  if (c.model_hash != model_->hash()) throw CheckpointError("checkpoint was written for a different robot model");
  const Json& h = c.header;
  if (h.at("actor_sizes").get<std::vector<int>>() != learner_.policy.net.sizes() ||
      h.at("critic_sizes").get<std::vector<int>>() != learner_.value.net.sizes())
    throw CheckpointError("checkpoint network shapes do not match the configuration");
  assign(learner_.policy.net.params(), c.vector("actor.params"), "actor.params");
  assign(learner_.policy.log_std, c.vector("actor.log_std"), "actor.log_std");
  assign(learner_.value.net.params(), c.vector("critic.params"), "critic.params");
  learner_.adam_actor.m = c.vector("adam.actor.m").cast<float>();
  learner_.adam_actor.v = c.vector("adam.actor.v").cast<float>();
  learner_.adam_log_std.m = c.vector("adam.log_std.m").cast<float>();
  learner_.adam_log_std.v = c.vector("adam.log_std.v").cast<float>();
  learner_.adam_critic.m = c.vector("adam.critic.m").cast<float>();
  learner_.adam_critic.v = c.vector("adam.critic.v").cast<float>();
  const auto steps = h.at("adam_steps").get<std::vector<long long>>();
  learner_.adam_actor.t = steps.at(0);
  learner_.adam_log_std.t = steps.at(1);
  learner_.adam_critic.t = steps.at(2);
  learner_.lr = h.at("lr").get<double>();
  const auto counts = h.at("normalizer_counts").get<std::vector<double>>();
  actor_norm_.set_state(c.vector("normalizer.actor.mean"), c.vector("normalizer.actor.var"), counts.at(0));
  critic_norm_.set_state(c.vector("normalizer.critic.mean"), c.vector("normalizer.critic.var"), counts.at(1));
  envs_->set_levels(h.at("levels").get<std::vector<int>>());
  envs_->set_rng_states(h.at("env_rng").get<std::vector<std::string>>());
  rng_.set_state(h.at("trainer_rng").get<std::string>());
  level_episodes_ = h.at("level_episodes").get<std::array<long long, kNumLevels>>();
  level_successes_ = h.at("level_successes").get<std::array<long long, kNumLevels>>();
  iteration_ = h.at("iteration").get<int>();
  elapsed_s_ = h.at("elapsed_s").get<double>();
  envs_->reset_all();
}

VecX LoadedPolicy::act(const VecX& actor_obs) const {
  return policy.mean(actor_norm.normalize<float>(actor_obs)).cast<double>().col(0);
}

LoadedPolicy load_policy(const Checkpoint& c) {
  LoadedPolicy p;
  const Json& h = c.header;
  const auto sizes = h.at("actor_sizes").get<std::vector<int>>();
  p.policy.net = Mlp<float>(sizes);
  const VecX params = c.vector("actor.params");
  if (params.size() != p.policy.net.num_params()) throw CheckpointError("actor.params does not match actor_sizes");
  p.policy.net.params() = params.cast<float>();
  p.policy.log_std = c.vector("actor.log_std").cast<float>();
  const auto clip = h.at("normalizer_clip").get<std::vector<double>>();
  p.actor_norm = RunningNormalizer(sizes.front(), clip.at(0));
  p.actor_norm.set_state(c.vector("normalizer.actor.mean"), c.vector("normalizer.actor.var"),
                         h.at("normalizer_counts").get<std::vector<double>>().at(0));
  if (p.actor_norm.mean().size() != sizes.front()) throw CheckpointError("actor normalizer size mismatch");
  p.run_config = h.at("run_config");
  p.model_hash = c.model_hash;
  p.iteration = h.at("iteration").get<int>();
  return p;
}

}  // namespace zmlloco
