#pragma once

#include <array>
#include <limits>
#include <iosfwd>
#include <memory>

#include "zmlloco/env/vec_env.hpp"
#include "zmlloco/learn/checkpoint.hpp"
#include "zmlloco/learn/ppo.hpp"

namespace zmlloco {

struct NetworkConfig {
  std::vector<int> actor_hidden{512, 256, 128};
  std::vector<int> critic_hidden{512, 256, 128};
  double init_std = 0.5;
  double output_gain = 0.01;  // scale of the initial output-layer weights
};

struct TrainConfig {
  PpoConfig ppo;
  NetworkConfig network;
  int num_envs = 64;
  int horizon = 24;
  int iterations = 300;
  int checkpoint_every = 50;
  // Multiplies the weighted rewards before storage.
  double reward_scale = 0.02;
  // false: the reward vector is summed before storage and the critic has a
  // single head.
  bool vectorized = true;
  CurriculumRule curriculum;
  int workers = 0;  // 0: one per hardware thread
};

Json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j, const std::string& path = "train");

struct IterationMetrics {
  int iteration = 0;
  double elapsed_s = 0.0;  // wall clock, not written to the metrics CSV
  RewardVector step_mean = RewardVector::Zero();  // mean weighted reward per control step
  // Completed-episode reward sums divided by the maximum episode length in
  // steps, averaged over episodes completed this iteration (NaN if none).
  RewardVector episode_mean = RewardVector::Constant(std::numeric_limits<double>::quiet_NaN());
  int episodes = 0;
  double mean_episode_s = std::numeric_limits<double>::quiet_NaN();
  double success_rate = std::numeric_limits<double>::quiet_NaN();
  double mean_level = 0.0;
  double action_std = 0.0;
  UpdateStats update;
};

std::vector<std::string> metrics_columns();
void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const IterationMetrics& m);

// Rollout and PPO update loop over a VecEnv with float networks.
class Trainer {
 public:
  Trainer(std::shared_ptr<const RobotModel> model, const EnvConfig& env, const TrainConfig& train,
          std::uint64_t seed);

  IterationMetrics iterate();

  int iteration() const { return iteration_; }
  int heads() const { return train_.vectorized ? kNumRewardTerms : 1; }
  const TrainConfig& config() const { return train_; }
  const EnvConfig& env_config() const { return env_cfg_; }
  VecEnv& envs() { return *envs_; }
  Learner<float>& learner() { return learner_; }
  const Learner<float>& learner() const { return learner_; }
  const RunningNormalizer& actor_normalizer() const { return actor_norm_; }
  const RunningNormalizer& critic_normalizer() const { return critic_norm_; }
  const MirrorMaps& mirror_maps() const { return maps_; }
  const RolloutBuffer& buffer() const { return buffer_; }

  // Episodes and successes per terrain level since the start of training.
  const std::array<long long, kNumLevels>& level_episodes() const { return level_episodes_; }
  const std::array<long long, kNumLevels>& level_successes() const { return level_successes_; }

  // Networks, optimizer state, normalizers, curriculum levels and RNG states.
  // Environments restart fresh episodes after a restore.
  Checkpoint checkpoint(const Json& run_config) const;
  void restore(const Checkpoint& ckpt);

 private:
  std::shared_ptr<const RobotModel> model_;
  EnvConfig env_cfg_;
  TrainConfig train_;
  std::unique_ptr<VecEnv> envs_;
  Learner<float> learner_;
  RunningNormalizer actor_norm_, critic_norm_;
  MirrorMaps maps_;
  RolloutBuffer buffer_;
  Rng rng_;
  int iteration_ = 0;
  double elapsed_s_ = 0.0;
  std::array<long long, kNumLevels> level_episodes_{};
  std::array<long long, kNumLevels> level_successes_{};
};

// Policy-side parts of a checkpoint needed to act.
struct LoadedPolicy {
  PolicyNet<float> policy;
  RunningNormalizer actor_norm;
  Json run_config;
  std::uint64_t model_hash = 0;
  int iteration = 0;

  VecX act(const VecX& actor_obs) const;  // deterministic mean action
};

LoadedPolicy load_policy(const Checkpoint& ckpt);

}  // namespace zmlloco
