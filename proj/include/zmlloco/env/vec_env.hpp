#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "zmlloco/env/env.hpp"

namespace zmlloco {

// Worker count from ZMLLOCO_THREADS, capped by the hardware and `limit`.
int worker_count(int limit);

// Runs fn(i) for i in [0, n) on up to `workers` threads in contiguous chunks.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

struct CurriculumRule {
  double promote = 0.8;      // fraction of the commanded distance
  double demote = 0.4;
  double min_commanded = 0.5;  // m; shorter commands leave the level as is
};

int next_level(int level, const EpisodeStats& ep, const CurriculumRule& rule);

// Batch of environments with automatic reset and terrain curriculum. Each
// environment draws its episode seeds from its own stream derived from
// (seed, index), so results depend on the seed only.
class VecEnv {
 public:
  VecEnv(std::shared_ptr<const RobotModel> nominal, const EnvConfig& cfg, int num_envs,
         std::uint64_t seed, int workers = 1);

  struct Step {
    MatX rewards;                    // K x N, weighted
    std::vector<std::uint8_t> dones;
    std::vector<std::uint8_t> timeouts;
    std::vector<EpisodeStats> finished;
  };

  void reset_all();
  // actions: n_act x N. Observations afterwards already belong to the reset
  // episode for environments that finished.
  void step(const MatX& actions, Step& out);

  int size() const { return static_cast<int>(envs_.size()); }
  LocomotionEnv& env(int i) { return *envs_[static_cast<std::size_t>(i)]; }
  const LocomotionEnv& env(int i) const { return *envs_[static_cast<std::size_t>(i)]; }
  const ObservationLayout& layout() const { return envs_.front()->layout(); }
  int n_act() const { return envs_.front()->n_act(); }

  MatX actor_obs() const;   // dim x N
  MatX critic_obs() const;

  const std::vector<int>& levels() const { return levels_; }
  void set_levels(const std::vector<int>& levels) { levels_ = levels; }
  double mean_level() const;
  CurriculumRule& curriculum() { return rule_; }

  std::vector<std::string> rng_states() const;
  void set_rng_states(const std::vector<std::string>& states);

 private:
  void reset_env(int i);

  EnvConfig cfg_;
  std::vector<std::unique_ptr<LocomotionEnv>> envs_;
  std::vector<Rng> streams_;
  std::vector<int> levels_;
  CurriculumRule rule_;
  int workers_;
};

}  // namespace zmlloco
