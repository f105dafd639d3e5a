#include "zmlloco/env/vec_env.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <string>
#include <thread>

namespace zmlloco {

int worker_count(int limit) {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("ZMLLOCO_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, std::min(n, limit));
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (int i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

int next_level(int level, const EpisodeStats& ep, const CurriculumRule& rule) {
  if (ep.commanded_distance < rule.min_commanded) return level;
  if (ep.mxd >= rule.promote * ep.commanded_distance) return std::min(level + 1, kNumLevels - 1);
  if (ep.mxd < rule.demote * ep.commanded_distance) return std::max(level - 1, 0);
  return level;
}

VecEnv::VecEnv(std::shared_ptr<const RobotModel> nominal, const EnvConfig& cfg, int num_envs,
               std::uint64_t seed, int workers)
    : cfg_(cfg), workers_(workers) {
  if (num_envs < 1) throw std::invalid_argument("need at least one environment");
  const TerrainConfig& tc = cfg.terrain;
  const int span = tc.max_initial_level - tc.initial_level + 1;
  for (int i = 0; i < num_envs; ++i) {
    envs_.push_back(std::make_unique<LocomotionEnv>(nominal, cfg));
    streams_.push_back(Rng::derive(seed, static_cast<std::uint64_t>(i)));
    levels_.push_back(tc.initial_level + i % span);
  }
}

void VecEnv::reset_env(int i) {
  const std::size_t k = static_cast<std::size_t>(i);
  envs_[k]->reset(levels_[k], streams_[k].next_u64());
}

void VecEnv::reset_all() {
  parallel_for(size(), workers_, [&](int i) { reset_env(i); });
}

void VecEnv::step(const MatX& actions, Step& out) {
  const int n = size();
  out.rewards.setZero(kNumRewardTerms, n);
  out.dones.assign(static_cast<std::size_t>(n), 0);
  out.timeouts.assign(static_cast<std::size_t>(n), 0);
  std::vector<std::optional<EpisodeStats>> finished(static_cast<std::size_t>(n));
  parallel_for(n, workers_, [&](int i) {
    const std::size_t k = static_cast<std::size_t>(i);
    const StepInfo info = envs_[k]->step(actions.col(i));
    out.rewards.col(i) = info.rewards;
    out.dones[k] = info.done ? 1 : 0;
    out.timeouts[k] = info.timeout ? 1 : 0;
    if (info.done) {
      finished[k] = envs_[k]->finished_episode();
      if (cfg_.terrain.curriculum) levels_[k] = next_level(levels_[k], *finished[k], rule_);
      reset_env(i);
    }
  });
  out.finished.clear();
  for (auto& f : finished)
    if (f) out.finished.push_back(std::move(*f));
}

MatX VecEnv::actor_obs() const {
  MatX m(layout().actor_dim(), size());
  for (int i = 0; i < size(); ++i) m.col(i) = env(i).actor_obs();
  return m;
}

MatX VecEnv::critic_obs() const {
  MatX m(layout().critic_dim(), size());
  for (int i = 0; i < size(); ++i) m.col(i) = env(i).critic_obs();
  return m;
}

double VecEnv::mean_level() const {
  return std::accumulate(levels_.begin(), levels_.end(), 0.0) / static_cast<double>(levels_.size());
}

std::vector<std::string> VecEnv::rng_states() const {
  std::vector<std::string> s;
  for (const Rng& r : streams_) s.push_back(r.state());
  return s;
}

void VecEnv::set_rng_states(const std::vector<std::string>& states) {
  if (states.size() != streams_.size()) throw std::invalid_argument("rng state count mismatch");
  for (std::size_t i = 0; i < states.size(); ++i) streams_[i].set_state(states[i]);
}

}  // namespace zmlloco
