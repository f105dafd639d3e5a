#pragma once

#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "zmlloco/dynamics/simulator.hpp"
#include "zmlloco/env/observation.hpp"
#include "zmlloco/env/randomization.hpp"
#include "zmlloco/env/rewards.hpp"

namespace zmlloco {

enum class TerminationReason { none, fall, off_path, timeout, divergence };
std::string to_string(TerminationReason r);

// Heading error: angle from the robot's heading to world +x, wrapped.
double heading_error(const Quat& base_quat);
double yaw_command(const CommandConfig& cfg, double heading_error);
Command sample_command(const CommandConfig& cfg, const SimState& state, Rng& rng);

struct TerminationCheck {
  bool done = false;
  TerminationReason reason = TerminationReason::none;
};

TerminationCheck check_termination(const EnvConfig& cfg, const SimState& state,
                                   const HeightField& terrain, double nominal_height,
                                   double time);

struct EpisodeStats {
  bool success = false;
  double mxd = 0.0;          // x displacement from the reset origin, >= 0
  double length_s = 0.0;
  int steps = 0;
  TerminationReason reason = TerminationReason::none;
  RewardVector reward_sums = RewardVector::Zero();  // weighted
  std::vector<double> zmp_distance;                 // NaN without support
  double commanded_distance = 0.0;                  // mean vx times the horizon
  TerrainSpec terrain;
  int level = 0;
};

EpisodeStats episode_metrics(double x_start, double x_end, double success_distance,
                             const EpisodeStats& partial);

// One CSV row per control step, with a commented header describing the
// episode. Columns are fixed; see `episode_log_columns`.
class EpisodeLogger {
 public:
  explicit EpisodeLogger(std::ostream& os) : os_(&os) {}
  void begin(std::uint64_t seed, const TerrainSpec& spec, const RandomizationDraw& draw);
  void row(const std::vector<double>& values);

 private:
  std::ostream* os_;
};

std::vector<std::string> episode_log_columns();

struct StepInfo {
  bool done = false;
  TerminationReason reason = TerminationReason::none;
  bool timeout = false;
  RewardVector rewards = RewardVector::Zero();  // weighted
  RewardVector raw = RewardVector::Zero();
  BalanceSample balance;
  std::optional<PushEvent> push;
  Vec3 pre_push_lin_vel = Vec3::Zero();
  Vec3 pre_push_ang_vel = Vec3::Zero();
};

class LocomotionEnv {
 public:
  LocomotionEnv(std::shared_ptr<const RobotModel> nominal, EnvConfig cfg);
  LocomotionEnv(const LocomotionEnv&) = delete;
  LocomotionEnv& operator=(const LocomotionEnv&) = delete;

  // New terrain, randomization draw and initial state; `kind` overrides the
  // configured terrain mode.
  void reset(int level, std::uint64_t seed, std::optional<TerrainKind> kind = std::nullopt);
  StepInfo step(const VecX& action);

  const VecX& actor_obs() const { return actor_obs_; }
  const VecX& critic_obs() const { return critic_obs_; }
  const ObservationLayout& layout() const { return layout_; }
  const std::vector<int>& action_joints() const { return action_joints_; }
  int n_act() const { return static_cast<int>(action_joints_.size()); }

  const EnvConfig& config() const { return cfg_; }
  const RobotModel& nominal_model() const { return *nominal_; }
  const RobotModel& model() const { return *model_; }
  const SimState& state() const { return state_; }
  SimState& mutable_state() { return state_; }
  const HeightField& terrain() const { return terrain_; }
  const TerrainSpec& terrain_spec() const { return spec_; }
  const RandomizationDraw& draw() const { return draw_; }
  const Command& command() const { return command_; }
  void set_command(const Command& c) { command_ = c; }
  const ContactSet& contacts() const { return contacts_; }
  const EpisodeStats& episode() const { return episode_; }
  int level() const { return level_; }
  int step_count() const { return steps_; }
  double x_start() const { return x_start_; }

  // Completed-episode metrics (valid after a step reports done).
  EpisodeStats finished_episode() const;

  void set_logger(EpisodeLogger* logger) { logger_ = logger; }

  // Rebuilds the observations from the current state and history.
  void refresh_observations();

  // Actor frame for a state; exposed for the mirror commutation tests.
  static VecX actor_frame(const RobotModel& model, const SimState& state, const VecX& prev_action,
                          const ObservationLayout& layout);

 private:
  void update_command();
  void push_frame();
  VecX target_from_action(const VecX& a) const;

  std::shared_ptr<const RobotModel> nominal_;
  EnvConfig cfg_;
  std::unique_ptr<RobotModel> model_;
  std::unique_ptr<Simulator> sim_;
  ObservationLayout layout_;
  std::vector<int> action_joints_;
  double nominal_height_ = 0.0;

  Rng rng_;
  std::uint64_t seed_ = 0;
  int level_ = 0;
  TerrainSpec spec_;
  HeightField terrain_;
  RandomizationDraw draw_;
  SimState state_;
  ContactSet contacts_;
  Command command_;
  double next_push_ = 0.0;
  double next_resample_ = 0.0;
  int delay_steps_ = 0;

  VecX action_, prev_action_, prev_prev_action_;
  VecX target_, prev_target_;
  VecX torques_;
  std::deque<VecX> frames_;
  std::array<double, 2> air_time_{0.0, 0.0};
  std::array<bool, 2> was_contact_{true, true};

  VecX actor_obs_, critic_obs_;
  int steps_ = 0;
  double x_start_ = 0.0;
  double commanded_vx_sum_ = 0.0;
  EpisodeStats episode_;
  EpisodeLogger* logger_ = nullptr;
};

}  // namespace zmlloco
