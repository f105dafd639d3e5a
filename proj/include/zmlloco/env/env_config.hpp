#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "zmlloco/json_util.hpp"
#include "zmlloco/terrain/terrain.hpp"

namespace zmlloco {

struct CommandConfig {
  Vec2 lin_vel_x{-0.5, 1.0};
  Vec2 lin_vel_y{-0.2, 0.2};
  double yaw_gain = 0.5;
  double yaw_limit = 1.0;
  double resample_s = 10.0;
  // Fixed linear command (evaluation); the yaw rule still applies.
  std::optional<double> fixed_vx;
  std::optional<double> fixed_vy;
};

struct RandomizationConfig {
  bool push = true;
  double push_interval_mean = 6.0;  // s
  double push_lin_vel = 0.6;        // m/s, per horizontal axis
  double push_ang_vel = 0.8;        // rad/s, per axis
  bool delay = true;
  Vec2 delay_ms{4.0, 20.0};
  bool gains = true;
  Vec2 gain_scale{0.8, 1.2};
  bool friction = true;
  Vec2 friction_range{0.1, 2.0};
  bool link_mass = true;
  Vec2 link_mass_scale{0.8, 1.2};
  bool load = true;
  Vec2 load_mass{-1.0, 3.0};
  bool com = true;
  double com_offset = 0.1;
  bool rfi = true;
  double rfi_scale = 0.1;
  Vec2 rfi_episode{0.5, 1.5};
  double action_noise = 0.03;

  // Everything off except what is explicitly re-enabled.
  static RandomizationConfig none();
};

struct TerrainConfig {
  std::string mode = "mixed";  // mixed or a TerrainKind name
  bool curriculum = true;
  int initial_level = 0;
  int max_initial_level = 4;  // initial levels spread over [initial, max]
  std::optional<double> width;
  std::optional<double> gradient;
  std::optional<double> step_height;
  TerrainOptions geometry;
};

enum RewardTerm : int {
  kTrackingLinVel,
  kTrackingAngVel,
  kLowSpeed,
  kZmp,
  kFeetAirTime,
  kFeetContact,
  kFeetSeparation,
  kFeetSlippage,
  kFeetHeight,
  kBaseHeight,
  kFeetEdgeDistance,
  kAngularMomentum,
  kOrientation,
  kBaseAcceleration,
  kActionSmoothness,
  kActionCloseness,
  kTorque,
  kDofVel,
  kDofPosLimit,
  kCollision,
  kNumRewardTerms
};

inline constexpr std::array<const char*, kNumRewardTerms> kRewardNames = {
    "tracking_lin_vel", "tracking_ang_vel", "low_speed",
    "zmp", "feet_air_time", "feet_contact", "feet_separation", "feet_slippage",
    "feet_height", "base_height", "feet_edge_distance",
    "angular_momentum", "orientation", "base_acceleration", "action_smoothness",
    "action_closeness", "torque", "dof_vel", "dof_pos_limit", "collision"};

enum class RewardGroup { task, gait, regularization };
RewardGroup reward_group(int term);

struct RewardConfig {
  std::array<double, kNumRewardTerms> weights = {
      1.0, 0.5, -0.5,
      0.5, 0.5, 0.3, -5.0, -0.1, -0.2, -10.0, -0.5,
      0.1, -1.0, -2e-4, -2e-3, -0.05, -2e-6, -2e-4, -1.0, -1.0};
  double tracking_sigma = 0.25;
  double air_time_target = 0.5;
  double feet_height_target = 0.08;
  Vec2 feet_separation_band{0.15, 0.45};
  double edge_margin = 0.02;
  std::optional<double> base_height_target;  // defaults to the model's
  double soft_limit = 0.9;                     // fraction of the joint range
  double moving_threshold = 0.1;               // m/s, command norm
  double contact_threshold = 1.0;              // N
  bool zmp_zero_in_flight = true;
};

struct EnvConfig {
  double sim_dt = 1e-3;
  int decimation = 20;
  double episode_s = 20.0;
  double action_scale = 0.25;
  double clip_actions = 10.0;
  int history = 4;
  bool freeze_upper = false;
  double fall_height_ratio = 0.5;
  double fall_gravity_xy = 0.8;
  double success_distance = 4.0;
  CommandConfig command;
  RandomizationConfig randomization;
  TerrainConfig terrain;
  RewardConfig rewards;

  double control_dt() const { return sim_dt * decimation; }
  int max_episode_steps() const;
};

Json to_json(const EnvConfig& c);
EnvConfig env_config_from_json(const Json& j, const std::string& path = "env");

}  // namespace zmlloco
