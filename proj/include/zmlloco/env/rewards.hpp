#pragma once

#include <array>

#include "zmlloco/balance/zmp.hpp"
#include "zmlloco/env/env_config.hpp"

namespace zmlloco {

struct Command {
  double vx = 0.0;
  double vy = 0.0;
  double yaw_rate = 0.0;
};

using RewardVector = Eigen::Matrix<double, kNumRewardTerms, 1>;

// Everything one control step exposes to the reward terms.
struct RewardContext {
  const RobotModel* model = nullptr;
  const SimState* state = nullptr;
  const KinematicsResult* kin = nullptr;
  const ContactSet* contacts = nullptr;   // last physics sub-step
  const MomentumState* momentum = nullptr;  // with rates
  const HeightField* terrain = nullptr;
  const TerrainSpec* spec = nullptr;
  Command command;
  Vec3 prev_base_lin_vel = Vec3::Zero();
  double control_dt = 0.02;
  VecX action, prev_action, prev_prev_action;  // policy actions
  VecX target_q;                               // PD target of `action`
  VecX torques;                                // last applied torques
  std::array<bool, 2> first_contact{false, false};
  std::array<double, 2> air_time{0.0, 0.0};  // swing time ending at touchdown
  double nominal_height = 0.0;
};

struct RewardOutput {
  RewardVector raw = RewardVector::Zero();
  RewardVector weighted = RewardVector::Zero();
  BalanceSample balance;
};

// Velocities expressed in the yaw-aligned heading frame.
Vec3 to_heading_frame(const Quat& base_quat, const Vec3& world);

RewardOutput compute_rewards(const RewardContext& ctx, const RewardConfig& cfg);

}  // namespace zmlloco
