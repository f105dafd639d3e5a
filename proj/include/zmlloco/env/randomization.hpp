#pragma once

#include "zmlloco/dynamics/robot_model.hpp"
#include "zmlloco/env/env_config.hpp"
#include "zmlloco/rng.hpp"

namespace zmlloco {

// Per-episode physical draw. Disabled components hold their neutral value.
struct RandomizationDraw {
  double first_push_s = 0.0;  // +inf when pushes are off
  double delay_ms = 0.0;
  VecX kp_scale, kd_scale;    // per joint
  double friction = 1.0;
  VecX link_mass_scale;       // per link
  double load_mass = 0.0;     // kg on the trunk
  Vec3 com_offset = Vec3::Zero();
  double rfi = 0.0;           // episode torque-noise level

  Json to_json() const;
};

RandomizationDraw draw_randomization(const RobotModel& model, const RandomizationConfig& cfg,
                                     Rng& rng);

// Mass scales (inertia scaled alike), load on the trunk, base CoM shift and
// gain scales applied to a copy of the nominal model.
RobotModel apply_randomization(const RobotModel& nominal, const RandomizationDraw& draw);

struct PushEvent {
  Vec2 lin_vel = Vec2::Zero();
  Vec3 ang_vel = Vec3::Zero();
};

PushEvent draw_push(const RandomizationConfig& cfg, Rng& rng);
inline double draw_push_interval(const RandomizationConfig& cfg, Rng& rng) {
  return rng.exponential(cfg.push_interval_mean);
}

// a' = a (1 + sigma eps), eps ~ N(0, I).
VecX apply_action_noise(const VecX& a, double sigma, Rng& rng);

// Per-joint torque perturbation U(-scale, scale) * rfi * limit.
VecX draw_rfi(const RobotModel& model, const RandomizationConfig& cfg, double rfi, Rng& rng);

// Link that carries the load: the torso when present, else the base.
int trunk_link(const RobotModel& model);

}  // namespace zmlloco
