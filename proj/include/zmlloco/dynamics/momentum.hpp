#pragma once

#include "zmlloco/dynamics/kinematics.hpp"

namespace zmlloco {

struct MomentumState {
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  Vec3 linear = Vec3::Zero();         // P
  Vec3 angular = Vec3::Zero();        // L about the world origin
  Vec3 angular_base = Vec3::Zero();   // L relative to the base position
  Vec3 linear_rate = Vec3::Zero();    // dP/dt
  Vec3 angular_rate = Vec3::Zero();   // dL/dt
};

// Rates are left zero; see momentum_rates.
MomentumState compute_momentum(const RobotModel& model, const SimState& state);
MomentumState compute_momentum(const RobotModel& model, const SimState& state,
                               const KinematicsResult& kin);

// Newton-Euler: dP = M g + f, dL = p_com x M g + tau.
inline void momentum_rates(MomentumState& m, const ContactSet& contacts) {
  const Vec3 weight = m.mass * gravity_vector();
  m.linear_rate = weight + contacts.total_force;
  m.angular_rate = m.com.cross(weight) + contacts.total_moment;
}

inline MomentumState momentum_with_rates(const RobotModel& model,
                                         const SimState& state,
                                         const ContactSet& contacts) {
  MomentumState m = compute_momentum(model, state);
  momentum_rates(m, contacts);
  return m;
}

}  // namespace zmlloco
