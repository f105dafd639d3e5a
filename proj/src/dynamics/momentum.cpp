#include "zmlloco/dynamics/momentum.hpp"

namespace zmlloco {

MomentumState compute_momentum(const RobotModel& model, const SimState& state,
                               const KinematicsResult& kin) {
  MomentumState out;
  const Vec3 base_vel = model.floating_base ? state.base_lin_vel : Vec3::Zero();
  const Vec3 base_omega = model.floating_base ? state.base_ang_vel : Vec3::Zero();
  Vec3 weighted = Vec3::Zero();
  for (int i = 0; i < model.n_links(); ++i) {
    const Link& link = model.links[i];
    const LinkKinematics& k = kin[i];
    const Mat3 inertia = k.rotation * link.inertia * k.rotation.transpose();
    const Vec3 p = link.mass * k.com_velocity;
    out.mass += link.mass;
    weighted += link.mass * k.com;
    out.linear += p;
    out.angular += k.com.cross(p) + inertia * k.angular_velocity;
    out.angular_base += (k.com - state.base_pos).cross(link.mass * (k.com_velocity - base_vel)) +
                        inertia * (k.angular_velocity - base_omega);
  }
  out.com = weighted / out.mass;
  return out;
}

MomentumState compute_momentum(const RobotModel& model, const SimState& state) {
  return compute_momentum(model, state, forward_kinematics(model, state));
}

}  // namespace zmlloco
