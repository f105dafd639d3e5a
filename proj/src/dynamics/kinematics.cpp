#include "zmlloco/dynamics/kinematics.hpp"

namespace zmlloco {

VecX SimState::generalized_velocity(const RobotModel& model) const {
  VecX nu(model.nv());
  if (model.floating_base) {
    nu.head<3>() = base_lin_vel;
    nu.segment<3>(3) = base_ang_vel;
  }
  nu.tail(model.n_dof()) = qd;
  return nu;
}

void SimState::set_generalized_velocity(const RobotModel& model, const VecX& nu) {
  if (model.floating_base) {
    base_lin_vel = nu.head<3>();
    base_ang_vel = nu.segment<3>(3);
  }
  qd = nu.tail(model.n_dof());
}

void forward_positions(const RobotModel& model, const SimState& state,
                       KinematicsResult& out) {
  out.resize(model.links.size());
  LinkKinematics& base = out[0];
  base.rotation = state.base_quat.toRotationMatrix();
  base.origin = state.base_pos;
  base.com = base.point(model.links[0].com);
  for (int j = 0; j < model.n_dof(); ++j) {
    const Joint& jt = model.joints[j];
    const LinkKinematics& p = out[jt.parent];
    LinkKinematics& c = out[j + 1];
    c.rotation = p.rotation * Eigen::AngleAxisd(state.q[j], jt.axis).toRotationMatrix();
    c.origin = p.point(jt.origin);
    c.com = c.point(model.links[j + 1].com);
  }
}

KinematicsResult forward_kinematics(const RobotModel& model,
                                    const SimState& state) {
  KinematicsResult out;
  forward_positions(model, state, out);

  // Velocity of each link origin, needed to propagate to children.
  aligned_vector<Vec3> origin_vel(model.links.size());
  if (model.floating_base) {
    origin_vel[0] = state.base_lin_vel;
    out[0].angular_velocity = state.base_ang_vel;
  } else {
    origin_vel[0].setZero();
    out[0].angular_velocity.setZero();
  }
  out[0].com_velocity =
      origin_vel[0] + out[0].angular_velocity.cross(out[0].com - out[0].origin);

  for (int j = 0; j < model.n_dof(); ++j) {
    const Joint& jt = model.joints[j];
    const LinkKinematics& p = out[jt.parent];
    LinkKinematics& c = out[j + 1];
    const Vec3 axis = p.rotation * jt.axis;
    c.angular_velocity = p.angular_velocity + axis * state.qd[j];
    origin_vel[j + 1] =
        origin_vel[jt.parent] + p.angular_velocity.cross(c.origin - p.origin);
    c.com_velocity = origin_vel[j + 1] + c.angular_velocity.cross(c.com - c.origin);
  }
  return out;
}

aligned_vector<Vec3> joint_axes(const RobotModel& model,
                                const KinematicsResult& kin) {
  aligned_vector<Vec3> axes(model.n_dof());
  for (int j = 0; j < model.n_dof(); ++j)
    axes[j] = kin[model.joints[j].parent].rotation * model.joints[j].axis;
  return axes;
}

Vec3 sole_center(const RobotModel& model, const KinematicsResult& kin,
                 int foot) {
  const FootDescriptor& f = model.feet[foot];
  return kin[f.link].point(f.sole_center);
}

}  // namespace zmlloco
