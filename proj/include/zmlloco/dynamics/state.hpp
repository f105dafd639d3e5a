#pragma once

#include <stdexcept>

#include "zmlloco/dynamics/robot_model.hpp"

namespace zmlloco {

// Base twist is stored in the world frame; base_lin_vel is the velocity of the
// base origin.
struct SimState {
  Vec3 base_pos = Vec3::Zero();
  Quat base_quat = Quat::Identity();
  Vec3 base_lin_vel = Vec3::Zero();
  Vec3 base_ang_vel = Vec3::Zero();
  VecX q;
  VecX qd;
  double time = 0.0;

  static SimState zeros(const RobotModel& model) {
    SimState s;
    s.q = VecX::Zero(model.n_dof());
    s.qd = VecX::Zero(model.n_dof());
    return s;
  }

  bool all_finite() const {
    return base_pos.allFinite() && base_quat.coeffs().allFinite() &&
           base_lin_vel.allFinite() && base_ang_vel.allFinite() &&
           q.allFinite() && qd.allFinite() && std::isfinite(time);
  }

  // Generalized velocity [v_base; w_base; qd] (or just qd for fixed bases).
  VecX generalized_velocity(const RobotModel& model) const;
  void set_generalized_velocity(const RobotModel& model, const VecX& nu);
};

struct ContactPoint {
  int foot = 0;
  Vec3 position = Vec3::Zero();
  Vec3 force = Vec3::Zero();
};

struct ContactSet {
  std::vector<ContactPoint> points;
  std::array<Vec3, 2> foot_force{Vec3::Zero(), Vec3::Zero()};
  std::array<bool, 2> foot_contact{false, false};
  Vec3 total_force = Vec3::Zero();
  // Moment of all contact forces about the world origin.
  Vec3 total_moment = Vec3::Zero();

  // Contact indicator with a force-norm threshold (0 gives the strict form).
  bool in_contact(int foot, double threshold) const {
    return foot_force[foot].norm() > threshold;
  }
};

class NumericalDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zmlloco
