#pragma once

#include "zmlloco/dynamics/state.hpp"

namespace zmlloco {

struct LinkKinematics {
  Mat3 rotation = Mat3::Identity();
  Vec3 origin = Vec3::Zero();   // link frame origin, world
  Vec3 com = Vec3::Zero();      // CoM, world
  Vec3 com_velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();

  Vec3 point(const Vec3& local) const { return origin + rotation * local; }
  Vec3 point_velocity(const Vec3& world_point) const {
    return com_velocity + angular_velocity.cross(world_point - com);
  }
};

using KinematicsResult = aligned_vector<LinkKinematics>;

KinematicsResult forward_kinematics(const RobotModel& model,
                                    const SimState& state);

// Positions only; velocities are left zero.
void forward_positions(const RobotModel& model, const SimState& state,
                       KinematicsResult& out);

// World-frame joint axes; axis j passes through the origin of link j + 1.
aligned_vector<Vec3> joint_axes(const RobotModel& model,
                                const KinematicsResult& kin);

// World position of a foot's sole center / sole points.
Vec3 sole_center(const RobotModel& model, const KinematicsResult& kin,
                 int foot);

// Gravity direction expressed in the base frame.
inline Vec3 projected_gravity(const Quat& base_quat) {
  return base_quat.conjugate() * Vec3(0.0, 0.0, -1.0);
}

inline double heading(const Quat& q) {
  const Vec3 x = q * Vec3::UnitX();
  return std::atan2(x.y(), x.x());
}

}  // namespace zmlloco
