#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "zmlloco/types.hpp"

namespace zmlloco {

struct Link {
  std::string name;
  double mass = 1.0;
  Mat3 inertia = Mat3::Identity();  // about the link CoM, link frame
  Vec3 com = Vec3::Zero();          // CoM offset in the link frame
  // Non-foot point checked against the ground for the collision penalty.
  bool collision_probe = false;
  Vec3 probe_point = Vec3::Zero();
};

// Revolute joint connecting `parent` to the child link `index + 1`.
struct Joint {
  std::string name;
  int parent = 0;
  Vec3 origin = Vec3::Zero();  // joint location in the parent frame
  Vec3 axis = Vec3::UnitZ();   // unit rotation axis, parent frame
  double lower = -EIGEN_PI;
  double upper = EIGEN_PI;
  double velocity_limit = 20.0;
  double torque_limit = 100.0;
  double kp = 50.0;
  double kd = 2.0;
  double armature = 0.01;
  double default_position = 0.0;
  bool upper_body = false;
};

struct FootDescriptor {
  int link = 0;
  std::vector<Vec3> sole_points;  // contact corners in the link frame
  Vec3 sole_center = Vec3::Zero();
};

// Left-right reflection across the x-z plane in joint space.
struct SymmetryMap {
  std::vector<int> joint_pair;
  std::vector<double> joint_sign;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Kinematic tree with a floating (or fixed) base link 0. Links are stored in
// topological order: joint j always drives link j + 1.
class RobotModel {
 public:
  static constexpr int kFormatVersion = 1;

  std::string name = "robot";
  std::vector<Link> links;
  std::vector<Joint> joints;
  std::array<FootDescriptor, 2> feet;  // 0 = left, 1 = right
  SymmetryMap symmetry;
  bool floating_base = true;

  int n_dof() const { return static_cast<int>(joints.size()); }
  int n_links() const { return static_cast<int>(links.size()); }
  // Size of the generalized velocity: 6 base + joints when floating.
  int nv() const { return n_dof() + (floating_base ? 6 : 0); }
  int base_offset() const { return floating_base ? 6 : 0; }

  double total_mass() const;
  VecX default_pose() const;

  // Link-space reflection derived from the joint map; base maps to itself.
  std::vector<int> link_pair() const;

  // Height of the base origin above flat ground with the default pose and
  // both soles level.
  double nominal_base_height() const;

  // Throws ModelError on any invariant violation.
  void validate() const;

  // FNV-1a over the canonical serialized form.
  std::uint64_t hash() const;
};

struct BipedOptions {
  bool arms = true;
  bool waist = true;
  bool ankle_roll = true;
  double total_mass_scale = 1.0;
};

// Box-link humanoid: 12 leg DOF, 1 waist, 8 arm DOF (21 total, ~45 kg).
RobotModel make_default_biped(const BipedOptions& options = {});

// Fixed-base single link swinging about the y axis.
RobotModel make_pendulum(double mass, double length, double armature = 0.0);

Mat3 box_inertia(double mass, const Vec3& size);

}  // namespace zmlloco
