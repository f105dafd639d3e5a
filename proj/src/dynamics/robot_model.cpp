#include "zmlloco/dynamics/robot_model.hpp"

#include <algorithm>
#include <numeric>

#include "zmlloco/dynamics/kinematics.hpp"

namespace zmlloco {

double RobotModel::total_mass() const {
  return std::accumulate(links.begin(), links.end(), 0.0,
                         [](double acc, const Link& l) { return acc + l.mass; });
}

VecX RobotModel::default_pose() const {
  VecX q(n_dof());
  for (int j = 0; j < n_dof(); ++j) q[j] = joints[j].default_position;
  return q;
}

std::vector<int> RobotModel::link_pair() const {
  std::vector<int> pair(links.size());
  pair[0] = 0;
  for (int j = 0; j < n_dof(); ++j) pair[j + 1] = symmetry.joint_pair[j] + 1;
  return pair;
}

double RobotModel::nominal_base_height() const {
  SimState s = SimState::zeros(*this);
  s.q = default_pose();
  KinematicsResult kin;
  forward_positions(*this, s, kin);
  double lowest = 0.0;
  for (const auto& foot : feet)
    for (const Vec3& p : foot.sole_points)
      lowest = std::min(lowest, kin[foot.link].point(p).z());
  return -lowest;
}

void RobotModel::validate() const {
  if (links.empty()) throw ModelError("model has no links");
  if (static_cast<int>(links.size()) != n_dof() + 1)
    throw ModelError("link count must equal joint count + 1");
  for (const Link& l : links) {
    if (!(l.mass > 0.0)) throw ModelError("link '" + l.name + "' has non-positive mass");
    const Mat3 sym = 0.5 * (l.inertia + l.inertia.transpose());
    if ((sym - l.inertia).norm() > 1e-12 * (1.0 + l.inertia.norm()))
      throw ModelError("link '" + l.name + "' inertia is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3> es(sym);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw ModelError("link '" + l.name + "' inertia is not positive definite");
  }
  for (int j = 0; j < n_dof(); ++j) {
    const Joint& jt = joints[j];
    if (jt.parent < 0 || jt.parent > j)
      throw ModelError("joint '" + jt.name + "' parent must precede its child");
    if (std::abs(jt.axis.norm() - 1.0) > 1e-9)
      throw ModelError("joint '" + jt.name + "' axis is not unit length");
    if (!(jt.lower < jt.upper)) throw ModelError("joint '" + jt.name + "' has an empty range");
    if (!(jt.torque_limit > 0.0) || !(jt.velocity_limit > 0.0))
      throw ModelError("joint '" + jt.name + "' limits must be positive");
    if (jt.kp < 0.0 || jt.kd < 0.0 || jt.armature < 0.0)
      throw ModelError("joint '" + jt.name + "' gains must be non-negative");
  }
  for (const FootDescriptor& f : feet) {
    if (f.link <= 0 || f.link >= n_links()) throw ModelError("foot link index out of range");
    if (f.sole_points.size() < 4) throw ModelError("a foot needs at least 4 sole points");
  }
  const auto& pair = symmetry.joint_pair;
  const auto& sign = symmetry.joint_sign;
  if (static_cast<int>(pair.size()) != n_dof() || static_cast<int>(sign.size()) != n_dof())
    throw ModelError("symmetry map size must equal n_dof");
  for (int j = 0; j < n_dof(); ++j) {
    if (pair[j] < 0 || pair[j] >= n_dof()) throw ModelError("symmetry pair out of range");
    if (pair[pair[j]] != j) throw ModelError("symmetry map is not an involution");
    if (sign[j] != 1.0 && sign[j] != -1.0) throw ModelError("symmetry signs must be +-1");
    if (sign[pair[j]] != sign[j]) throw ModelError("paired joints must share a sign");
  }
}

Mat3 box_inertia(double mass, const Vec3& size) {
  const double x2 = size.x() * size.x(), y2 = size.y() * size.y(),
               z2 = size.z() * size.z();
  return (mass / 12.0 * Vec3(y2 + z2, x2 + z2, x2 + y2)).asDiagonal();
}

namespace {

struct JointSpec {
  const char* name;
  Vec3 origin;
  Vec3 axis;
  double lower, upper, kp, kd, torque, armature, def;
};

struct LinkSpec {
  const char* name;
  double mass;
  Vec3 size;
  Vec3 com;
};

// Mirror a left-side spec to the right: flip y, and for roll/yaw axes negate
// the range and default.
JointSpec mirrored(JointSpec s, const char* name) {
  s.name = name;
  s.origin.y() = -s.origin.y();
  if (s.axis.y() == 0.0) {
    const double lo = s.lower;
    s.lower = -s.upper;
    s.upper = -lo;
    s.def = -s.def;
  }
  return s;
}

LinkSpec mirrored(LinkSpec s, const char* name) {
  s.name = name;
  s.com.y() = -s.com.y();
  return s;
}

}  // namespace

RobotModel make_default_biped(const BipedOptions& opt) {
  RobotModel m;
  m.name = "desk_biped";
  const double ms = opt.total_mass_scale;

  auto add_link = [&](const LinkSpec& ls) {
    Link l;
    l.name = ls.name;
    l.mass = ls.mass * ms;
    l.inertia = box_inertia(l.mass, ls.size);
    l.com = ls.com;
    m.links.push_back(l);
    return static_cast<int>(m.links.size()) - 1;
  };
  auto add_joint = [&](const JointSpec& js, int parent, bool upper) {
    Joint j;
    j.name = js.name;
    j.parent = parent;
    j.origin = js.origin;
    j.axis = js.axis;
    j.lower = js.lower;
    j.upper = js.upper;
    j.kp = js.kp;
    j.kd = js.kd;
    j.torque_limit = js.torque;
    j.armature = js.armature;
    j.default_position = js.def;
    j.velocity_limit = 20.0;
    j.upper_body = upper;
    m.joints.push_back(j);
  };

  const int pelvis = add_link({"pelvis", 8.0, {0.15, 0.25, 0.12}, Vec3::Zero()});
  m.links[pelvis].collision_probe = true;

  const Vec3 X = Vec3::UnitX(), Y = Vec3::UnitY(), Z = Vec3::UnitZ();

  const JointSpec leg_joints[] = {
      {"left_hip_yaw", {0.0, 0.1, -0.06}, Z, -0.4, 0.4, 150, 4.0, 80, 0.02, 0.0},
      {"left_hip_roll", {0.0, 0.0, -0.05}, X, -0.4, 0.4, 400, 10.0, 150, 0.02, 0.0},
      {"left_hip_pitch", {0.0, 0.0, -0.04}, Y, -1.5, 1.0, 600, 15.0, 200, 0.02, -0.2},
      {"left_knee", {0.0, 0.0, -0.35}, Y, -0.1, 2.0, 800, 20.0, 250, 0.03, 0.4},
      {"left_ankle_pitch", {0.0, 0.0, -0.35}, Y, -0.8, 0.6, 800, 20.0, 150, 0.02, -0.2},
      {"left_ankle_roll", {0.0, 0.0, 0.0}, X, -0.3, 0.3, 300, 8.0, 80, 0.02, 0.0},
  };
  const LinkSpec leg_links[] = {
      {"left_hip_yaw_link", 1.0, {0.06, 0.06, 0.06}, {0.0, 0.0, -0.02}},
      {"left_hip_roll_link", 1.0, {0.06, 0.06, 0.06}, {0.0, 0.0, -0.02}},
      {"left_thigh", 3.5, {0.08, 0.08, 0.35}, {0.0, 0.0, -0.175}},
      {"left_shank", 2.5, {0.07, 0.07, 0.35}, {0.0, 0.0, -0.175}},
      {"left_ankle_link", 0.3, {0.04, 0.04, 0.04}, Vec3::Zero()},
      {"left_foot", 0.8, {0.2, 0.08, 0.04}, {0.02, 0.0, -0.04}},
  };
  const char* right_joint_names[] = {"right_hip_yaw", "right_hip_roll", "right_hip_pitch",
                                     "right_knee", "right_ankle_pitch", "right_ankle_roll"};
  const char* right_link_names[] = {"right_hip_yaw_link", "right_hip_roll_link", "right_thigh",
                                    "right_shank", "right_ankle_link", "right_foot"};

  const int legs = opt.ankle_roll ? 6 : 5;
  std::vector<int> foot_links;
  for (int side = 0; side < 2; ++side) {
    int parent = pelvis;
    for (int k = 0; k < legs; ++k) {
      JointSpec js = side == 0 ? leg_joints[k] : mirrored(leg_joints[k], right_joint_names[k]);
      LinkSpec ls = side == 0 ? leg_links[k] : mirrored(leg_links[k], right_link_names[k]);
      if (!opt.ankle_roll && k == legs - 1) {
        // The ankle pitch link doubles as the foot.
        ls = side == 0 ? leg_links[5] : mirrored(leg_links[5], right_link_names[5]);
        ls.mass += leg_links[4].mass;
      }
      add_joint(js, parent, false);
      parent = add_link(ls);
      if (k == 3) {
        m.links[parent].collision_probe = true;
        m.links[parent].probe_point = Vec3::Zero();  // knee
      }
    }
    foot_links.push_back(parent);
  }

  int torso = pelvis;
  if (opt.waist) {
    add_joint({"waist_yaw", {0.0, 0.0, 0.06}, Z, -1.0, 1.0, 200, 5.0, 100, 0.02, 0.0}, pelvis, true);
    torso = add_link({"torso", 12.0, {0.18, 0.3, 0.4}, {0.0, 0.0, 0.2}});
  } else {
    // Fold the torso mass into the pelvis.
    Link& p = m.links[pelvis];
    const double mt = 12.0 * ms;
    const Vec3 ct(0.0, 0.0, 0.26);
    const Vec3 c = (p.mass * p.com + mt * ct) / (p.mass + mt);
    Mat3 I = p.inertia + p.mass * (c - p.com).squaredNorm() * Mat3::Identity() -
             p.mass * (c - p.com) * (c - p.com).transpose();
    I += box_inertia(mt, {0.18, 0.3, 0.4}) + mt * (ct - c).squaredNorm() * Mat3::Identity() -
         mt * (ct - c) * (ct - c).transpose();
    p.mass += mt;
    p.com = c;
    p.inertia = I;
  }
  m.links[torso].collision_probe = true;
  m.links[torso].probe_point = Vec3(0.0, 0.0, 0.4);

  if (opt.arms) {
    const Vec3 shoulder = opt.waist ? Vec3(0.0, 0.19, 0.35) : Vec3(0.0, 0.19, 0.41);
    const JointSpec arm_joints[] = {
        {"left_shoulder_pitch", shoulder, Y, -2.0, 2.0, 40, 1.5, 30, 0.01, 0.0},
        {"left_shoulder_roll", {0.0, 0.04, 0.0}, X, -0.5, 1.5, 40, 1.5, 30, 0.01, 0.15},
        {"left_shoulder_yaw", {0.0, 0.0, -0.06}, Z, -1.5, 1.5, 40, 1.5, 30, 0.01, 0.0},
        {"left_elbow", {0.0, 0.0, -0.22}, Y, -0.5, 2.0, 40, 1.5, 30, 0.01, 0.3},
    };
    const LinkSpec arm_links[] = {
        {"left_shoulder_link", 0.8, {0.06, 0.06, 0.06}, Vec3::Zero()},
        {"left_shoulder_roll_link", 0.6, {0.05, 0.05, 0.05}, Vec3::Zero()},
        {"left_upper_arm", 1.2, {0.06, 0.06, 0.22}, {0.0, 0.0, -0.1}},
        {"left_forearm", 0.8, {0.05, 0.05, 0.22}, {0.0, 0.0, -0.1}},
    };
    const char* rj[] = {"right_shoulder_pitch", "right_shoulder_roll", "right_shoulder_yaw",
                        "right_elbow"};
    const char* rl[] = {"right_shoulder_link", "right_shoulder_roll_link", "right_upper_arm",
                        "right_forearm"};
    for (int side = 0; side < 2; ++side) {
      int parent = torso;
      for (int k = 0; k < 4; ++k) {
        add_joint(side == 0 ? arm_joints[k] : mirrored(arm_joints[k], rj[k]), parent, true);
        parent = add_link(side == 0 ? arm_links[k] : mirrored(arm_links[k], rl[k]));
      }
      m.links[parent].collision_probe = true;
      m.links[parent].probe_point = Vec3(0.0, 0.0, -0.22);  // hand
    }
  }

  for (int side = 0; side < 2; ++side) {
    FootDescriptor f;
    f.link = foot_links[side];
    const double z = -0.06;
    for (double x : {-0.10, 0.14})
      for (double y : {-0.05, 0.05}) f.sole_points.emplace_back(x, y, z);
    f.sole_center = Vec3(0.02, 0.0, z);
    m.feet[side] = f;
  }

  // Symmetry: pair each joint with the same-named joint on the other side.
  const int n = m.n_dof();
  m.symmetry.joint_pair.assign(n, -1);
  m.symmetry.joint_sign.assign(n, 1.0);
  for (int j = 0; j < n; ++j) {
    std::string name = m.joints[j].name;
    std::string other = name;
    if (name.rfind("left_", 0) == 0) other = "right_" + name.substr(5);
    else if (name.rfind("right_", 0) == 0) other = "left_" + name.substr(6);
    for (int k = 0; k < n; ++k)
      if (m.joints[k].name == other) m.symmetry.joint_pair[j] = k;
    m.symmetry.joint_sign[j] = m.joints[j].axis.y() != 0.0 ? 1.0 : -1.0;
  }
  m.validate();
  return m;
}

RobotModel make_pendulum(double mass, double length, double armature) {
  RobotModel m;
  m.name = "pendulum";
  m.floating_base = false;
  Link base;
  base.name = "anchor";
  base.mass = 1.0;
  base.inertia = box_inertia(1.0, {0.1, 0.1, 0.1});
  m.links.push_back(base);
  Link bob;
  bob.name = "bob";
  bob.mass = mass;
  bob.inertia = box_inertia(mass, {0.02, 0.02, 0.02});
  bob.com = Vec3(0.0, 0.0, -length);
  m.links.push_back(bob);
  Joint j;
  j.name = "swing";
  j.parent = 0;
  j.axis = Vec3::UnitY();
  j.lower = -1e3;
  j.upper = 1e3;
  j.kp = 0.0;
  j.kd = 0.0;
  j.armature = armature;
  j.torque_limit = 1e3;
  m.joints.push_back(j);
  for (auto& f : m.feet) {
    f.link = 1;
    f.sole_points = {Vec3(0.01, 0.01, -length), Vec3(-0.01, 0.01, -length),
                     Vec3(0.01, -0.01, -length), Vec3(-0.01, -0.01, -length)};
    f.sole_center = Vec3(0.0, 0.0, -length);
  }
  m.symmetry.joint_pair = {0};
  m.symmetry.joint_sign = {1.0};
  m.validate();
  return m;
}

}  // namespace zmlloco
