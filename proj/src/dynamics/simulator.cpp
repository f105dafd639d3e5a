#include "zmlloco/dynamics/simulator.hpp"

#include "zmlloco/dynamics/momentum.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace zmlloco {

namespace {

// Spatial vectors are [angular; linear] in world-origin Plücker coordinates.
inline Vec6 cross_motion(const Vec6& v, const Vec6& m) {
  Vec6 r;
  r.head<3>() = v.head<3>().cross(m.head<3>());
  r.tail<3>() = v.head<3>().cross(m.tail<3>()) + v.tail<3>().cross(m.head<3>());
  return r;
}

inline Vec6 cross_force(const Vec6& v, const Vec6& f) {
  Vec6 r;
  r.head<3>() = v.head<3>().cross(f.head<3>()) + v.tail<3>().cross(f.tail<3>());
  r.tail<3>() = v.head<3>().cross(f.tail<3>());
  return r;
}

Mat6 spatial_inertia(double mass, const Mat3& inertia_world, const Vec3& com) {
  const Mat3 cx = skew(com);
  Mat6 I;
  I.topLeftCorner<3, 3>() = inertia_world - mass * cx * cx;
  I.topRightCorner<3, 3>() = mass * cx;
  I.bottomLeftCorner<3, 3>() = -mass * cx;
  I.bottomRightCorner<3, 3>() = mass * Mat3::Identity();
  return I;
}

struct ContactCandidate {
  int foot = 0;
  Vec3 position = Vec3::Zero();
  double depth = 0.0;
  double damping = 0.0;
  std::vector<int> cols;                    // nonzero generalized coordinates
  Eigen::Matrix<double, 3, Eigen::Dynamic, 0, 3, 32> jac;  // 3 x cols.size()
  bool active = true;
  bool sliding = false;
  Vec2 slide_dir = Vec2::Zero();
  double slide_normal = 0.0;
  Vec3 force = Vec3::Zero();

  Vec3 velocity(const VecX& nu) const {
    Vec3 v = Vec3::Zero();
    for (std::size_t k = 0; k < cols.size(); ++k) v += jac.col(k) * nu[cols[k]];
    return v;
  }
  void add_generalized(const Vec3& f, VecX& out) const {
    for (std::size_t k = 0; k < cols.size(); ++k) out[cols[k]] += jac.col(k).dot(f);
  }
};

}  // namespace

struct Simulator::Workspace {
  KinematicsResult kin;
  aligned_vector<Mat6> inertia;
  aligned_vector<Mat6> composite;
  aligned_vector<Vec6> motion;  // joint motion subspaces
  aligned_vector<Vec6> vel, acc, force;
  Eigen::Matrix<double, 6, 6> base_map;  // generalized base velocity -> V_0
  MatX mass;
  VecX bias;
  MatX implicit;
  VecX rhs, nu, nu_pred, gen_force;
  Eigen::LDLT<MatX> mass_ldlt, implicit_ldlt;
  std::vector<ContactCandidate> candidates;
};

Simulator::Simulator(const RobotModel& model, SimParams params)
    : model_(&model), params_(params), ws_(std::make_unique<Workspace>()) {}

Simulator::~Simulator() = default;
Simulator::Simulator(Simulator&&) noexcept = default;
Simulator& Simulator::operator=(Simulator&&) noexcept = default;

Simulator::Simulator(const Simulator& other)
    : model_(other.model_), params_(other.params_), ws_(std::make_unique<Workspace>()) {}

Simulator& Simulator::operator=(const Simulator& other) {
  model_ = other.model_;
  params_ = other.params_;
  ws_ = std::make_unique<Workspace>();
  return *this;
}

void Simulator::compute_dynamics(const SimState& state, bool with_bias) {
  const RobotModel& m = *model_;
  Workspace& w = *ws_;
  const int nl = m.n_links();
  const int nd = m.n_dof();
  const int nb = m.base_offset();
  const int nv = m.nv();

  w.kin = forward_kinematics(m, state);
  w.inertia.resize(nl);
  w.composite.resize(nl);
  w.motion.resize(nd);
  for (int i = 0; i < nl; ++i) {
    const Mat3& R = w.kin[i].rotation;
    w.inertia[i] = spatial_inertia(m.links[i].mass,
                                   R * m.links[i].inertia * R.transpose(), w.kin[i].com);
    w.composite[i] = w.inertia[i];
  }
  for (int j = 0; j < nd; ++j) {
    const Vec3 s = w.kin[m.joints[j].parent].rotation * m.joints[j].axis;
    w.motion[j].head<3>() = s;
    w.motion[j].tail<3>() = w.kin[j + 1].origin.cross(s);
  }
  for (int c = nl - 1; c >= 1; --c) w.composite[m.joints[c - 1].parent] += w.composite[c];

  w.base_map.setZero();
  if (m.floating_base) {
    w.base_map.topRightCorner<3, 3>().setIdentity();
    w.base_map.bottomLeftCorner<3, 3>().setIdentity();
    w.base_map.bottomRightCorner<3, 3>() = skew(state.base_pos);
  }

  // Composite-rigid-body mass matrix.
  w.mass.setZero(nv, nv);
  if (m.floating_base)
    w.mass.topLeftCorner<6, 6>() =
        w.base_map.transpose() * w.composite[0] * w.base_map;
  for (int j = 0; j < nd; ++j) {
    const Vec6 F = w.composite[j + 1] * w.motion[j];
    const int bj = nb + j;
    w.mass(bj, bj) = w.motion[j].dot(F) + m.joints[j].armature;
    for (int l = m.joints[j].parent; l != 0; l = m.joints[l - 1].parent) {
      const int bk = nb + l - 1;
      w.mass(bk, bj) = w.mass(bj, bk) = w.motion[l - 1].dot(F);
    }
    if (m.floating_base) {
      const Vec6 fb = w.base_map.transpose() * F;
      w.mass.block<6, 1>(0, bj) = fb;
      w.mass.block<1, 6>(bj, 0) = fb.transpose();
    }
  }

  if (!with_bias) return;

  // Recursive Newton-Euler with zero generalized acceleration; gravity enters
  // as a fictitious upward base acceleration.
  w.vel.resize(nl);
  w.acc.resize(nl);
  w.force.resize(nl);
  Vec6 a0 = Vec6::Zero();
  a0.tail<3>() = -gravity_vector();
  Vec6 v0 = Vec6::Zero();
  if (m.floating_base) {
    v0.head<3>() = state.base_ang_vel;
    v0.tail<3>() = state.base_lin_vel + state.base_pos.cross(state.base_ang_vel);
    a0.tail<3>() += state.base_lin_vel.cross(state.base_ang_vel);
  }
  w.vel[0] = v0;
  w.acc[0] = a0;
  for (int j = 0; j < nd; ++j) {
    const int c = j + 1, p = m.joints[j].parent;
    const Vec6 vj = w.motion[j] * state.qd[j];
    w.vel[c] = w.vel[p] + vj;
    w.acc[c] = w.acc[p] + cross_motion(w.vel[c], vj);
  }
  for (int i = 0; i < nl; ++i)
    w.force[i] = w.inertia[i] * w.acc[i] + cross_force(w.vel[i], w.inertia[i] * w.vel[i]);
  w.bias.setZero(nv);
  for (int c = nl - 1; c >= 1; --c) {
    w.bias[nb + c - 1] = w.motion[c - 1].dot(w.force[c]);
    w.force[m.joints[c - 1].parent] += w.force[c];
  }
  if (m.floating_base) w.bias.head<6>() = w.base_map.transpose() * w.force[0];
}

MatX Simulator::mass_matrix(const SimState& state) {
  compute_dynamics(state, false);
  return ws_->mass;
}

VecX Simulator::bias_forces(const SimState& state) {
  compute_dynamics(state, true);
  return ws_->bias;
}

double Simulator::kinetic_energy(const SimState& state) {
  compute_dynamics(state, false);
  const VecX nu = state.generalized_velocity(*model_);
  return 0.5 * nu.dot(ws_->mass * nu);
}

double Simulator::potential_energy(const SimState& state) const {
  const KinematicsResult kin = forward_kinematics(*model_, state);
  double e = 0.0;
  for (int i = 0; i < model_->n_links(); ++i)
    e += model_->links[i].mass * kGravity * kin[i].com.z();
  return e;
}

ContactSet Simulator::step(SimState& state, const VecX& torques,
                           const Ground& ground, double dt) {
  const RobotModel& m = *model_;
  Workspace& w = *ws_;
  const ContactParams& cp = params_.contact;
  const int nd = m.n_dof();
  const int nb = m.base_offset();
  const int nv = m.nv();

  compute_dynamics(state, true);
  w.nu = state.generalized_velocity(m);
  const MomentumState h0 = m.floating_base ? compute_momentum(m, state, w.kin) : MomentumState{};

  // Actuation plus joint-range penalty.
  w.gen_force.setZero(nv);
  for (int j = 0; j < nd; ++j) {
    const Joint& jt = m.joints[j];
    double tau = torques[j];
    if (state.q[j] > jt.upper)
      tau -= params_.limit_stiffness * (state.q[j] - jt.upper) + params_.limit_damping * state.qd[j];
    else if (state.q[j] < jt.lower)
      tau -= params_.limit_stiffness * (state.q[j] - jt.lower) + params_.limit_damping * state.qd[j];
    w.gen_force[nb + j] = tau;
  }
  w.gen_force -= w.bias;

  // Penetrating sole points.
  w.candidates.clear();
  for (int f = 0; f < 2; ++f) {
    const FootDescriptor& foot = m.feet[f];
    for (const Vec3& local : foot.sole_points) {
      const Vec3 p = w.kin[foot.link].point(local);
      const double depth = ground.elevation(p.x(), p.y()) - p.z();
      if (!(depth > 0.0)) continue;
      ContactCandidate c;
      c.foot = f;
      c.position = p;
      c.depth = std::min(depth, cp.max_penetration);
      c.damping = cp.damping * std::min(1.0, depth / cp.damping_depth);
      if (m.floating_base)
        for (int k = 0; k < 6; ++k) c.cols.push_back(k);
      std::vector<int> chain;
      for (int l = foot.link; l != 0; l = m.joints[l - 1].parent) chain.push_back(l - 1);
      for (auto it = chain.rbegin(); it != chain.rend(); ++it) c.cols.push_back(nb + *it);
      c.jac.resize(3, static_cast<Eigen::Index>(c.cols.size()));
      int k = 0;
      if (m.floating_base) {
        c.jac.leftCols<3>().setIdentity();
        c.jac.middleCols<3>(3) = -skew(p - state.base_pos);
        k = 6;
      }
      for (auto it = chain.rbegin(); it != chain.rend(); ++it, ++k) {
        const Vec6& S = w.motion[*it];
        c.jac.col(k) = S.tail<3>() + S.head<3>().cross(p);
      }
      w.candidates.push_back(std::move(c));
    }
  }

  const double mu = params_.friction.value_or(ground.friction());
  const double ct = cp.tangential_damping;

  w.mass_ldlt.compute(w.mass);
  if (!w.candidates.empty()) {
    // Implicit predictor for damping and friction; fixed-point on the active
    // set (separating points, stick/slip transitions).
    for (int it = 0; it < params_.max_contact_iterations; ++it) {
      w.implicit = w.mass;
      w.rhs = w.mass * w.nu + dt * w.gen_force;
      for (const ContactCandidate& c : w.candidates) {
        if (!c.active) continue;
        const Vec3 d(c.sliding ? 0.0 : ct, c.sliding ? 0.0 : ct, c.damping);
        const auto n = static_cast<Eigen::Index>(c.cols.size());
        const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 32, 32> JtDJ =
            c.jac.transpose() * d.asDiagonal() * c.jac;
        for (Eigen::Index a = 0; a < n; ++a)
          for (Eigen::Index b = 0; b < n; ++b)
            w.implicit(c.cols[a], c.cols[b]) += dt * JtDJ(a, b);
        Vec3 f_const(0.0, 0.0, cp.stiffness * c.depth);
        if (c.sliding) f_const.head<2>() = -mu * c.slide_normal * c.slide_dir;
        c.add_generalized(dt * f_const, w.rhs);
      }
      w.implicit_ldlt.compute(w.implicit);
      w.nu_pred = w.implicit_ldlt.solve(w.rhs);

      bool changed = false;
      for (ContactCandidate& c : w.candidates) {
        if (!c.active) continue;
        const Vec3 v = c.velocity(w.nu_pred);
        const double fn = cp.stiffness * c.depth - c.damping * v.z();
        if (fn <= 0.0) {
          c.active = false;
          changed = true;
          continue;
        }
        const Vec2 vt = v.head<2>();
        if (!c.sliding && ct * vt.norm() > mu * fn) {
          c.sliding = true;
          c.slide_dir = vt.normalized();
          changed = true;
        }
        c.slide_normal = fn;
      }
      if (!changed) break;
    }

    // Clamped forces from the predicted velocity, applied explicitly.
    for (ContactCandidate& c : w.candidates) {
      c.force.setZero();
      if (!c.active) continue;
      const Vec3 v = c.velocity(w.nu_pred);
      const double fn = std::max(0.0, cp.stiffness * c.depth - c.damping * v.z());
      Vec2 ft = c.sliding ? Vec2(-mu * fn * c.slide_dir) : Vec2(-ct * v.head<2>());
      const double cap = mu * fn;
      if (ft.norm() > cap) ft *= cap / ft.norm();
      c.force << ft, fn;
      c.add_generalized(c.force, w.gen_force);
    }
  }

  w.nu += dt * w.mass_ldlt.solve(w.gen_force);

  ContactSet contacts;
  for (const ContactCandidate& c : w.candidates) {
    if (c.force.squaredNorm() == 0.0) continue;
    contacts.points.push_back({c.foot, c.position, c.force});
    contacts.foot_force[c.foot] += c.force;
    contacts.total_force += c.force;
    contacts.total_moment += c.position.cross(c.force);
  }
  for (int f = 0; f < 2; ++f) contacts.foot_contact[f] = contacts.foot_force[f].norm() > 0.0;

  // Semi-implicit Euler: positions advance with the new velocities.
  state.set_generalized_velocity(m, w.nu);
  if (m.floating_base) {
    state.base_pos += dt * state.base_lin_vel;
    const Vec3 rot = state.base_ang_vel * dt;
    const double angle = rot.norm();
    if (angle > 0.0)
      state.base_quat = Quat(Eigen::AngleAxisd(angle, rot / angle)) * state.base_quat;
    state.base_quat.normalize();
  }
  state.q += dt * state.qd;
  state.time += dt;
  if (m.floating_base) project_momentum(state, h0, contacts, dt);

  const double bound = params_.divergence_bound;
  auto bad = [bound](const auto& x) { return !x.allFinite() || x.cwiseAbs().maxCoeff() > bound; };
  if (bad(state.base_pos) || bad(state.base_lin_vel) || bad(state.base_ang_vel) ||
      (nd > 0 && (bad(state.q) || bad(state.qd))) || !state.base_quat.coeffs().allFinite())
    throw NumericalDivergence("simulation diverged at t = " + std::to_string(state.time));
  return contacts;
}

// Corrects the base twist so that the momentum change over the step equals
// dt times the external wrench (gravity moment at the midpoint CoM).
void Simulator::project_momentum(SimState& state, const MomentumState& h0, const ContactSet& contacts,
                                 double dt) {
  const RobotModel& m = *model_;
  const KinematicsResult kin = forward_kinematics(m, state);
  const MomentumState h1 = compute_momentum(m, state, kin);
  const Vec3 weight = h0.mass * gravity_vector();
  const Vec3 com_mid = 0.5 * (h0.com + h1.com);
  Vec6 err;
  err.head<3>() = h0.linear + dt * (weight + contacts.total_force) - h1.linear;
  err.tail<3>() = h0.angular + dt * (com_mid.cross(weight) + contacts.total_moment) - h1.angular;

  Mat6 A = Mat6::Zero();
  A.topLeftCorner<3, 3>() = h1.mass * Mat3::Identity();
  A.topRightCorner<3, 3>() = -h1.mass * skew(h1.com - state.base_pos);
  A.bottomLeftCorner<3, 3>() = h1.mass * skew(h1.com);
  for (int i = 0; i < m.n_links(); ++i) {
    const LinkKinematics& k = kin[i];
    const Mat3& R = k.rotation;
    A.bottomRightCorner<3, 3>() += R * m.links[i].inertia * R.transpose() -
                                   m.links[i].mass * skew(k.com) * skew(k.com - state.base_pos);
  }
  const Vec6 d = A.partialPivLu().solve(err);
  state.base_lin_vel += d.head<3>();
  state.base_ang_vel += d.tail<3>();
}

std::pair<SimState, ContactSet> step(const RobotModel& model,
                                     const SimState& state,
                                     const VecX& torques, const Ground& ground,
                                     double dt, const SimParams& params) {
  Simulator sim(model, params);
  SimState next = state;
  ContactSet contacts = sim.step(next, torques, ground, dt);
  return {std::move(next), std::move(contacts)};
}

VecX pd_torques(const RobotModel& model, const SimState& state,
                const VecX& target_q, const VecX& kp, const VecX& kd) {
  VecX tau(model.n_dof());
  for (int j = 0; j < model.n_dof(); ++j) {
    const double limit = model.joints[j].torque_limit;
    tau[j] = std::clamp(kp[j] * (target_q[j] - state.q[j]) - kd[j] * state.qd[j], -limit, limit);
  }
  return tau;
}

VecX pd_torques(const RobotModel& model, const SimState& state,
                const VecX& target_q) {
  VecX kp(model.n_dof()), kd(model.n_dof());
  for (int j = 0; j < model.n_dof(); ++j) {
    kp[j] = model.joints[j].kp;
    kd[j] = model.joints[j].kd;
  }
  return pd_torques(model, state, target_q, kp, kd);
}

VecX mirror_joint_vector(const RobotModel& model, const VecX& v) {
  VecX out(v.size());
  for (int j = 0; j < model.n_dof(); ++j)
    out[model.symmetry.joint_pair[j]] = model.symmetry.joint_sign[j] * v[j];
  return out;
}

SimState mirror_state(const RobotModel& model, const SimState& s) {
  SimState r = s;
  r.base_pos.y() = -s.base_pos.y();
  r.base_quat = Quat(s.base_quat.w(), -s.base_quat.x(), s.base_quat.y(), -s.base_quat.z());
  r.base_lin_vel.y() = -s.base_lin_vel.y();
  r.base_ang_vel.x() = -s.base_ang_vel.x();
  r.base_ang_vel.z() = -s.base_ang_vel.z();
  r.q = mirror_joint_vector(model, s.q);
  r.qd = mirror_joint_vector(model, s.qd);
  return r;
}

}  // namespace zmlloco
