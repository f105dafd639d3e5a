#include "zmlloco/env/observation.hpp"

#include <stdexcept>

namespace zmlloco {

ObservationLayout::ObservationLayout(const RobotModel& model, int n_act_, int history_)
    : n_dof(model.n_dof()), n_links(model.n_links()), n_act(n_act_), history(history_) {}

bool SignedPermutation::is_involution() const {
  for (int i = 0; i < size(); ++i) {
    const int j = index[static_cast<std::size_t>(i)];
    if (j < 0 || j >= size() || index[static_cast<std::size_t>(j)] != i) return false;
    if (sign[static_cast<std::size_t>(i)] != sign[static_cast<std::size_t>(j)]) return false;
  }
  return true;
}

namespace {

struct Builder {
  SignedPermutation p;
  explicit Builder(int n) {
    p.index.resize(static_cast<std::size_t>(n));
    p.sign.assign(static_cast<std::size_t>(n), 1.0);
    for (int i = 0; i < n; ++i) p.index[static_cast<std::size_t>(i)] = i;
  }
  void set(int from, int to, double s) {
    p.index[static_cast<std::size_t>(from)] = to;
    p.sign[static_cast<std::size_t>(from)] = s;
  }
  void joints(int offset, const RobotModel& m, bool signed_) {
    for (int j = 0; j < m.n_dof(); ++j)
      set(offset + j, offset + m.symmetry.joint_pair[j], signed_ ? m.symmetry.joint_sign[j] : 1.0);
  }
  void actions(int offset, const SignedPermutation& a) {
    for (int i = 0; i < a.size(); ++i)
      set(offset + i, offset + a.index[static_cast<std::size_t>(i)], a.sign[static_cast<std::size_t>(i)]);
  }
  // Reflection of an axial vector (x, -y, z becomes -x, y, -z) or a polar one.
  void polar(int offset) { set(offset + 1, offset + 1, -1.0); }
  void axial(int offset) {
    set(offset, offset, -1.0);
    set(offset + 2, offset + 2, -1.0);
  }
};

void fill_actor(Builder& b, const RobotModel& m, const ObservationLayout& L,
                const SignedPermutation& act) {
  b.set(1, 1, -1.0);  // lateral velocity command
  b.set(2, 2, -1.0);  // yaw-rate command
  for (int k = 0; k < L.history; ++k) {
    const int o = L.frame_offset(k);
    b.joints(o, m, true);
    b.joints(o + L.n_dof, m, true);
    b.axial(o + 2 * L.n_dof);
    b.polar(o + 2 * L.n_dof + 3);
    b.actions(o + 2 * L.n_dof + 6, act);
  }
}

}  // namespace

SignedPermutation action_mirror(const RobotModel& model, const std::vector<int>& action_joints) {
  std::vector<int> slot(static_cast<std::size_t>(model.n_dof()), -1);
  for (std::size_t i = 0; i < action_joints.size(); ++i)
    slot[static_cast<std::size_t>(action_joints[i])] = static_cast<int>(i);
  Builder b(static_cast<int>(action_joints.size()));
  for (std::size_t i = 0; i < action_joints.size(); ++i) {
    const int j = action_joints[i];
    const int pj = model.symmetry.joint_pair[static_cast<std::size_t>(j)];
    const int target = slot[static_cast<std::size_t>(pj)];
    if (target < 0) throw std::invalid_argument("action joints are not closed under the mirror");
    b.set(static_cast<int>(i), target, model.symmetry.joint_sign[static_cast<std::size_t>(j)]);
  }
  return b.p;
}

SignedPermutation actor_obs_mirror(const RobotModel& model, const ObservationLayout& layout,
                                   const std::vector<int>& action_joints) {
  Builder b(layout.actor_dim());
  fill_actor(b, model, layout, action_mirror(model, action_joints));
  return b.p;
}

SignedPermutation critic_obs_mirror(const RobotModel& model, const ObservationLayout& layout,
                                    const std::vector<int>& action_joints) {
  Builder b(layout.critic_dim());
  fill_actor(b, model, layout, action_mirror(model, action_joints));
  int o = layout.privileged_offset();
  b.polar(o);                     // base linear velocity
  b.set(o + 4, o + 5, 1.0);       // contacts swap
  b.set(o + 5, o + 4, 1.0);
  b.joints(o + 6, model, false);  // kp scales
  b.joints(o + 6 + layout.n_dof, model, false);
  const std::vector<int> lp = model.link_pair();
  const int lo = o + 6 + 2 * layout.n_dof;
  for (int i = 0; i < layout.n_links; ++i) b.set(lo + i, lo + lp[static_cast<std::size_t>(i)], 1.0);
  o = layout.window_offset();
  for (int r = 0; r < kWindowRows; ++r)
    for (int c = 0; c < kWindowCols; ++c)
      b.set(o + r * kWindowCols + c, o + r * kWindowCols + (kWindowCols - 1 - c), 1.0);
  return b.p;
}

}  // namespace zmlloco
