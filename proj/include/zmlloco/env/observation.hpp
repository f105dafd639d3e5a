#pragma once

#include <algorithm>
#include <vector>

#include "zmlloco/dynamics/robot_model.hpp"
#include "zmlloco/terrain/terrain.hpp"

namespace zmlloco {

inline constexpr int kPrivilegedDim = 70;

// Actor frame: [q - q_default (n), qd (n), base angular velocity in the base
// frame (3), projected gravity (3), previous action (n_act)]. The actor
// observation is the command (3) followed by `history` frames, oldest first.
// Critic observation: actor observation, privileged block, height window.
// Privileged block: base linear velocity in the base frame (3), base height
// above the terrain (1), left/right contact (2), kp scales (n), kd scales (n),
// link mass scales (n_links), zero padding up to 70.
struct ObservationLayout {
  int n_dof = 0;
  int n_links = 0;
  int n_act = 0;
  int history = 4;

  ObservationLayout() = default;
  ObservationLayout(const RobotModel& model, int n_act, int history);

  int frame_dim() const { return 2 * n_dof + 6 + n_act; }
  int actor_dim() const { return 3 + history * frame_dim(); }
  int privileged_used() const { return 6 + 2 * n_dof + n_links; }
  int privileged_dim() const { return std::max(kPrivilegedDim, privileged_used()); }
  int critic_dim() const { return actor_dim() + privileged_dim() + kWindowSize; }

  int frame_offset(int k) const { return 3 + k * frame_dim(); }
  int privileged_offset() const { return actor_dim(); }
  int window_offset() const { return actor_dim() + privileged_dim(); }
};

// Signed permutation: out[index[i]] = sign[i] * in[i].
struct SignedPermutation {
  std::vector<int> index;
  std::vector<double> sign;

  int size() const { return static_cast<int>(index.size()); }
  template <typename Derived>
  typename Derived::PlainObject apply(const Eigen::MatrixBase<Derived>& in) const {
    typename Derived::PlainObject out(in.rows(), in.cols());
    for (int i = 0; i < size(); ++i)
      out.row(index[static_cast<std::size_t>(i)]) =
          static_cast<typename Derived::Scalar>(sign[static_cast<std::size_t>(i)]) * in.row(i);
    return out;
  }
  bool is_involution() const;
};

// Joint reflection restricted to the actuated subset `action_joints`.
SignedPermutation action_mirror(const RobotModel& model, const std::vector<int>& action_joints);
SignedPermutation actor_obs_mirror(const RobotModel& model, const ObservationLayout& layout,
                                   const std::vector<int>& action_joints);
SignedPermutation critic_obs_mirror(const RobotModel& model, const ObservationLayout& layout,
                                    const std::vector<int>& action_joints);

}  // namespace zmlloco
