#pragma once

#include <memory>
#include <optional>
#include <utility>

#include "zmlloco/dynamics/ground.hpp"
#include "zmlloco/dynamics/kinematics.hpp"

namespace zmlloco {

struct MomentumState;

struct ContactParams {
  double stiffness = 2e4;         // N/m per point
  double damping = 200.0;         // N s/m per point
  double damping_depth = 1e-3;    // damping ramps in over this penetration
  double tangential_damping = 1e4;  // regularized Coulomb slope, N s/m
  double max_penetration = 0.05;
};

struct SimParams {
  ContactParams contact;
  double limit_stiffness = 1000.0;  // N m / rad beyond the joint range
  double limit_damping = 10.0;
  double divergence_bound = 1e6;
  int max_contact_iterations = 4;
  std::optional<double> friction;  // overrides Ground::friction()
};

// Joint-space PD law, clamped to the per-joint torque limit.
VecX pd_torques(const RobotModel& model, const SimState& state,
                const VecX& target_q, const VecX& kp, const VecX& kd);
VecX pd_torques(const RobotModel& model, const SimState& state,
                const VecX& target_q);

// Floating-base articulated dynamics with penalty point contacts at the soles.
// Composite-rigid-body mass matrix and recursive Newton-Euler bias forces,
// both in world-origin Plücker coordinates. Integration is semi-implicit
// Euler (velocities first); contact damping and friction are predicted with
// an implicit solve and then applied as explicit, clamped forces so that the
// reported ContactSet is exactly what drove the step. A final base-twist
// projection makes the per-step momentum change match the external wrench.
class Simulator {
 public:
  explicit Simulator(const RobotModel& model, SimParams params = {});
  ~Simulator();
  // Copies share the model but get their own scratch space.
  Simulator(const Simulator& other);
  Simulator& operator=(const Simulator& other);
  Simulator(Simulator&&) noexcept;
  Simulator& operator=(Simulator&&) noexcept;

  const RobotModel& model() const { return *model_; }
  const SimParams& params() const { return params_; }
  SimParams& params() { return params_; }

  // Advances `state` in place. Throws NumericalDivergence.
  ContactSet step(SimState& state, const VecX& torques, const Ground& ground,
                  double dt);

  MatX mass_matrix(const SimState& state);
  // C(q, v) v - g(q) in generalized coordinates.
  VecX bias_forces(const SimState& state);

  double kinetic_energy(const SimState& state);
  double potential_energy(const SimState& state) const;

 private:
  struct Workspace;
  void compute_dynamics(const SimState& state, bool with_bias);
  void project_momentum(SimState& state, const MomentumState& h0, const ContactSet& contacts, double dt);

  const RobotModel* model_;
  SimParams params_;
  std::unique_ptr<Workspace> ws_;
};

std::pair<SimState, ContactSet> step(const RobotModel& model,
                                     const SimState& state,
                                     const VecX& torques, const Ground& ground,
                                     double dt, const SimParams& params = {});

// Reflection across the x-z plane.
SimState mirror_state(const RobotModel& model, const SimState& state);
VecX mirror_joint_vector(const RobotModel& model, const VecX& v);

}  // namespace zmlloco
