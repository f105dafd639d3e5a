#include "zmlloco/env/randomization.hpp"

#include <limits>

namespace zmlloco {

namespace {

VecX uniform_vector(int n, const Vec2& range, Rng& rng) {
  VecX v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(range.x(), range.y());
  return v;
}

Json vector_json(const VecX& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

}  // namespace

Json RandomizationDraw::to_json() const {
  return {{"first_push_s", std::isfinite(first_push_s) ? Json(first_push_s) : Json(nullptr)},
          {"delay_ms", delay_ms},
          {"kp_scale", vector_json(kp_scale)},
          {"kd_scale", vector_json(kd_scale)},
          {"friction", friction},
          {"link_mass_scale", vector_json(link_mass_scale)},
          {"load_mass", load_mass},
          {"com_offset", {com_offset.x(), com_offset.y(), com_offset.z()}},
          {"rfi", rfi}};
}

int trunk_link(const RobotModel& model) {
  for (int j = 0; j < model.n_dof(); ++j)
    if (model.joints[j].upper_body && model.joints[j].parent == 0) return j + 1;
  return 0;
}

RandomizationDraw draw_randomization(const RobotModel& model, const RandomizationConfig& cfg,
                                     Rng& rng) {
  // Every component consumes the rng whether enabled or not.
  const int n = model.n_dof(), nl = model.n_links();
  RandomizationDraw d;
  const double push = draw_push_interval(cfg, rng);
  d.first_push_s = cfg.push ? push : std::numeric_limits<double>::infinity();
  const double delay = rng.uniform(cfg.delay_ms.x(), cfg.delay_ms.y());
  d.delay_ms = cfg.delay ? delay : 0.0;
  d.kp_scale = uniform_vector(n, cfg.gain_scale, rng);
  d.kd_scale = uniform_vector(n, cfg.gain_scale, rng);
  if (!cfg.gains) d.kp_scale.setOnes(), d.kd_scale.setOnes();
  const double mu = rng.uniform(cfg.friction_range.x(), cfg.friction_range.y());
  d.friction = cfg.friction ? mu : 1.0;
  d.link_mass_scale = uniform_vector(nl, cfg.link_mass_scale, rng);
  if (!cfg.link_mass) d.link_mass_scale.setOnes();
  const double load = rng.uniform(cfg.load_mass.x(), cfg.load_mass.y());
  d.load_mass = cfg.load ? load : 0.0;
  Vec3 com;
  for (int k = 0; k < 3; ++k) com[k] = rng.uniform(-cfg.com_offset, cfg.com_offset);
  d.com_offset = cfg.com ? com : Vec3::Zero();
  const double rfi = rng.uniform(cfg.rfi_episode.x(), cfg.rfi_episode.y());
  d.rfi = cfg.rfi ? rfi : 0.0;
  return d;
}

RobotModel apply_randomization(const RobotModel& nominal, const RandomizationDraw& d) {
  RobotModel m = nominal;
  for (int i = 0; i < m.n_links(); ++i) {
    m.links[i].mass *= d.link_mass_scale[i];
    m.links[i].inertia *= d.link_mass_scale[i];
  }
  const int trunk = trunk_link(m);
  if (d.load_mass != 0.0) {
    Link& l = m.links[trunk];
    const double mass = l.mass + d.load_mass;
    if (mass <= 0.05 * l.mass) throw ModelError("load leaves the trunk without mass");
    l.inertia *= mass / l.mass;
    l.mass = mass;
  }
  m.links[0].com += d.com_offset;
  for (int j = 0; j < m.n_dof(); ++j) {
    m.joints[j].kp *= d.kp_scale[j];
    m.joints[j].kd *= d.kd_scale[j];
  }
  return m;
}

PushEvent draw_push(const RandomizationConfig& cfg, Rng& rng) {
  PushEvent p;
  for (int k = 0; k < 2; ++k) p.lin_vel[k] = rng.uniform(-cfg.push_lin_vel, cfg.push_lin_vel);
  for (int k = 0; k < 3; ++k) p.ang_vel[k] = rng.uniform(-cfg.push_ang_vel, cfg.push_ang_vel);
  return p;
}

VecX apply_action_noise(const VecX& a, double sigma, Rng& rng) {
  VecX out(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out[i] = a[i] * (1.0 + sigma * rng.normal());
  return out;
}

VecX draw_rfi(const RobotModel& model, const RandomizationConfig& cfg, double rfi, Rng& rng) {
  VecX d(model.n_dof());
  for (int j = 0; j < model.n_dof(); ++j)
    d[j] = rng.uniform(-cfg.rfi_scale, cfg.rfi_scale) * rfi * model.joints[j].torque_limit;
  return d;
}

}  // namespace zmlloco
