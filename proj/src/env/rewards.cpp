#include "zmlloco/env/rewards.hpp"

#include <cmath>

namespace zmlloco {

Vec3 to_heading_frame(const Quat& base_quat, const Vec3& world) {
  const double yaw = heading(base_quat);
  const double c = std::cos(yaw), s = std::sin(yaw);
  return Vec3(c * world.x() + s * world.y(), -s * world.x() + c * world.y(), world.z());
}

RewardOutput compute_rewards(const RewardContext& ctx, const RewardConfig& cfg) {
  const RobotModel& m = *ctx.model;
  const SimState& s = *ctx.state;
  const KinematicsResult& kin = *ctx.kin;
  const ContactSet& contacts = *ctx.contacts;
  const HeightField& terrain = *ctx.terrain;
  RewardOutput out;
  RewardVector& r = out.raw;

  const Vec3 v = to_heading_frame(s.base_quat, s.base_lin_vel);
  const Command& c = ctx.command;
  const double sigma = cfg.tracking_sigma;
  const bool moving = std::hypot(c.vx, c.vy) > cfg.moving_threshold;

  std::array<bool, 2> contact{};
  std::array<Vec3, 2> sole;
  std::array<Vec3, 2> sole_vel;
  for (int f = 0; f < 2; ++f) {
    contact[f] = contacts.in_contact(f, cfg.contact_threshold);
    sole[f] = sole_center(m, kin, f);
    sole_vel[f] = kin[m.feet[f].link].point_velocity(sole[f]);
  }

  r[kTrackingLinVel] = std::exp(-(Vec2(v.x(), v.y()) - Vec2(c.vx, c.vy)).squaredNorm() / sigma);
  r[kTrackingAngVel] = std::exp(-std::pow(s.base_ang_vel.z() - c.yaw_rate, 2) / sigma);
  r[kLowSpeed] = (c.vx > 0.2 && std::abs(v.x()) < 0.5 * c.vx) ? 1.0 : 0.0;

  out.balance = evaluate_balance(*ctx.momentum, sole[0], sole[1], contacts.foot_force[0],
                                 contacts.foot_force[1], cfg.contact_threshold);
  r[kZmp] = out.balance.reward;

  double air = 0.0;
  for (int f = 0; f < 2; ++f)
    if (ctx.first_contact[f]) air += std::min(ctx.air_time[f], cfg.air_time_target);
  r[kFeetAirTime] = moving ? air : 0.0;
  r[kFeetContact] = (moving && contact[0] != contact[1]) ? 1.0 : 0.0;

  const double sep = std::abs(to_heading_frame(s.base_quat, sole[0] - sole[1]).y());
  r[kFeetSeparation] = std::max(0.0, cfg.feet_separation_band.x() - sep) +
                       std::max(0.0, sep - cfg.feet_separation_band.y());

  double slip = 0.0, height = 0.0;
  for (int f = 0; f < 2; ++f) {
    if (contact[f]) {
      slip += sole_vel[f].head<2>().norm();
    } else {
      const double clearance = sole[f].z() - terrain.elevation(sole[f].x(), sole[f].y());
      const double gap = std::max(0.0, cfg.feet_height_target - clearance) / cfg.feet_height_target;
      height += gap * gap;
    }
  }
  r[kFeetSlippage] = slip;
  r[kFeetHeight] = height;

  const double base_h = s.base_pos.z() - terrain.elevation(s.base_pos.x(), s.base_pos.y());
  const double target_h = cfg.base_height_target.value_or(ctx.nominal_height);
  r[kBaseHeight] = (base_h - target_h) * (base_h - target_h);

  double near_edge = 0.0;
  int points = 0;
  if (ctx.spec->kind != TerrainKind::plane) {
    const double half = 0.5 * ctx.spec->width;
    for (int f = 0; f < 2; ++f)
      for (const Vec3& local : m.feet[f].sole_points) {
        const Vec3 p = kin[m.feet[f].link].point(local);
        near_edge += (half - std::abs(p.y()) < cfg.edge_margin) ? 1.0 : 0.0;
        ++points;
      }
  }
  r[kFeetEdgeDistance] = points > 0 ? near_edge / points : 0.0;

  r[kAngularMomentum] = reward_angular_momentum<double>(ctx.momentum->angular_base);
  r[kOrientation] = projected_gravity(s.base_quat).head<2>().squaredNorm();
  r[kBaseAcceleration] = ((s.base_lin_vel - ctx.prev_base_lin_vel) / ctx.control_dt).squaredNorm();
  r[kActionSmoothness] = (ctx.action - 2.0 * ctx.prev_action + ctx.prev_prev_action).squaredNorm();
  r[kActionCloseness] = (ctx.target_q - s.q).squaredNorm();
  r[kTorque] = ctx.torques.squaredNorm();
  r[kDofVel] = s.qd.squaredNorm();

  double limit = 0.0;
  for (int j = 0; j < m.n_dof(); ++j) {
    const Joint& jt = m.joints[j];
    const double mid = 0.5 * (jt.lower + jt.upper);
    const double half = 0.5 * (jt.upper - jt.lower) * cfg.soft_limit;
    limit += std::max(0.0, s.q[j] - (mid + half)) + std::max(0.0, (mid - half) - s.q[j]);
  }
  r[kDofPosLimit] = limit;

  double hits = 0.0;
  for (int i = 0; i < m.n_links(); ++i) {
    if (!m.links[i].collision_probe) continue;
    const Vec3 p = kin[i].point(m.links[i].probe_point);
    if (p.z() < terrain.elevation(p.x(), p.y())) hits += 1.0;
  }
  r[kCollision] = hits;

  for (int k = 0; k < kNumRewardTerms; ++k) out.weighted[k] = cfg.weights[k] * r[k];
  return out;
}

}  // namespace zmlloco
