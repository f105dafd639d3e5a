#include "zmlloco/env/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "zmlloco/dynamics/momentum.hpp"

namespace zmlloco {

std::string to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::none: return "none";
    case TerminationReason::fall: return "fall";
    case TerminationReason::off_path: return "off_path";
    case TerminationReason::timeout: return "timeout";
    case TerminationReason::divergence: return "divergence";
  }
  return "unknown";
}

double heading_error(const Quat& base_quat) { return wrap_angle(-heading(base_quat)); }

double yaw_command(const CommandConfig& cfg, double err) {
  return std::clamp(cfg.yaw_gain * err, -cfg.yaw_limit, cfg.yaw_limit);
}

Command sample_command(const CommandConfig& cfg, const SimState& state, Rng& rng) {
  Command c;
  const double vx = rng.uniform(cfg.lin_vel_x.x(), cfg.lin_vel_x.y());
  const double vy = rng.uniform(cfg.lin_vel_y.x(), cfg.lin_vel_y.y());
  c.vx = cfg.fixed_vx.value_or(vx);
  c.vy = cfg.fixed_vy.value_or(vy);
  c.yaw_rate = yaw_command(cfg, heading_error(state.base_quat));
  return c;
}

TerminationCheck check_termination(const EnvConfig& cfg, const SimState& state,
                                   const HeightField& terrain, double nominal_height,
                                   double time) {
  TerminationCheck t;
  const auto [ground, on_path] = terrain.height_at(state.base_pos.x(), state.base_pos.y());
  if (!state.all_finite()) {
    t = {true, TerminationReason::divergence};
  } else if (!on_path) {
    t = {true, TerminationReason::off_path};
  } else if (state.base_pos.z() - ground < cfg.fall_height_ratio * nominal_height ||
             projected_gravity(state.base_quat).head<2>().norm() > cfg.fall_gravity_xy) {
    t = {true, TerminationReason::fall};
  } else if (time >= cfg.episode_s - 1e-9) {
    t = {true, TerminationReason::timeout};
  }
  return t;
}

EpisodeStats episode_metrics(double x_start, double x_end, double success_distance,
                             const EpisodeStats& partial) {
  EpisodeStats s = partial;
  const double d = x_end - x_start;
  s.mxd = std::max(0.0, d);
  s.success = d >= success_distance;
  return s;
}

std::vector<std::string> episode_log_columns() {
  std::vector<std::string> c = {"time", "base_x", "base_y", "base_z", "qw", "qx", "qy", "qz",
                                "cmd_vx", "cmd_vy", "cmd_yaw"};
  for (const char* n : kRewardNames) c.push_back(std::string("r_") + n);
  for (const char* n : {"zmp_distance", "r_zmp", "contact_left", "contact_right", "mass"})
    c.push_back(n);
  for (const char* g : {"com", "dp", "dl", "sole_left", "sole_right", "force_left", "force_right"})
    for (const char* a : {"_x", "_y", "_z"}) c.push_back(std::string(g) + a);
  return c;
}

void EpisodeLogger::begin(std::uint64_t seed, const TerrainSpec& spec,
                          const RandomizationDraw& draw) {
  const Json terrain = {{"kind", to_string(spec.kind)}, {"level", spec.level},
                        {"width", spec.width}, {"gradient", spec.gradient},
                        {"step_height", spec.step_height}, {"step_width", spec.step_width},
                        {"length", spec.length}, {"friction", spec.friction}};
  *os_ << "# seed=" << seed << "\n# terrain=" << terrain.dump()
       << "\n# randomization=" << draw.to_json().dump() << "\n";
  const auto cols = episode_log_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) *os_ << (i ? "," : "") << cols[i];
  *os_ << "\n";
}

void EpisodeLogger::row(const std::vector<double>& values) {
  auto old = os_->precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) *os_ << (i ? "," : "") << values[i];
  *os_ << "\n";
  os_->precision(old);
}

LocomotionEnv::LocomotionEnv(std::shared_ptr<const RobotModel> nominal, EnvConfig cfg)
    : nominal_(std::move(nominal)), cfg_(std::move(cfg)) {
  for (int j = 0; j < nominal_->n_dof(); ++j)
    if (!(cfg_.freeze_upper && nominal_->joints[j].upper_body)) action_joints_.push_back(j);
  layout_ = ObservationLayout(*nominal_, n_act(), cfg_.history);
  nominal_height_ = nominal_->nominal_base_height();
  reset(cfg_.terrain.initial_level, 0);
}

VecX LocomotionEnv::target_from_action(const VecX& a) const {
  VecX t = nominal_->default_pose();
  for (int i = 0; i < n_act(); ++i) t[action_joints_[static_cast<std::size_t>(i)]] += cfg_.action_scale * a[i];
  return t;
}

VecX LocomotionEnv::actor_frame(const RobotModel& model, const SimState& s, const VecX& prev_action,
                                const ObservationLayout& L) {
  VecX f(L.frame_dim());
  const int n = L.n_dof;
  f.head(n) = s.q - model.default_pose();
  f.segment(n, n) = s.qd;
  f.segment<3>(2 * n) = s.base_quat.conjugate() * s.base_ang_vel;
  f.segment<3>(2 * n + 3) = projected_gravity(s.base_quat);
  f.tail(L.n_act) = prev_action;
  return f;
}

void LocomotionEnv::push_frame() {
  frames_.push_back(actor_frame(*model_, state_, action_, layout_));
  while (static_cast<int>(frames_.size()) > layout_.history) frames_.pop_front();
}

void LocomotionEnv::refresh_observations() {
  const ObservationLayout& L = layout_;
  actor_obs_.resize(L.actor_dim());
  actor_obs_ << command_.vx, command_.vy, command_.yaw_rate, VecX::Zero(L.actor_dim() - 3);
  for (int k = 0; k < L.history; ++k)
    actor_obs_.segment(L.frame_offset(k), L.frame_dim()) = frames_[static_cast<std::size_t>(k)];

  critic_obs_.setZero(L.critic_dim());
  critic_obs_.head(L.actor_dim()) = actor_obs_;
  int o = L.privileged_offset();
  critic_obs_.segment<3>(o) = state_.base_quat.conjugate() * state_.base_lin_vel;
  critic_obs_[o + 3] = state_.base_pos.z() - terrain_.elevation(state_.base_pos.x(), state_.base_pos.y());
  for (int f = 0; f < 2; ++f)
    critic_obs_[o + 4 + f] = contacts_.in_contact(f, cfg_.rewards.contact_threshold) ? 1.0 : 0.0;
  critic_obs_.segment(o + 6, L.n_dof) = draw_.kp_scale;
  critic_obs_.segment(o + 6 + L.n_dof, L.n_dof) = draw_.kd_scale;
  critic_obs_.segment(o + 6 + 2 * L.n_dof, L.n_links) = draw_.link_mass_scale;
  critic_obs_.segment<kWindowSize>(L.window_offset()) =
      sample_height_window(terrain_, state_.base_pos, state_.base_quat);
}

void LocomotionEnv::update_command() {
  if (state_.time >= next_resample_ - 1e-9) {
    command_ = sample_command(cfg_.command, state_, rng_);
    next_resample_ += cfg_.command.resample_s;
  }
  command_.yaw_rate = yaw_command(cfg_.command, heading_error(state_.base_quat));
}

void LocomotionEnv::reset(int level, std::uint64_t seed, std::optional<TerrainKind> kind) {
  seed_ = seed;
  rng_ = Rng(seed);
  level_ = std::clamp(level, 0, kNumLevels - 1);

  const TerrainConfig& tc = cfg_.terrain;
  const TerrainKind k = mix_terrains(rng_);
  const TerrainKind chosen = kind ? *kind : (tc.mode == "mixed" ? k : terrain_kind_from_string(tc.mode));
  draw_ = draw_randomization(*nominal_, cfg_.randomization, rng_);
  spec_ = zmlloco::terrain_spec(chosen, level_);
  spec_.length = tc.geometry.length;
  if (tc.width) spec_.width = *tc.width;
  if (tc.gradient && chosen == TerrainKind::narrow_slope) spec_.gradient = *tc.gradient;
  if (tc.step_height && chosen == TerrainKind::narrow_stairs) spec_.step_height = *tc.step_height;
  spec_.friction = draw_.friction;
  terrain_ = make_height_field(spec_, tc.geometry);

  model_ = std::make_unique<RobotModel>(apply_randomization(*nominal_, draw_));
  SimParams sp;
  sp.friction = draw_.friction;
  sim_ = std::make_unique<Simulator>(*model_, sp);

  state_ = SimState::zeros(*model_);
  state_.q = model_->default_pose();
  state_.base_pos = Vec3(0.0, 0.0, terrain_.elevation(0.0, 0.0) + nominal_height_ + 0.002);
  contacts_ = ContactSet{};
  delay_steps_ = std::clamp(static_cast<int>(std::lround(draw_.delay_ms * 1e-3 / cfg_.sim_dt)), 0,
                            cfg_.decimation);
  next_push_ = draw_.first_push_s;
  next_resample_ = 0.0;
  update_command();

  action_ = prev_action_ = prev_prev_action_ = VecX::Zero(n_act());
  target_ = prev_target_ = model_->default_pose();
  torques_ = VecX::Zero(model_->n_dof());
  air_time_ = {0.0, 0.0};
  was_contact_ = {true, true};
  frames_.clear();
  push_frame();
  while (static_cast<int>(frames_.size()) < layout_.history) frames_.push_front(frames_.front());
  refresh_observations();

  steps_ = 0;
  x_start_ = state_.base_pos.x();
  commanded_vx_sum_ = 0.0;
  episode_ = EpisodeStats{};
  episode_.terrain = spec_;
  episode_.level = level_;
  if (logger_) logger_->begin(seed_, spec_, draw_);
}

StepInfo LocomotionEnv::step(const VecX& action) {
  StepInfo info;
  const RandomizationConfig& rz = cfg_.randomization;
  prev_prev_action_ = prev_action_;
  prev_action_ = action_;
  action_ = action.cwiseMax(-cfg_.clip_actions).cwiseMin(cfg_.clip_actions);
  const VecX noisy = apply_action_noise(action_, rz.action_noise, rng_);
  prev_target_ = target_;
  target_ = target_from_action(noisy);
  const Vec3 prev_lin_vel = state_.base_lin_vel;

  try {
    for (int k = 0; k < cfg_.decimation; ++k) {
      const VecX& tgt = k < delay_steps_ ? prev_target_ : target_;
      torques_ = pd_torques(*model_, state_, tgt);
      if (draw_.rfi != 0.0) {
        torques_ += draw_rfi(*model_, rz, draw_.rfi, rng_);
        for (int j = 0; j < model_->n_dof(); ++j) {
          const double lim = model_->joints[j].torque_limit;
          torques_[j] = std::clamp(torques_[j], -lim, lim);
        }
      }
      contacts_ = sim_->step(state_, torques_, terrain_, cfg_.sim_dt);
    }
  } catch (const NumericalDivergence&) {
    info.done = true;
    info.reason = TerminationReason::divergence;
  }
  ++steps_;

  if (!info.done && state_.time >= next_push_ - 1e-9) {
    const PushEvent p = draw_push(rz, rng_);
    info.pre_push_lin_vel = state_.base_lin_vel;
    info.pre_push_ang_vel = state_.base_ang_vel;
    state_.base_lin_vel.head<2>() += p.lin_vel;
    state_.base_ang_vel += p.ang_vel;
    info.push = p;
    next_push_ += draw_push_interval(rz, rng_);
  }

  if (info.done) {
    episode_.steps = steps_;
    episode_.length_s = steps_ * cfg_.control_dt();
    episode_.reason = info.reason;
    return info;
  }

  const double time = steps_ * cfg_.control_dt();
  update_command();
  commanded_vx_sum_ += command_.vx;

  const KinematicsResult kin = forward_kinematics(*model_, state_);
  MomentumState mom = compute_momentum(*model_, state_, kin);
  momentum_rates(mom, contacts_);

  RewardContext ctx;
  ctx.model = model_.get();
  ctx.state = &state_;
  ctx.kin = &kin;
  ctx.contacts = &contacts_;
  ctx.momentum = &mom;
  ctx.terrain = &terrain_;
  ctx.spec = &spec_;
  ctx.command = command_;
  ctx.prev_base_lin_vel = prev_lin_vel;
  ctx.control_dt = cfg_.control_dt();
  ctx.action = action_;
  ctx.prev_action = prev_action_;
  ctx.prev_prev_action = prev_prev_action_;
  ctx.target_q = target_from_action(action_);
  ctx.torques = torques_;
  ctx.nominal_height = nominal_height_;
  for (int f = 0; f < 2; ++f) {
    const bool c = contacts_.in_contact(f, cfg_.rewards.contact_threshold);
    if (!c) air_time_[static_cast<std::size_t>(f)] += cfg_.control_dt();
    ctx.first_contact[static_cast<std::size_t>(f)] = c && !was_contact_[static_cast<std::size_t>(f)];
    ctx.air_time[static_cast<std::size_t>(f)] = air_time_[static_cast<std::size_t>(f)];
    if (c) air_time_[static_cast<std::size_t>(f)] = 0.0;
    was_contact_[static_cast<std::size_t>(f)] = c;
  }
  const RewardOutput rew = compute_rewards(ctx, cfg_.rewards);
  info.rewards = rew.weighted;
  info.raw = rew.raw;
  info.balance = rew.balance;

  push_frame();
  refresh_observations();

  const TerminationCheck term = check_termination(cfg_, state_, terrain_, nominal_height_, time);
  info.done = term.done;
  info.reason = term.reason;
  info.timeout = term.reason == TerminationReason::timeout;

  episode_.steps = steps_;
  episode_.length_s = time;
  episode_.reward_sums += rew.weighted;
  episode_.zmp_distance.push_back(rew.balance.distance);
  episode_.reason = term.reason;

  if (logger_) {
    std::vector<double> row = {time, state_.base_pos.x(), state_.base_pos.y(), state_.base_pos.z(),
                               state_.base_quat.w(), state_.base_quat.x(), state_.base_quat.y(),
                               state_.base_quat.z(), command_.vx, command_.vy, command_.yaw_rate};
    for (int k = 0; k < kNumRewardTerms; ++k) row.push_back(rew.weighted[k]);
    row.push_back(rew.balance.distance);
    row.push_back(rew.balance.reward);
    for (int f = 0; f < 2; ++f)
      row.push_back(contacts_.in_contact(f, cfg_.rewards.contact_threshold) ? 1.0 : 0.0);
    row.push_back(mom.mass);
    for (const Vec3& v : {mom.com, mom.linear_rate, mom.angular_rate, sole_center(*model_, kin, 0),
                          sole_center(*model_, kin, 1), contacts_.foot_force[0], contacts_.foot_force[1]})
      for (int a = 0; a < 3; ++a) row.push_back(v[a]);
    logger_->row(row);
  }
  return info;
}

EpisodeStats LocomotionEnv::finished_episode() const {
  EpisodeStats partial = episode_;
  partial.commanded_distance = steps_ > 0 ? commanded_vx_sum_ / steps_ * cfg_.episode_s : 0.0;
  return episode_metrics(x_start_, state_.base_pos.x(), cfg_.success_distance, partial);
}

}  // namespace zmlloco
