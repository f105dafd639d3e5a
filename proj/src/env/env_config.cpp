#include "zmlloco/env/env_config.hpp"

#include <cmath>

namespace zmlloco {

RewardGroup reward_group(int term) {
  if (term <= kLowSpeed) return RewardGroup::task;
  if (term <= kFeetEdgeDistance) return RewardGroup::gait;
  return RewardGroup::regularization;
}

RandomizationConfig RandomizationConfig::none() {
  RandomizationConfig r;
  r.push = r.delay = r.gains = r.friction = r.link_mass = r.load = r.com = r.rfi = false;
  r.action_noise = 0.0;
  return r;
}

int EnvConfig::max_episode_steps() const {
  return static_cast<int>(std::lround(episode_s / control_dt()));
}

namespace {

Json to_json(const TerrainOptions& o) {
  return {{"length", o.length}, {"start_margin", o.start_margin}, {"cell", o.cell},
          {"drop", o.drop}, {"side_margin", o.side_margin}};
}

TerrainOptions terrain_options_from_json(const Json& j, const std::string& path) {
  TerrainOptions o;
  JsonReader r(j, path);
  r.get("length", o.length);
  r.get("start_margin", o.start_margin);
  r.get("cell", o.cell);
  r.get("drop", o.drop);
  r.get("side_margin", o.side_margin);
  r.finish();
  if (!(o.cell > 0.0) || !(o.length > 0.0)) throw ConfigError(path + ": cell and length must be positive");
  return o;
}

}  // namespace

Json to_json(const EnvConfig& c) {
  Json weights = Json::object();
  for (int k = 0; k < kNumRewardTerms; ++k) weights[kRewardNames[k]] = c.rewards.weights[k];
  const auto& rz = c.randomization;
  return {
      {"sim_dt", c.sim_dt},
      {"decimation", c.decimation},
      {"episode_s", c.episode_s},
      {"action_scale", c.action_scale},
      {"clip_actions", c.clip_actions},
      {"history", c.history},
      {"freeze_upper", c.freeze_upper},
      {"fall_height_ratio", c.fall_height_ratio},
      {"fall_gravity_xy", c.fall_gravity_xy},
      {"success_distance", c.success_distance},
      {"command",
       {{"lin_vel_x", to_json_pair(c.command.lin_vel_x)},
        {"lin_vel_y", to_json_pair(c.command.lin_vel_y)},
        {"yaw_gain", c.command.yaw_gain},
        {"yaw_limit", c.command.yaw_limit},
        {"resample_s", c.command.resample_s},
        {"fixed_vx", to_json_optional(c.command.fixed_vx)},
        {"fixed_vy", to_json_optional(c.command.fixed_vy)}}},
      {"randomization",
       {{"push", rz.push},
        {"push_interval_mean", rz.push_interval_mean},
        {"push_lin_vel", rz.push_lin_vel},
        {"push_ang_vel", rz.push_ang_vel},
        {"delay", rz.delay},
        {"delay_ms", to_json_pair(rz.delay_ms)},
        {"gains", rz.gains},
        {"gain_scale", to_json_pair(rz.gain_scale)},
        {"friction", rz.friction},
        {"friction_range", to_json_pair(rz.friction_range)},
        {"link_mass", rz.link_mass},
        {"link_mass_scale", to_json_pair(rz.link_mass_scale)},
        {"load", rz.load},
        {"load_mass", to_json_pair(rz.load_mass)},
        {"com", rz.com},
        {"com_offset", rz.com_offset},
        {"rfi", rz.rfi},
        {"rfi_scale", rz.rfi_scale},
        {"rfi_episode", to_json_pair(rz.rfi_episode)},
        {"action_noise", rz.action_noise}}},
      {"terrain",
       {{"mode", c.terrain.mode},
        {"curriculum", c.terrain.curriculum},
        {"initial_level", c.terrain.initial_level},
        {"max_initial_level", c.terrain.max_initial_level},
        {"width", to_json_optional(c.terrain.width)},
        {"gradient", to_json_optional(c.terrain.gradient)},
        {"step_height", to_json_optional(c.terrain.step_height)},
        {"geometry", to_json(c.terrain.geometry)}}},
      {"rewards",
       {{"weights", weights},
        {"tracking_sigma", c.rewards.tracking_sigma},
        {"air_time_target", c.rewards.air_time_target},
        {"feet_height_target", c.rewards.feet_height_target},
        {"feet_separation_band", to_json_pair(c.rewards.feet_separation_band)},
        {"edge_margin", c.rewards.edge_margin},
        {"base_height_target", to_json_optional(c.rewards.base_height_target)},
        {"soft_limit", c.rewards.soft_limit},
        {"moving_threshold", c.rewards.moving_threshold},
        {"contact_threshold", c.rewards.contact_threshold},
        {"zmp_zero_in_flight", c.rewards.zmp_zero_in_flight}}},
  };
}

EnvConfig env_config_from_json(const Json& j, const std::string& path) {
  EnvConfig c;
  JsonReader r(j, path);
  r.get("sim_dt", c.sim_dt);
  r.get("decimation", c.decimation);
  r.get("episode_s", c.episode_s);
  r.get("action_scale", c.action_scale);
  r.get("clip_actions", c.clip_actions);
  r.get("history", c.history);
  r.get("freeze_upper", c.freeze_upper);
  r.get("fall_height_ratio", c.fall_height_ratio);
  r.get("fall_gravity_xy", c.fall_gravity_xy);
  r.get("success_distance", c.success_distance);

  {
    const Json sub = r.child("command");
    JsonReader cr(sub, r.path("command"));
    cr.get("lin_vel_x", c.command.lin_vel_x);
    cr.get("lin_vel_y", c.command.lin_vel_y);
    cr.get("yaw_gain", c.command.yaw_gain);
    cr.get("yaw_limit", c.command.yaw_limit);
    cr.get("resample_s", c.command.resample_s);
    cr.get("fixed_vx", c.command.fixed_vx);
    cr.get("fixed_vy", c.command.fixed_vy);
    cr.finish();
  }
  {
    const Json sub = r.child("randomization");
    JsonReader rr(sub, r.path("randomization"));
    auto& z = c.randomization;
    rr.get("push", z.push);
    rr.get("push_interval_mean", z.push_interval_mean);
    rr.get("push_lin_vel", z.push_lin_vel);
    rr.get("push_ang_vel", z.push_ang_vel);
    rr.get("delay", z.delay);
    rr.get("delay_ms", z.delay_ms);
    rr.get("gains", z.gains);
    rr.get("gain_scale", z.gain_scale);
    rr.get("friction", z.friction);
    rr.get("friction_range", z.friction_range);
    rr.get("link_mass", z.link_mass);
    rr.get("link_mass_scale", z.link_mass_scale);
    rr.get("load", z.load);
    rr.get("load_mass", z.load_mass);
    rr.get("com", z.com);
    rr.get("com_offset", z.com_offset);
    rr.get("rfi", z.rfi);
    rr.get("rfi_scale", z.rfi_scale);
    rr.get("rfi_episode", z.rfi_episode);
    rr.get("action_noise", z.action_noise);
    rr.finish();
    if (z.action_noise < 0.0) throw ConfigError("action_noise must be non-negative");
  }
  {
    const Json sub = r.child("terrain");
    JsonReader tr(sub, r.path("terrain"));
    auto& t = c.terrain;
    tr.get("mode", t.mode);
    tr.get("curriculum", t.curriculum);
    tr.get("initial_level", t.initial_level);
    tr.get("max_initial_level", t.max_initial_level);
    tr.get("width", t.width);
    tr.get("gradient", t.gradient);
    tr.get("step_height", t.step_height);
    const Json geo = tr.child("geometry");
    t.geometry = terrain_options_from_json(geo, tr.path("geometry"));
    tr.finish();
    if (t.mode != "mixed") terrain_kind_from_string(t.mode);
    if (t.initial_level < 0 || t.initial_level >= kNumLevels || t.max_initial_level < t.initial_level ||
        t.max_initial_level >= kNumLevels)
      throw ConfigError("terrain levels must lie in [0, 19]");
  }
  {
    const Json sub = r.child("rewards");
    JsonReader wr(sub, r.path("rewards"));
    auto& w = c.rewards;
    const Json weights = wr.child("weights");
    {
      JsonReader ww(weights, wr.path("weights"));
      for (int k = 0; k < kNumRewardTerms; ++k) ww.get(kRewardNames[k], w.weights[k]);
      ww.finish();
    }
    wr.get("tracking_sigma", w.tracking_sigma);
    wr.get("air_time_target", w.air_time_target);
    wr.get("feet_height_target", w.feet_height_target);
    wr.get("feet_separation_band", w.feet_separation_band);
    wr.get("edge_margin", w.edge_margin);
    wr.get("base_height_target", w.base_height_target);
    wr.get("soft_limit", w.soft_limit);
    wr.get("moving_threshold", w.moving_threshold);
    wr.get("contact_threshold", w.contact_threshold);
    wr.get("zmp_zero_in_flight", w.zmp_zero_in_flight);
    wr.finish();
  }
  r.finish();
  if (!(c.sim_dt > 0.0) || c.sim_dt > 2e-3) throw ConfigError("sim_dt must lie in (0, 2e-3]");
  if (c.decimation < 1 || c.history < 1) throw ConfigError("decimation and history must be >= 1");
  return c;
}

}  // namespace zmlloco
