#include <cmath>
#include <fstream>
#include <iostream>

#include "zmlloco/cli/commands.hpp"
#include "zmlloco/env/vec_env.hpp"

namespace zmlloco {

DifficultyPreset difficulty_preset(const std::string& name) {
  if (name == "easy") return {name, 0.2, 0.10, 0.04};
  if (name == "medium") return {name, 0.4, 0.15, 0.06};
  if (name == "hard") return {name, 0.6, 0.20, 0.08};
  throw ConfigError("unknown difficulty '" + name + "' (expected easy, medium or hard)");
}

EnvConfig eval_env_config(const EnvConfig& base, TerrainKind kind, double width, const DifficultyPreset& d) {
  EnvConfig c = base;
  c.randomization = RandomizationConfig::none();
  const bool flat = kind == TerrainKind::narrow_flat || kind == TerrainKind::plane;
  c.randomization.push = flat && d.push > 0.0;
  c.randomization.push_interval_mean = base.randomization.push_interval_mean;
  c.randomization.push_lin_vel = d.push;
  c.randomization.push_ang_vel = 0.0;
  c.command.fixed_vx = 0.5;
  c.command.fixed_vy = 0.0;
  c.terrain.mode = to_string(kind);
  c.terrain.curriculum = false;
  c.terrain.width = width;
  c.terrain.gradient = d.gradient;
  c.terrain.step_height = d.step_height;
  return c;
}

std::vector<std::string> eval_csv_columns() {
  return {"format_version", "terrain", "width", "difficulty", "episodes",
          "success_rate", "success_std", "mxd_mean", "mxd_std"};
}

void write_eval_csv(std::ostream& os, const std::vector<EvalRow>& rows, const std::string& prefix_cols,
                    const std::vector<std::string>& prefix_values) {
  if (!prefix_cols.empty()) os << prefix_cols << ',';
  const auto cols = eval_csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  const auto old = os.precision(10);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const EvalRow& e = rows[r];
    if (!prefix_cols.empty()) os << prefix_values.at(r) << ',';
    os << kEvalCsvVersion << ',' << to_string(e.kind) << ',' << e.width << ',' << e.difficulty << ','
       << e.episodes << ',' << e.success_rate << ',' << e.success_std << ',' << e.mxd_mean << ',' << e.mxd_std
       << '\n';
  }
  os.precision(old);
}

std::vector<EvalRow> evaluate_policy(const LoadedPolicy& policy, std::shared_ptr<const RobotModel> model,
                                     const EnvConfig& base, const EvalRequest& req) {
  if (req.episodes < 1) throw ConfigError("episodes must be positive");
  const DifficultyPreset preset = difficulty_preset(req.difficulty);
  std::vector<EvalRow> rows;
  const int workers = worker_count(req.episodes);
  for (TerrainKind kind : req.kinds) {
    for (double width : req.widths) {
      const EnvConfig cfg = eval_env_config(base, kind, width, preset);
      std::vector<double> mxd(static_cast<std::size_t>(req.episodes));
      std::vector<int> success(static_cast<std::size_t>(req.episodes));
      parallel_for(req.episodes, workers, [&](int i) {
        LocomotionEnv env(model, cfg);
        if (env.layout().actor_dim() != policy.actor_norm.dim())
          throw ConfigError("policy observation size does not match the evaluation environment");
        std::ofstream log;
        EpisodeLogger logger(log);
        if (i < req.log_episodes) {
          std::filesystem::create_directories(req.log_dir);
          const auto path = req.log_dir / ("episode_" + to_string(kind) + "_w" + std::to_string(width).substr(0, 4) +
                                           "_" + std::to_string(i) + ".csv");
          log.open(path);
          if (!log) throw std::runtime_error("cannot write " + path.string());
          env.set_logger(&logger);
        }
        env.reset(0, Rng::derive(req.seed, static_cast<std::uint64_t>(i)).next_u64(), kind);
        for (;;) {
          const StepInfo info = env.step(policy.act(env.actor_obs()));
          if (info.done) break;
        }
        const EpisodeStats ep = env.finished_episode();
        mxd[static_cast<std::size_t>(i)] = ep.mxd;
        success[static_cast<std::size_t>(i)] = ep.success ? 1 : 0;
      });
      EvalRow row;
      row.kind = kind;
      row.width = width;
      row.difficulty = preset.name;
      row.episodes = req.episodes;
      double s = 0.0, m = 0.0;
      for (int i = 0; i < req.episodes; ++i) {
        s += success[static_cast<std::size_t>(i)];
        m += mxd[static_cast<std::size_t>(i)];
      }
      const double n = req.episodes;
      row.success_rate = s / n;
      row.success_std = std::sqrt(row.success_rate * (1.0 - row.success_rate) / n);
      row.mxd_mean = m / n;
      double var = 0.0;
      for (double x : mxd) var += (x - row.mxd_mean) * (x - row.mxd_mean);
      row.mxd_std = req.episodes > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  LoadedPolicy policy;
  RunConfig cfg;
  try {
    policy = load_policy(load_checkpoint(opt.checkpoint));
    cfg = opt.config ? load_run_config(*opt.config) : run_config_from_json(policy.run_config);
    if (opt.config) {
      // Environment settings always follow the checkpoint; only the model may differ.
      const RunConfig trained = run_config_from_json(policy.run_config);
      cfg.env = trained.env;
    }
  } catch (const ConfigFileMissing& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    const auto model = load_run_model(cfg);
    if (model->hash() != policy.model_hash) {
      err << "error: checkpoint " << opt.checkpoint.string() << " was trained on a different robot model (hash "
          << std::hex << policy.model_hash << " vs " << model->hash() << std::dec << "); refusing to evaluate\n";
      return kExitRefused;
    }
    const auto rows = evaluate_policy(policy, model, cfg.env, opt.request);
    if (opt.out) {
      if (opt.out->has_parent_path()) std::filesystem::create_directories(opt.out->parent_path());
      std::ofstream os(*opt.out);
      write_eval_csv(os, rows);
      if (!os) throw std::runtime_error("cannot write " + opt.out->string());
    } else {
      write_eval_csv(out, rows);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace zmlloco
