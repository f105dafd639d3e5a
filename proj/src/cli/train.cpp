#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "zmlloco/cli/commands.hpp"

namespace zmlloco {
namespace {

namespace fs = std::filesystem;

std::string checkpoint_name(int iteration) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "iter_%06d.ckpt", iteration);
  return buf;
}

// Keeps the header and the rows up to `iteration`.
void truncate_metrics(const fs::path& path, int iteration) {
  std::ifstream is(path);
  if (!is) return;
  std::string line, kept;
  bool header = true;
  while (std::getline(is, line)) {
    if (header) {
      kept += line + "\n";
      header = false;
      continue;
    }
    const int it = std::stoi(line.substr(0, line.find(',')));
    if (it <= iteration) kept += line + "\n";
  }
  is.close();
  std::ofstream os(path, std::ios::trunc);
  os << kept;
  if (!os) throw std::runtime_error("cannot rewrite " + path.string());
}

void write_level_table(const Trainer& tr, const fs::path& path) {
  std::ofstream os(path);
  os << "level,episodes,successes,success_rate\n";
  for (int l = 0; l < kNumLevels; ++l) {
    const auto n = tr.level_episodes()[static_cast<std::size_t>(l)];
    const auto s = tr.level_successes()[static_cast<std::size_t>(l)];
    os << l << ',' << n << ',' << s << ',' << (n ? static_cast<double>(s) / static_cast<double>(n) : 0.0) << '\n';
  }
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

// Shared by train and ablate.
int run_training(const RunConfig& cfg, const std::optional<fs::path>& resume, bool quiet, std::ostream& out,
                 std::ostream& err) {
  const fs::path dir = cfg.out_dir;
  fs::create_directories(dir / "checkpoints");
  {
    std::ofstream os(dir / "resolved_config.json");
    os << to_json(cfg).dump(2) << '\n';
    if (!os) throw std::runtime_error("cannot write " + (dir / "resolved_config.json").string());
  }
  const auto model = load_run_model(cfg);
  Trainer tr(model, cfg.env, cfg.train, cfg.seed);
  const Json run_json = to_json(cfg);
  const fs::path metrics = dir / "metrics.csv";
  if (resume) {
    tr.restore(load_checkpoint(*resume));
    truncate_metrics(metrics, tr.iteration());
    if (!quiet) out << "resumed from " << resume->string() << " at iteration " << tr.iteration() << '\n';
  }
  const bool fresh = !resume || !fs::exists(metrics) || fs::file_size(metrics) == 0;
  std::ofstream mos(metrics, fresh ? std::ios::trunc : std::ios::app);
  if (!mos) throw std::runtime_error("cannot open " + metrics.string());
  if (fresh) write_metrics_header(mos);

  auto save = [&](bool final_save) {
    const Checkpoint c = tr.checkpoint(run_json);
    save_checkpoint(c, dir / "checkpoints" / checkpoint_name(tr.iteration()));
    save_checkpoint(c, dir / "latest.ckpt");
    if (final_save) write_level_table(tr, dir / "level_success.csv");
  };

  const int total = cfg.train.iterations;
  while (tr.iteration() < total) {
    IterationMetrics m;
    try {
      m = tr.iterate();
    } catch (const NonFiniteLoss& e) {
      save(true);
      err << "training aborted: " << e.what() << '\n';
      return kExitFailure;
    }
    write_metrics_row(mos, m);
    if (!quiet) {
      char line[256];
      std::snprintf(line, sizeof(line),
                    "iter %d/%d  episodes %d  ep_len %.2f s  track %.4f  level %.2f  kl %.4f  lr %.1e  %.1f s\n",
                    m.iteration, total, m.episodes, m.mean_episode_s, m.episode_mean(kTrackingLinVel), m.mean_level,
                    m.update.kl, m.update.lr, m.elapsed_s);
      out << line << std::flush;
    }
    if (cfg.train.checkpoint_every > 0 && tr.iteration() % cfg.train.checkpoint_every == 0 && tr.iteration() < total)
      save(false);
  }
  save(true);
  return kExitOk;
}

int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_run_config(opt.config);
  } catch (const ConfigFileMissing& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: invalid config: " << e.what() << '\n';
    return kExitUsage;
  }
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.out) cfg.out_dir = opt.out->string();
  if (opt.iterations) cfg.train.iterations = *opt.iterations;
  try {
    return run_training(cfg, opt.resume, opt.quiet, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace zmlloco
