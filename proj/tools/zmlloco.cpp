#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "zmlloco/cli/commands.hpp"

using namespace zmlloco;

namespace {

std::vector<double> parse_widths(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double w = std::stod(item, &used);
    if (used != item.size() || !(w > 0.0)) throw ConfigError("invalid width '" + item + "'");
    out.push_back(w);
  }
  if (out.empty()) throw ConfigError("no widths given");
  return out;
}

std::vector<TerrainKind> parse_kinds(const std::string& s) {
  std::vector<TerrainKind> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(terrain_kind_from_string(item));
  if (out.empty()) throw ConfigError("no terrain given");
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic-balance humanoid locomotion: training, evaluation and balance analysis"};
  app.require_subcommand(1);

  std::string config, checkpoint, out, terrain = "narrow_flat", widths = "0.25,0.3,0.35", difficulty = "hard",
                                        variants, seeds, log_path;
  std::uint64_t seed = 0;
  int episodes = 100, iterations = -1, log_episodes = 0;
  bool quiet = false;

  auto* train = app.add_subcommand("train", "Train a policy");
  train->add_option("--config", config, "Run config (JSON)")->required();
  auto* train_seed = train->add_option("--seed", seed, "Override the config seed");
  auto* train_out = train->add_option("--out", out, "Output directory");
  auto* train_ckpt = train->add_option("--checkpoint", checkpoint, "Resume from this checkpoint");
  auto* train_iters = train->add_option("--iterations", iterations, "Override the iteration count");
  train->add_flag("--quiet", quiet, "Suppress per-iteration summaries");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on narrow terrains");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  auto* eval_config = eval->add_option("--config", config, "Run config providing the robot model");
  eval->add_option("--terrain", terrain, "Comma-separated terrain kinds");
  eval->add_option("--widths", widths, "Comma-separated path widths (m)");
  eval->add_option("--difficulty", difficulty, "easy, medium or hard");
  eval->add_option("--episodes", episodes, "Episodes per setting");
  eval->add_option("--seed", seed, "Evaluation seed");
  auto* eval_out = eval->add_option("--out", out, "Results CSV (default: stdout)");
  eval->add_option("--log-episodes", log_episodes, "Write per-step logs for the first N episodes per setting");
  eval->add_option("--log-dir", log_path, "Directory for episode logs");

  auto* analyze = app.add_subcommand("analyze-zmp", "ZMP-distance trace of an episode log");
  analyze->add_option("log", log_path, "Episode log CSV")->required();
  auto* analyze_out = analyze->add_option("--out", out, "Trace CSV (default: stdout)");

  auto* ablate = app.add_subcommand("ablate", "Train and evaluate ablation variants");
  ablate->add_option("--config", config, "Run config (JSON)")->required();
  ablate->add_option("--variants", variants, "Comma-separated variants")->required();
  auto* ablate_seed = ablate->add_option("--seed", seed, "Single seed");
  ablate->add_option("--seeds", seeds, "Comma-separated seeds shared by all variants");
  auto* ablate_out = ablate->add_option("--out", out, "Output directory");
  auto* ablate_iters = ablate->add_option("--iterations", iterations, "Override the iteration count");
  ablate->add_option("--terrain", terrain, "Comma-separated terrain kinds for evaluation");
  ablate->add_option("--widths", widths, "Comma-separated path widths (m)");
  ablate->add_option("--difficulty", difficulty, "easy, medium or hard");
  ablate->add_option("--episodes", episodes, "Evaluation episodes per setting");
  ablate->add_option("--log-episodes", log_episodes, "Episode logs per setting");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) {
      TrainOptions o;
      o.config = config;
      if (*train_seed) o.seed = seed;
      if (*train_out) o.out = out;
      if (*train_ckpt) o.resume = checkpoint;
      if (*train_iters) o.iterations = iterations;
      o.quiet = quiet;
      return cmd_train(o, std::cout, std::cerr);
    }
    EvalRequest req;
    req.kinds = parse_kinds(terrain);
    req.widths = parse_widths(widths);
    req.difficulty = difficulty;
    req.episodes = episodes;
    req.seed = seed;
    req.log_episodes = log_episodes;
    if (*eval) {
      EvalOptions o;
      o.checkpoint = checkpoint;
      if (*eval_config) o.config = config;
      req.log_dir = log_path.empty() ? std::filesystem::path("episodes") : std::filesystem::path(log_path);
      o.request = req;
      if (*eval_out) o.out = out;
      return cmd_eval(o, std::cout, std::cerr);
    }
    if (*analyze) {
      AnalyzeOptions o;
      o.log = log_path;
      if (*analyze_out) o.out = out;
      return cmd_analyze_zmp(o, std::cout, std::cerr);
    }
    if (*ablate) {
      AblateOptions o;
      o.config = config;
      o.variants = split(variants);
      for (const auto& s : split(seeds)) o.seeds.push_back(std::stoull(s));
      if (o.seeds.empty() && *ablate_seed) o.seeds.push_back(seed);
      if (*ablate_out) o.out = out;
      if (*ablate_iters) o.iterations = iterations;
      o.eval = req;
      return cmd_ablate(o, std::cout, std::cerr);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
