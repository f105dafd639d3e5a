#include <fstream>
#include <iostream>

#include "zmlloco/cli/commands.hpp"

namespace zmlloco {

AblationVariant parse_variant(const std::string& s) {
  AblationVariant v;
  v.name = s;
  if (s == "baseline") {
    v.kind = AblationKind::baseline;
  } else if (s == "no_zmp") {
    v.kind = AblationKind::no_zmp;
  } else if (s == "no_vectorization") {
    v.kind = AblationKind::no_vectorization;
  } else if (s == "no_upper") {
    v.kind = AblationKind::no_upper;
  } else if (s.rfind("action_noise=", 0) == 0) {
    v.kind = AblationKind::action_noise;
    const std::string value = s.substr(13);
    try {
      std::size_t used = 0;
      v.action_noise = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ConfigError("action_noise variant needs a number, got '" + value + "'");
    }
    if (!(v.action_noise >= 0.0)) throw ConfigError("action_noise must be non-negative");
  } else {
    throw ConfigError("unknown ablation variant '" + s +
                      "' (expected baseline, no_zmp, no_vectorization, action_noise=<sigma>, no_upper)");
  }
  return v;
}

RunConfig apply_variant(const RunConfig& base, const AblationVariant& v) {
  RunConfig c = base;
  switch (v.kind) {
    case AblationKind::baseline: break;
    case AblationKind::no_zmp: c.env.rewards.weights[kZmp] = 0.0; break;
    case AblationKind::no_vectorization: c.train.vectorized = false; break;
    case AblationKind::action_noise: c.env.randomization.action_noise = v.action_noise; break;
    case AblationKind::no_upper: c.env.freeze_upper = true; break;
  }
  return c;
}

int cmd_ablate(const AblateOptions& opt, std::ostream& out, std::ostream& err) {
  RunConfig base;
  std::vector<AblationVariant> variants;
  try {
    base = load_run_config(opt.config);
    if (opt.variants.empty()) throw ConfigError("no variants given");
    for (const auto& s : opt.variants) variants.push_back(parse_variant(s));
    difficulty_preset(opt.eval.difficulty);
  } catch (const ConfigFileMissing& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (opt.iterations) base.train.iterations = *opt.iterations;
  const std::filesystem::path root = opt.out ? *opt.out : std::filesystem::path(base.out_dir);
  const std::vector<std::uint64_t> seeds = opt.seeds.empty() ? std::vector<std::uint64_t>{base.seed} : opt.seeds;

  std::vector<EvalRow> rows;
  std::vector<std::string> prefixes;
  try {
    for (const auto& v : variants) {
      for (std::uint64_t seed : seeds) {
        RunConfig c = apply_variant(base, v);
        c.seed = seed;
        c.out_dir = (root / v.name / ("seed_" + std::to_string(seed))).string();
        out << "training " << v.name << " seed " << seed << " -> " << c.out_dir << '\n' << std::flush;
        const int rc = run_training(c, std::nullopt, true, out, err);
        if (rc != kExitOk) return rc;
        const LoadedPolicy policy = load_policy(load_checkpoint(std::filesystem::path(c.out_dir) / "latest.ckpt"));
        EvalRequest req = opt.eval;
        req.seed = seed;
        if (req.log_episodes > 0) req.log_dir = std::filesystem::path(c.out_dir) / "episodes";
        for (const EvalRow& r : evaluate_policy(policy, load_run_model(c), c.env, req)) {
          rows.push_back(r);
          prefixes.push_back(v.name + "," + std::to_string(seed));
        }
      }
    }
    std::filesystem::create_directories(root);
    std::ofstream os(root / "ablation.csv");
    write_eval_csv(os, rows, "variant,seed", prefixes);
    if (!os) throw std::runtime_error("cannot write " + (root / "ablation.csv").string());
    write_eval_csv(out, rows, "variant,seed", prefixes);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace zmlloco
