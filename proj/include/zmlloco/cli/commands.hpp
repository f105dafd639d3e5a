#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zmlloco/cli/run_config.hpp"

namespace zmlloco {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime or I/O failure
inline constexpr int kExitUsage = 2;    // missing or invalid config/arguments
inline constexpr int kExitRefused = 3;  // checkpoint does not match the model

struct DifficultyPreset {
  std::string name;
  double push = 0.0;         // m/s, horizontal push velocity bound
  double gradient = 0.0;
  double step_height = 0.0;  // m
};

// easy, medium or hard; throws ConfigError otherwise.
DifficultyPreset difficulty_preset(const std::string& name);

// Evaluation settings: fixed 0.5 m/s forward command with heading
// correction, no domain randomization or action noise, pushes (at the
// preset's magnitude) on flat terrain only.
EnvConfig eval_env_config(const EnvConfig& base, TerrainKind kind, double width, const DifficultyPreset& d);

struct EvalRow {
  TerrainKind kind = TerrainKind::narrow_flat;
  double width = 0.0;
  std::string difficulty;
  int episodes = 0;
  double success_rate = 0.0;
  double success_std = 0.0;  // binomial standard error
  double mxd_mean = 0.0;
  double mxd_std = 0.0;
};

inline constexpr int kEvalCsvVersion = 1;
std::vector<std::string> eval_csv_columns();
void write_eval_csv(std::ostream& os, const std::vector<EvalRow>& rows, const std::string& prefix_cols = {},
                    const std::vector<std::string>& prefix_values = {});

struct EvalRequest {
  std::vector<TerrainKind> kinds{TerrainKind::narrow_flat};
  std::vector<double> widths{0.25, 0.3, 0.35};
  std::string difficulty = "hard";
  int episodes = 100;
  std::uint64_t seed = 0;
  int log_episodes = 0;                // episode logs written per setting
  std::filesystem::path log_dir;
};

// Runs the requested grid for a policy. Episode i of a setting uses a seed
// derived from (seed, i), independent of the worker count.
std::vector<EvalRow> evaluate_policy(const LoadedPolicy& policy, std::shared_ptr<const RobotModel> model,
                                     const EnvConfig& base, const EvalRequest& req);

struct TrainOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> resume;  // checkpoint to continue from
  std::optional<int> iterations;
  bool quiet = false;
};

int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err);

// Trains `cfg` into cfg.out_dir: resolved_config.json, metrics.csv,
// checkpoints/iter_*.ckpt, latest.ckpt and level_success.csv.
int run_training(const RunConfig& cfg, const std::optional<std::filesystem::path>& resume, bool quiet,
                 std::ostream& out, std::ostream& err);

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> config;  // overrides the model taken from the checkpoint
  EvalRequest request;
  std::optional<std::filesystem::path> out;     // CSV path; stdout when absent
};

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err);

struct ZmpTraceRow {
  double time = 0.0;
  double zmp_distance = 0.0;  // NaN without support
  double r_zmp = 0.0;
  int contact_left = 0;
  int contact_right = 0;
};

struct ZmpSummary {
  int steps = 0;
  int supported_steps = 0;
  double max_distance = 0.0;   // over supported steps
  double mean_distance = 0.0;
  double fraction_below = 0.0; // distance < 0.05 m over supported steps
};

class LogFormatError : public std::runtime_error {
 public:
  LogFormatError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Recomputes the ZMP distance of every row from the logged momentum,
// CoM, sole and force columns. Throws LogFormatError with the line number.
std::vector<ZmpTraceRow> analyze_zmp_log(std::istream& log);
ZmpSummary summarize_zmp(const std::vector<ZmpTraceRow>& trace);

struct AnalyzeOptions {
  std::filesystem::path log;
  std::optional<std::filesystem::path> out;  // trace CSV; stdout when absent
};

int cmd_analyze_zmp(const AnalyzeOptions& opt, std::ostream& out, std::ostream& err);

enum class AblationKind { baseline, no_zmp, no_vectorization, action_noise, no_upper };

struct AblationVariant {
  AblationKind kind = AblationKind::baseline;
  double action_noise = 0.0;
  std::string name;
};

// baseline, no_zmp, no_vectorization, action_noise=<sigma>, no_upper.
AblationVariant parse_variant(const std::string& s);
RunConfig apply_variant(const RunConfig& base, const AblationVariant& v);

struct AblateOptions {
  std::filesystem::path config;
  std::vector<std::string> variants;
  std::vector<std::uint64_t> seeds;  // defaults to the config seed
  std::optional<std::filesystem::path> out;
  std::optional<int> iterations;
  EvalRequest eval;
};

int cmd_ablate(const AblateOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace zmlloco
