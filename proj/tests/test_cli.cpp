#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include <sys/wait.h>

#include "zmlloco/cli/commands.hpp"
#include "zmlloco/dynamics/model_io.hpp"

using namespace zmlloco;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("zmlloco_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Small plane-terrain run that finishes in seconds.
  fs::path write_config(int iterations = 3, const std::string& extra_model = {}) {
    RunConfig c;
    c.env.terrain.mode = "plane";
    c.train.num_envs = 4;
    c.train.horizon = 8;
    c.train.iterations = iterations;
    c.train.checkpoint_every = 2;
    c.train.workers = 2;
    c.train.network.actor_hidden = {16};
    c.train.network.critic_hidden = {16};
    c.train.ppo.epochs = 2;
    c.train.ppo.minibatches = 2;
    c.out_dir = (dir_ / "run").string();
    if (!extra_model.empty()) c.model = extra_model;
    const fs::path p = dir_ / "config.json";
    std::ofstream(p) << to_json(c).dump(2);
    return p;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

int run_tool(const std::string& args, std::string* output = nullptr) {
  const std::string out_file = (fs::temp_directory_path() / "zmlloco_cli_tool_out.txt").string();
  const int status = std::system((std::string(ZMLLOCO_TOOL) + " " + args + " >" + out_file + " 2>&1").c_str());
  if (output) {
    std::ifstream is(out_file);
    std::stringstream ss;
    ss << is.rdbuf();
    *output = ss.str();
  }
  fs::remove(out_file);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string zmp_log_header() {
  const auto cols = episode_log_columns();
  std::string h;
  for (std::size_t i = 0; i < cols.size(); ++i) h += (i ? "," : "") + cols[i];
  return h;
}

// One log row with the given momentum quantities; unrelated columns are 0.
std::string zmp_log_row(double time, double mass, const Vec3& com, const Vec3& dp, const Vec3& dl, const Vec3& sl,
                        const Vec3& sr, const Vec3& fl, const Vec3& fr) {
  std::map<std::string, double> v{{"time", time}, {"mass", mass}, {"contact_left", fl.z() > 0},
                                  {"contact_right", fr.z() > 0}};
  const std::pair<const char*, Vec3> groups[] = {{"com", com}, {"dp", dp}, {"dl", dl}, {"sole_left", sl},
                                                 {"sole_right", sr}, {"force_left", fl}, {"force_right", fr}};
  for (const auto& [g, x] : groups) {
    v[std::string(g) + "_x"] = x.x();
    v[std::string(g) + "_y"] = x.y();
    v[std::string(g) + "_z"] = x.z();
  }
  std::ostringstream os;
  os.precision(17);
  const auto cols = episode_log_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << (v.count(cols[i]) ? v[cols[i]] : 0.0);
  return os.str();
}

}  // namespace

TEST_F(CliTest, MissingConfigExitsWithUsageCode) {
  std::string out;
  EXPECT_EQ(run_tool("train --config " + (dir_ / "absent.json").string(), &out), kExitUsage);
  EXPECT_NE(out.find((dir_ / "absent.json").string()), std::string::npos);
  std::ostringstream o, e;
  TrainOptions opt;
  opt.config = dir_ / "absent.json";
  EXPECT_EQ(cmd_train(opt, o, e), kExitUsage);
  EXPECT_NE(e.str().find("absent.json"), std::string::npos);
}

TEST_F(CliTest, UnknownConfigKeyIsRejected) {
  std::ofstream(dir_ / "bad.json") << R"({"seed": 1, "colour": "red"})";
  std::ostringstream o, e;
  TrainOptions opt;
  opt.config = dir_ / "bad.json";
  EXPECT_EQ(cmd_train(opt, o, e), kExitUsage);
  EXPECT_NE(e.str().find("colour"), std::string::npos);
  EXPECT_EQ(run_tool("frobnicate"), kExitUsage);
}

TEST_F(CliTest, ResolvedConfigFillsDefaults) {
  std::ofstream(dir_ / "min.json") << R"({"seed": 4, "out_dir": ")" + (dir_ / "min").string() + R"("})";
  const RunConfig c = load_run_config(dir_ / "min.json");
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.train.horizon, 24);
  EXPECT_EQ(c.env.rewards.weights, RewardConfig{}.weights);
  EXPECT_EQ(to_json(run_config_from_json(to_json(c))), to_json(c));
}

TEST_F(CliTest, SameSeedGivesIdenticalMetrics) {
  const fs::path cfg = write_config();
  std::ostringstream o, e;
  TrainOptions opt;
  opt.config = cfg;
  opt.seed = 7;
  opt.quiet = true;
  opt.out = dir_ / "a";
  ASSERT_EQ(cmd_train(opt, o, e), kExitOk) << e.str();
  opt.out = dir_ / "b";
  ASSERT_EQ(cmd_train(opt, o, e), kExitOk) << e.str();
  const std::string a = slurp(dir_ / "a" / "metrics.csv");
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 4);
  EXPECT_EQ(a, slurp(dir_ / "b" / "metrics.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "resolved_config.json"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "latest.ckpt"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "checkpoints" / "iter_000002.ckpt"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "level_success.csv"));
  const RunConfig resolved = load_run_config(dir_ / "a" / "resolved_config.json");
  EXPECT_EQ(resolved.seed, 7u);
}

TEST_F(CliTest, ResumeContinuesIterationCount) {
  const fs::path cfg = write_config(4);
  std::ostringstream o, e;
  TrainOptions opt;
  opt.config = cfg;
  opt.quiet = true;
  opt.iterations = 2;
  ASSERT_EQ(cmd_train(opt, o, e), kExitOk) << e.str();
  opt.iterations.reset();
  opt.resume = dir_ / "run" / "latest.ckpt";
  ASSERT_EQ(cmd_train(opt, o, e), kExitOk) << e.str();
  std::istringstream is(slurp(dir_ / "run" / "metrics.csv"));
  std::string line;
  std::getline(is, line);
  int expect = 1;
  while (std::getline(is, line)) EXPECT_EQ(std::stoi(line.substr(0, line.find(','))), expect++);
  EXPECT_EQ(expect, 5);
}

TEST_F(CliTest, EvalSchemaAndHashRefusal) {
  const fs::path cfg = write_config(1);
  std::ostringstream o, e;
  TrainOptions topt;
  topt.config = cfg;
  topt.quiet = true;
  ASSERT_EQ(cmd_train(topt, o, e), kExitOk) << e.str();

  EvalOptions opt;
  opt.checkpoint = dir_ / "run" / "latest.ckpt";
  opt.request.widths = {0.25, 0.35};
  opt.request.episodes = 3;
  opt.request.difficulty = "hard";
  opt.out = dir_ / "eval.csv";
  ASSERT_EQ(cmd_eval(opt, o, e), kExitOk) << e.str();
  std::istringstream is(slurp(dir_ / "eval.csv"));
  std::string header, line;
  std::getline(is, header);
  EXPECT_EQ(header, "format_version,terrain,width,difficulty,episodes,success_rate,success_std,mxd_mean,mxd_std");
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    EXPECT_EQ(line.rfind("1,narrow_flat,", 0), 0u);
  }
  EXPECT_EQ(rows, 2);

  RobotModel other = make_default_biped();
  other.links[1].mass *= 1.1;
  save_model(other, dir_ / "other_model.json");
  write_config(1, (dir_ / "other_model.json").string());
  opt.config = dir_ / "config.json";
  std::ostringstream e2;
  EXPECT_EQ(cmd_eval(opt, o, e2), kExitRefused);
  EXPECT_NE(e2.str().find("different robot model"), std::string::npos);

  opt.config.reset();
  opt.checkpoint = dir_ / "missing.ckpt";
  EXPECT_EQ(cmd_eval(opt, o, e), kExitUsage);
}

TEST_F(CliTest, EvalIsDeterministicAcrossWorkerCounts) {
  const fs::path cfg = write_config(1);
  std::ostringstream o, e;
  TrainOptions topt;
  topt.config = cfg;
  topt.quiet = true;
  ASSERT_EQ(cmd_train(topt, o, e), kExitOk);
  const LoadedPolicy p = load_policy(load_checkpoint(dir_ / "run" / "latest.ckpt"));
  const RunConfig rc = run_config_from_json(p.run_config);
  EvalRequest req;
  req.widths = {0.3};
  req.episodes = 4;
  req.seed = 11;
  const auto model = load_run_model(rc);
  setenv("ZMLLOCO_THREADS", "1", 1);
  const auto a = evaluate_policy(p, model, rc.env, req);
  setenv("ZMLLOCO_THREADS", "3", 1);
  const auto b = evaluate_policy(p, model, rc.env, req);
  unsetenv("ZMLLOCO_THREADS");
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].mxd_mean, b[0].mxd_mean);
  EXPECT_EQ(a[0].success_rate, b[0].success_rate);
}

TEST(Difficulty, Presets) {
  EXPECT_EQ(difficulty_preset("hard").push, 0.6);
  EXPECT_EQ(difficulty_preset("hard").gradient, 0.2);
  EXPECT_EQ(difficulty_preset("hard").step_height, 0.08);
  EXPECT_EQ(difficulty_preset("easy").push, 0.2);
  EXPECT_EQ(difficulty_preset("medium").step_height, 0.06);
  EXPECT_THROW(difficulty_preset("brutal"), ConfigError);
  const EnvConfig c = eval_env_config(EnvConfig{}, TerrainKind::narrow_stairs, 0.3, difficulty_preset("hard"));
  EXPECT_FALSE(c.randomization.push);
  EXPECT_EQ(c.randomization.action_noise, 0.0);
  EXPECT_EQ(*c.command.fixed_vx, 0.5);
  EXPECT_EQ(c.terrain.width, 0.3);
  EXPECT_TRUE(eval_env_config(EnvConfig{}, TerrainKind::narrow_flat, 0.3, difficulty_preset("hard")).randomization.push);
}

TEST(AnalyzeZmp, StaticStanceIsConstantOffset) {
  std::stringstream log;
  log << "# seed=1\n" << zmp_log_header() << '\n';
  const double M = 45.0, g = kGravity;
  const Vec3 com(0.03, 0.01, 0.8);
  const Vec3 sl(0.0, 0.1, 0.0), sr(0.0, -0.1, 0.0);
  for (int i = 0; i < 200; ++i)
    log << zmp_log_row(0.02 * i, M, com, Vec3::Zero(), Vec3::Zero(), sl, sr, Vec3(0, 0, M * g / 2),
                       Vec3(0, 0, M * g / 2))
        << '\n';
  const auto trace = analyze_zmp_log(log);
  ASSERT_EQ(trace.size(), 200u);
  const double expect = std::hypot(0.03, 0.01);
  for (const auto& r : trace) {
    EXPECT_NEAR(r.zmp_distance, expect, 1e-6);
    EXPECT_NEAR(r.r_zmp, std::exp(-expect / kZmpScale), 1e-6);
    EXPECT_EQ(r.contact_left, 1);
  }
  const ZmpSummary s = summarize_zmp(trace);
  EXPECT_EQ(s.steps, 200);
  EXPECT_NEAR(s.max_distance, expect, 1e-6);
  EXPECT_EQ(s.fraction_below, 1.0);
}

TEST(AnalyzeZmp, EmptyLogGivesEmptyTrace) {
  std::stringstream empty;
  EXPECT_TRUE(analyze_zmp_log(empty).empty());
  std::stringstream header_only(zmp_log_header() + "\n");
  EXPECT_TRUE(analyze_zmp_log(header_only).empty());
  const ZmpSummary s = summarize_zmp({});
  EXPECT_EQ(s.steps, 0);
  EXPECT_EQ(s.max_distance, 0.0);
  const fs::path p = fs::temp_directory_path() / "zmlloco_empty_log.csv";
  std::ofstream(p).close();
  std::ostringstream o, e;
  AnalyzeOptions opt;
  opt.log = p;
  EXPECT_EQ(cmd_analyze_zmp(opt, o, e), kExitOk);
  EXPECT_EQ(o.str(), "time,zmp_distance,r_zmp,contact_left,contact_right\n");
  fs::remove(p);
}

TEST(AnalyzeZmp, MalformedRowReportsLineNumber) {
  std::stringstream log;
  log << "# seed=1\n" << zmp_log_header() << '\n';
  log << zmp_log_row(0.0, 45, Vec3(0, 0, 0.8), Vec3::Zero(), Vec3::Zero(), Vec3(0, 0.1, 0), Vec3(0, -0.1, 0),
                     Vec3(0, 0, 200), Vec3(0, 0, 200))
      << '\n';
  log << "0.02,1,2\n";
  try {
    analyze_zmp_log(log);
    FAIL() << "expected LogFormatError";
  } catch (const LogFormatError& e) {
    EXPECT_EQ(e.line(), 4);
  }
  std::stringstream bad_number;
  bad_number << zmp_log_header() << '\n'
             << std::regex_replace(zmp_log_row(0.0, 45, Vec3(0, 0, 0.8), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(),
                                               Vec3::Zero(), Vec3(0, 0, 1), Vec3(0, 0, 1)),
                                   std::regex("^[^,]*"), "abc")
             << '\n';
  EXPECT_THROW(analyze_zmp_log(bad_number), LogFormatError);
}

TEST(AnalyzeZmp, MatchesLoggedDistanceOnSimulatedEpisode) {
  auto model = std::make_shared<const RobotModel>(make_default_biped());
  EnvConfig c;
  c.terrain.mode = "narrow_flat";
  c.randomization = RandomizationConfig::none();
  LocomotionEnv env(model, c);
  std::stringstream log;
  EpisodeLogger logger(log);
  env.set_logger(&logger);
  env.reset(2, 8);
  for (int k = 0; k < 60; ++k)
    if (env.step(VecX::Zero(env.n_act())).done) break;
  const std::string text = log.str();
  std::stringstream copy(text);
  const auto trace = analyze_zmp_log(copy);
  ASSERT_FALSE(trace.empty());
  // Recomputed distances agree with the values the environment logged.
  std::istringstream is(text);
  std::string line;
  const auto cols = episode_log_columns();
  const std::size_t dcol = static_cast<std::size_t>(std::find(cols.begin(), cols.end(), "zmp_distance") - cols.begin());
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("time,", 0) == 0) continue;
    std::istringstream fs_(line);
    std::string f;
    for (std::size_t i = 0; i <= dcol; ++i) std::getline(fs_, f, ',');
    const double logged = std::stod(f);
    if (std::isnan(logged))
      EXPECT_TRUE(std::isnan(trace[row].zmp_distance));
    else
      EXPECT_NEAR(trace[row].zmp_distance, logged, 1e-9);
    ++row;
  }
  EXPECT_EQ(row, trace.size());
}

TEST(Ablation, VariantParsing) {
  EXPECT_EQ(parse_variant("no_zmp").kind, AblationKind::no_zmp);
  EXPECT_EQ(parse_variant("no_vectorization").kind, AblationKind::no_vectorization);
  EXPECT_EQ(parse_variant("no_upper").kind, AblationKind::no_upper);
  const AblationVariant n = parse_variant("action_noise=0.15");
  EXPECT_EQ(n.kind, AblationKind::action_noise);
  EXPECT_EQ(n.action_noise, 0.15);
  EXPECT_THROW(parse_variant("no_arms"), ConfigError);
  EXPECT_THROW(parse_variant("action_noise=lots"), ConfigError);
  EXPECT_THROW(parse_variant("action_noise=-1"), ConfigError);
}

TEST(Ablation, VariantsChangeOnlyTheirSetting) {
  const RunConfig base;
  const RunConfig z = apply_variant(base, parse_variant("no_zmp"));
  EXPECT_EQ(z.env.rewards.weights[kZmp], 0.0);
  for (int k = 0; k < kNumRewardTerms; ++k)
    if (k != kZmp) EXPECT_EQ(z.env.rewards.weights[k], base.env.rewards.weights[k]);
  EXPECT_FALSE(apply_variant(base, parse_variant("no_vectorization")).train.vectorized);
  EXPECT_EQ(apply_variant(base, parse_variant("action_noise=0")).env.randomization.action_noise, 0.0);
  EXPECT_TRUE(apply_variant(base, parse_variant("no_upper")).env.freeze_upper);
}

TEST(Ablation, NoUpperShrinksActionSpace) {
  auto model = std::make_shared<const RobotModel>(make_default_biped());
  EnvConfig c;
  c.terrain.mode = "plane";
  c.freeze_upper = true;
  LocomotionEnv env(model, c);
  EXPECT_EQ(env.n_act(), 12);
  for (int j : env.action_joints()) EXPECT_FALSE(model->joints[static_cast<std::size_t>(j)].upper_body);
  env.step(VecX::Zero(env.n_act()));
  EXPECT_EQ(action_mirror(*model, env.action_joints()).size(), 12);
}

TEST(Ablation, UnknownVariantIsUsageError) {
  std::ostringstream o, e;
  AblateOptions opt;
  opt.config = fs::temp_directory_path() / "zmlloco_no_such_config.json";
  opt.variants = {"no_zmp"};
  EXPECT_EQ(cmd_ablate(opt, o, e), kExitUsage);
  const fs::path p = fs::temp_directory_path() / "zmlloco_ablate_cfg.json";
  std::ofstream(p) << "{}";
  opt.config = p;
  opt.variants = {"no_brain"};
  EXPECT_EQ(cmd_ablate(opt, o, e), kExitUsage);
  EXPECT_NE(e.str().find("no_brain"), std::string::npos);
  fs::remove(p);
}
