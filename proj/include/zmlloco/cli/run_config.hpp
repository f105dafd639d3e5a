#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "zmlloco/dynamics/robot_model.hpp"
#include "zmlloco/env/env_config.hpp"
#include "zmlloco/learn/trainer.hpp"

namespace zmlloco {

class ConfigFileMissing : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything a run needs. `model` is a robot model file; when absent the
// built-in biped is used.
struct RunConfig {
  std::optional<std::string> model;
  EnvConfig env;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::string out_dir = "runs/default";
};

Json to_json(const RunConfig& c);
// Relative model paths are resolved against `base_dir`.
RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir = {});
// Throws ConfigFileMissing when the file cannot be read and ConfigError on
// malformed content.
RunConfig load_run_config(const std::filesystem::path& path);

std::shared_ptr<const RobotModel> load_run_model(const RunConfig& c);

}  // namespace zmlloco
