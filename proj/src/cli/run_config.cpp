#include "zmlloco/cli/run_config.hpp"

#include <fstream>

#include "zmlloco/dynamics/model_io.hpp"

namespace zmlloco {

Json to_json(const RunConfig& c) {
  return Json{{"model", c.model ? Json(*c.model) : Json(nullptr)},
              {"env", to_json(c.env)},
              {"train", to_json(c.train)},
              {"seed", c.seed},
              {"out_dir", c.out_dir}};
}

RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  JsonReader r(j, "config");
  r.get("model", c.model);
  c.env = env_config_from_json(r.child("env"), r.path("env"));
  c.train = train_config_from_json(r.child("train"), r.path("train"));
  r.get("seed", c.seed);
  r.get("out_dir", c.out_dir);
  r.finish();
  if (c.model && !base_dir.empty() && std::filesystem::path(*c.model).is_relative())
    c.model = (base_dir / *c.model).lexically_normal().string();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigFileMissing("cannot read config file " + path.string());
  Json j;
  try {
    j = Json::parse(is);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

std::shared_ptr<const RobotModel> load_run_model(const RunConfig& c) {
  if (c.model) return std::make_shared<const RobotModel>(load_model(*c.model));
  return std::make_shared<const RobotModel>(make_default_biped());
}

}  // namespace zmlloco
