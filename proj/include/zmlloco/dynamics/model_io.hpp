#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "zmlloco/dynamics/robot_model.hpp"

namespace zmlloco {

nlohmann::json model_to_json(const RobotModel& model);
// Throws ModelError on malformed input, unknown keys, or a format_version
// other than RobotModel::kFormatVersion.
RobotModel model_from_json(const nlohmann::json& j);

RobotModel load_model(const std::filesystem::path& path);
void save_model(const RobotModel& model, const std::filesystem::path& path);

}  // namespace zmlloco
