#include "zmlloco/dynamics/model_io.hpp"

#include <fstream>
#include <set>

namespace zmlloco {

using nlohmann::json;

namespace {

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 to_vec(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ModelError(std::string(what) + " must be a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ModelError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ModelError("unknown key '" + it.key() + "' in " + where);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

json model_to_json(const RobotModel& m) {
  json j;
  j["format_version"] = RobotModel::kFormatVersion;
  j["name"] = m.name;
  j["floating_base"] = m.floating_base;
  for (const Link& l : m.links) {
    json jl;
    jl["name"] = l.name;
    jl["mass"] = l.mass;
    jl["com"] = vec(l.com);
    jl["inertia"] = json::array();
    for (int r = 0; r < 3; ++r) jl["inertia"].push_back(vec(l.inertia.row(r).transpose()));
    if (l.collision_probe) jl["probe_point"] = vec(l.probe_point);
    j["links"].push_back(jl);
  }
  for (const Joint& jt : m.joints) {
    json jj;
    jj["name"] = jt.name;
    jj["parent"] = jt.parent;
    jj["origin"] = vec(jt.origin);
    jj["axis"] = vec(jt.axis);
    jj["limits"] = {jt.lower, jt.upper};
    jj["velocity_limit"] = jt.velocity_limit;
    jj["torque_limit"] = jt.torque_limit;
    jj["kp"] = jt.kp;
    jj["kd"] = jt.kd;
    jj["armature"] = jt.armature;
    jj["default"] = jt.default_position;
    jj["upper_body"] = jt.upper_body;
    j["joints"].push_back(jj);
  }
  for (const FootDescriptor& f : m.feet) {
    json jf;
    jf["link"] = f.link;
    jf["sole_center"] = vec(f.sole_center);
    for (const Vec3& p : f.sole_points) jf["sole_points"].push_back(vec(p));
    j["feet"].push_back(jf);
  }
  j["symmetry"]["joint_pair"] = m.symmetry.joint_pair;
  j["symmetry"]["joint_sign"] = m.symmetry.joint_sign;
  return j;
}

RobotModel model_from_json(const json& j) {
  try {
    check_keys(j, {"format_version", "name", "floating_base", "links", "joints", "feet", "symmetry"},
               "model");
    if (!j.contains("format_version") || j["format_version"].get<int>() != RobotModel::kFormatVersion)
      throw ModelError("unsupported or missing format_version");
    RobotModel m;
    m.name = get_or<std::string>(j, "name", "robot");
    m.floating_base = get_or<bool>(j, "floating_base", true);
    for (const json& jl : j.at("links")) {
      check_keys(jl, {"name", "mass", "com", "inertia", "probe_point"}, "link");
      Link l;
      l.name = jl.at("name").get<std::string>();
      l.mass = jl.at("mass").get<double>();
      l.com = to_vec(jl.at("com"), "com");
      const json& I = jl.at("inertia");
      if (!I.is_array() || I.size() != 3) throw ModelError("inertia must be 3x3");
      for (int r = 0; r < 3; ++r) l.inertia.row(r) = to_vec(I[r], "inertia row").transpose();
      if (jl.contains("probe_point")) {
        l.collision_probe = true;
        l.probe_point = to_vec(jl["probe_point"], "probe_point");
      }
      m.links.push_back(l);
    }
    for (const json& jj : j.at("joints")) {
      check_keys(jj, {"name", "parent", "origin", "axis", "limits", "velocity_limit", "torque_limit",
                      "kp", "kd", "armature", "default", "upper_body"},
                 "joint");
      Joint jt;
      jt.name = jj.at("name").get<std::string>();
      jt.parent = jj.at("parent").get<int>();
      jt.origin = to_vec(jj.at("origin"), "origin");
      jt.axis = to_vec(jj.at("axis"), "axis");
      const auto lim = jj.at("limits").get<std::vector<double>>();
      if (lim.size() != 2) throw ModelError("limits must be [lower, upper]");
      jt.lower = lim[0];
      jt.upper = lim[1];
      jt.velocity_limit = jj.at("velocity_limit").get<double>();
      jt.torque_limit = jj.at("torque_limit").get<double>();
      jt.kp = jj.at("kp").get<double>();
      jt.kd = jj.at("kd").get<double>();
      jt.armature = get_or<double>(jj, "armature", 0.0);
      jt.default_position = get_or<double>(jj, "default", 0.0);
      jt.upper_body = get_or<bool>(jj, "upper_body", false);
      m.joints.push_back(jt);
    }
    const json& feet = j.at("feet");
    if (!feet.is_array() || feet.size() != 2) throw ModelError("exactly 2 feet are required");
    for (int i = 0; i < 2; ++i) {
      check_keys(feet[i], {"link", "sole_center", "sole_points"}, "foot");
      m.feet[i].link = feet[i].at("link").get<int>();
      m.feet[i].sole_center = to_vec(feet[i].at("sole_center"), "sole_center");
      for (const json& p : feet[i].at("sole_points"))
        m.feet[i].sole_points.push_back(to_vec(p, "sole point"));
    }
    check_keys(j.at("symmetry"), {"joint_pair", "joint_sign"}, "symmetry");
    m.symmetry.joint_pair = j["symmetry"].at("joint_pair").get<std::vector<int>>();
    m.symmetry.joint_sign = j["symmetry"].at("joint_sign").get<std::vector<double>>();
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed model: ") + e.what());
  }
}

RobotModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ModelError("cannot parse model file " + path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

void save_model(const RobotModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write model file " + path.string());
  out << model_to_json(model).dump(2) << '\n';
}

std::uint64_t RobotModel::hash() const {
  const std::string s = model_to_json(*this).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace zmlloco
