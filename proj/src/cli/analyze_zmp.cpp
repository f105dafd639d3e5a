#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "zmlloco/balance/zmp.hpp"
#include "zmlloco/cli/commands.hpp"

namespace zmlloco {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, int line, const std::string& column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw LogFormatError(line, "column " + column + " is not a number: '" + s + "'");
  }
}

}  // namespace

std::vector<ZmpTraceRow> analyze_zmp_log(std::istream& log) {
  std::vector<ZmpTraceRow> trace;
  std::map<std::string, std::size_t> col;
  std::size_t n_cols = 0;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  const std::vector<std::string> needed = {
      "time",    "contact_left", "contact_right", "mass",        "com_x",       "com_y",        "com_z",
      "dp_x",    "dp_y",         "dp_z",          "dl_x",        "dl_y",        "dl_z",         "sole_left_x",
      "sole_left_y", "sole_left_z", "sole_right_x", "sole_right_y", "sole_right_z", "force_left_x",
      "force_left_y", "force_left_z", "force_right_x", "force_right_y", "force_right_z"};
  while (std::getline(log, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv(line);
    if (!have_header) {
      for (std::size_t i = 0; i < fields.size(); ++i) col[fields[i]] = i;
      for (const auto& n : needed)
        if (!col.count(n)) throw LogFormatError(line_no, "header is missing column " + n);
      n_cols = fields.size();
      have_header = true;
      continue;
    }
    if (fields.size() != n_cols)
      throw LogFormatError(line_no, "expected " + std::to_string(n_cols) + " fields, found " +
                                        std::to_string(fields.size()));
    auto get = [&](const std::string& name) { return parse_number(fields[col.at(name)], line_no, name); };
    auto vec = [&](const std::string& prefix) { return Vec3(get(prefix + "_x"), get(prefix + "_y"), get(prefix + "_z")); };
    MomentumState m;
    m.mass = get("mass");
    m.com = vec("com");
    m.linear_rate = vec("dp");
    m.angular_rate = vec("dl");
    if (!(m.mass > 0.0)) throw LogFormatError(line_no, "mass must be positive");
    const BalanceSample b = evaluate_balance(m, vec("sole_left"), vec("sole_right"), vec("force_left"), vec("force_right"));
    ZmpTraceRow r;
    r.time = get("time");
    r.zmp_distance = b.distance;
    r.r_zmp = b.reward;
    r.contact_left = get("contact_left") != 0.0 ? 1 : 0;
    r.contact_right = get("contact_right") != 0.0 ? 1 : 0;
    trace.push_back(r);
  }
  return trace;
}

ZmpSummary summarize_zmp(const std::vector<ZmpTraceRow>& trace) {
  ZmpSummary s;
  s.steps = static_cast<int>(trace.size());
  double sum = 0.0;
  int below = 0;
  for (const auto& r : trace) {
    if (!std::isfinite(r.zmp_distance)) continue;
    ++s.supported_steps;
    sum += r.zmp_distance;
    s.max_distance = std::max(s.max_distance, r.zmp_distance);
    if (r.zmp_distance < kZmpScale) ++below;
  }
  if (s.supported_steps > 0) {
    s.mean_distance = sum / s.supported_steps;
    s.fraction_below = static_cast<double>(below) / s.supported_steps;
  }
  return s;
}

namespace {

void write_trace(std::ostream& os, const std::vector<ZmpTraceRow>& trace) {
  os << "time,zmp_distance,r_zmp,contact_left,contact_right\n";
  const auto old = os.precision(17);
  for (const auto& r : trace)
    os << r.time << ',' << r.zmp_distance << ',' << r.r_zmp << ',' << r.contact_left << ',' << r.contact_right
       << '\n';
  os.precision(old);
}

void write_summary(std::ostream& os, const ZmpSummary& s) {
  os << "key,value\n"
     << "steps," << s.steps << '\n'
     << "supported_steps," << s.supported_steps << '\n'
     << "max_distance," << s.max_distance << '\n'
     << "mean_distance," << s.mean_distance << '\n'
     << "fraction_below_0.05," << s.fraction_below << '\n';
}

}  // namespace

int cmd_analyze_zmp(const AnalyzeOptions& opt, std::ostream& out, std::ostream& err) {
  std::ifstream is(opt.log);
  if (!is) {
    err << "error: cannot read episode log " << opt.log.string() << '\n';
    return kExitUsage;
  }
  std::vector<ZmpTraceRow> trace;
  try {
    trace = analyze_zmp_log(is);
  } catch (const LogFormatError& e) {
    err << "error: " << opt.log.string() << ": " << e.what() << '\n';
    return kExitFailure;
  }
  const ZmpSummary summary = summarize_zmp(trace);
  if (opt.out) {
    std::ofstream os(*opt.out);
    write_trace(os, trace);
    std::filesystem::path spath = *opt.out;
    spath.replace_extension(".summary.csv");
    std::ofstream ss(spath);
    write_summary(ss, summary);
    if (!os || !ss) {
      err << "error: cannot write " << opt.out->string() << '\n';
      return kExitFailure;
    }
    write_summary(out, summary);
  } else {
    write_trace(out, trace);
    write_summary(err, summary);
  }
  return kExitOk;
}

}  // namespace zmlloco
