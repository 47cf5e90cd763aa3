#pragma once

// JSON configuration, result records and fixed-format CSV.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "risel/errors.hpp"
#include "risel/metrics.hpp"
#include "risel/orchestrator.hpp"
#include "risel/scenario.hpp"

namespace risel {

using json = nlohmann::json;

/// Everything a CLI run needs besides its flags.
struct ExperimentConfig {
  SystemConfig system;
  std::vector<TaskModel> tasks;
  double rho = 1.0;
  SweepSpec sweep;
  std::vector<std::size_t> scaling_m{32, 64, 128, 256};
  std::string scaling_task = "svm";
  std::size_t trials = 10;
};

// ---------------------------------------------------------------------------
// Numbers

/// 12 significant digits, '.' separator; inf/nan spelled out.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

namespace detail {

inline json number_to_json(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

inline double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw config_error("expected a number, got " + j.dump());
}

inline json vec_to_json(const rvec& v) {
  json a = json::array();
  for (double x : v) a.push_back(number_to_json(x));
  return a;
}

inline rvec vec_from_json(const json& j) {
  if (!j.is_array()) throw config_error("expected an array of numbers");
  rvec v;
  for (const auto& x : j) v.push_back(number_from_json(x));
  return v;
}

inline json cvec_to_json(const cvec& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back({x.real(), x.imag()});
  return a;
}

inline cvec cvec_from_json(const json& j) {
  if (!j.is_array()) throw config_error("expected an array of [re, im] pairs");
  cvec v;
  for (const auto& x : j) {
    if (!x.is_array() || x.size() != 2) throw config_error("complex entries must be [re, im]");
    v.emplace_back(x[0].get<double>(), x[1].get<double>());
  }
  return v;
}

/// Scalar or per-user list.
inline rvec distances(const json& j, std::size_t k, const char* field) {
  if (j.is_number()) return rvec(k, j.get<double>());
  if (j.is_array()) {
    rvec v = vec_from_json(j);
    if (v.size() != k) throw config_error(std::string(field) + " must have K entries");
    return v;
  }
  throw config_error(std::string(field) + " must be a number or a list");
}

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw config_error("unknown field '" + key + "' in " + where);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Config

inline TaskModel task_from_json(const json& j) {
  if (j.is_string()) return task_preset(j.get<std::string>());
  if (!j.is_object()) throw config_error("task entries must be a preset name or an object");
  detail::reject_unknown(j, {"name", "c", "d", "D"}, "task");
  TaskModel t;
  t.name = detail::get_or<std::string>(j, "name", "custom");
  if (!j.contains("c") || !j.contains("d") || !j.contains("D"))
    throw config_error("task '" + t.name + "' needs c, d and D");
  t.c = detail::get_or<double>(j, "c", 0.0);
  t.d = detail::get_or<double>(j, "d", 0.0);
  t.D = detail::get_or<double>(j, "D", 0.0);
  t.validate();
  return t;
}

inline json task_to_json(const TaskModel& t) { return {{"name", t.name}, {"c", t.c}, {"d", t.d}, {"D", t.D}}; }

/// Noise power is given as "sigma2_dbm"; everything else is in SI units.
inline ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw config_error("configuration must be a JSON object");
  detail::reject_unknown(j,
                         {"K", "N", "M", "B", "T", "P", "sigma2_dbm", "beta", "pathloss_direct_exp",
                          "pathloss_ris_exp", "dist_user_bs", "dist_user_ris", "dist_ris_bs", "seed", "tasks", "rho",
                          "trials", "sweep", "scaling"},
                         "configuration");
  ExperimentConfig out;
  SystemConfig& s = out.system;
  s.K = detail::get_or<std::size_t>(j, "K", s.K);
  s.N = detail::get_or<std::size_t>(j, "N", s.N);
  s.M = detail::get_or<std::size_t>(j, "M", s.M);
  s.B = detail::get_or<double>(j, "B", s.B);
  s.T = detail::get_or<double>(j, "T", s.T);
  s.P = detail::get_or<double>(j, "P", s.P);
  s.sigma2 = dbm_to_watt(detail::get_or<double>(j, "sigma2_dbm", watt_to_dbm(s.sigma2)));
  s.beta = detail::get_or<double>(j, "beta", s.beta);
  s.pathloss_direct_exp = detail::get_or<double>(j, "pathloss_direct_exp", s.pathloss_direct_exp);
  s.pathloss_ris_exp = detail::get_or<double>(j, "pathloss_ris_exp", s.pathloss_ris_exp);
  s.dist_user_bs = detail::distances(j.value("dist_user_bs", json(100.0)), s.K, "dist_user_bs");
  s.dist_user_ris = detail::distances(j.value("dist_user_ris", json(20.0)), s.K, "dist_user_ris");
  s.dist_ris_bs = detail::get_or<double>(j, "dist_ris_bs", s.dist_ris_bs);
  s.seed = detail::get_or<std::uint64_t>(j, "seed", s.seed);
  out.rho = detail::get_or<double>(j, "rho", out.rho);
  out.trials = detail::get_or<std::size_t>(j, "trials", out.trials);
  if (!(out.rho > 0.0)) throw config_error("rho must be positive");

  if (j.contains("tasks")) {
    if (!j["tasks"].is_array()) throw config_error("tasks must be a list");
    for (const auto& t : j["tasks"]) out.tasks.push_back(task_from_json(t));
  } else {
    out.tasks = default_tasks();
    out.tasks.resize(std::min(out.tasks.size(), s.K));
  }
  if (out.tasks.size() != s.K) throw config_error("need exactly one task per user (K entries)");

  if (j.contains("sweep")) {
    const json& sw = j["sweep"];
    detail::reject_unknown(sw, {"variable", "values"}, "sweep");
    out.sweep.variable = detail::get_or<std::string>(sw, "variable", "");
    out.sweep.values = detail::get_or<std::vector<std::size_t>>(sw, "values", {});
    if (out.sweep.variable != "M" && out.sweep.variable != "N") throw config_error("sweep.variable must be M or N");
    if (out.sweep.values.empty()) throw config_error("sweep.values must not be empty");
    for (auto v : out.sweep.values)
      if (v < 1) throw config_error("sweep.values must be >= 1");
  }
  if (j.contains("scaling")) {
    const json& sc = j["scaling"];
    detail::reject_unknown(sc, {"M_list", "task"}, "scaling");
    out.scaling_m = detail::get_or<std::vector<std::size_t>>(sc, "M_list", out.scaling_m);
    out.scaling_task = detail::get_or<std::string>(sc, "task", out.scaling_task);
    task_preset(out.scaling_task);
  }
  s.validate();
  return out;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw config_error("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Results

inline json state_to_json(const AllocationState& s) {
  json w = json::array();
  for (const auto& wk : s.w) w.push_back(detail::cvec_to_json(wk));
  return {{"p", detail::vec_to_json(s.p)},
          {"w", w},
          {"theta", detail::cvec_to_json(s.theta.values())},
          {"objective", detail::number_to_json(s.objective)},
          {"per_task_error", detail::vec_to_json(s.per_task_error)},
          {"per_task_rate", detail::vec_to_json(s.per_task_rate)}};
}

inline AllocationState state_from_json(const json& j) {
  AllocationState s;
  s.p = detail::vec_from_json(j.at("p"));
  for (const auto& wk : j.at("w")) s.w.push_back(detail::cvec_from_json(wk));
  s.theta = PhaseVector(detail::cvec_from_json(j.at("theta")));
  s.objective = detail::number_from_json(j.at("objective"));
  s.per_task_error = detail::vec_from_json(j.at("per_task_error"));
  s.per_task_rate = detail::vec_from_json(j.at("per_task_rate"));
  return s;
}

/// Single-instance solve as written by `optimize`.
struct OptimizeRecord {
  std::string scheme;
  std::uint64_t seed = 0;
  AllocationState state;
  rvec trace;
  int outer_iterations = 0;
  bool converged = false;

  bool operator==(const OptimizeRecord&) const = default;
};

inline json record_to_json(const OptimizeRecord& r) {
  return {{"scheme", r.scheme},
          {"seed", r.seed},
          {"state", state_to_json(r.state)},
          {"trace", detail::vec_to_json(r.trace)},
          {"outer_iterations", r.outer_iterations},
          {"converged", r.converged}};
}

inline OptimizeRecord record_from_json(const json& j) {
  OptimizeRecord r;
  r.scheme = j.at("scheme").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.state = state_from_json(j.at("state"));
  r.trace = detail::vec_from_json(j.at("trace"));
  r.outer_iterations = j.at("outer_iterations").get<int>();
  r.converged = j.at("converged").get<bool>();
  return r;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw io_error("write failed for '" + path + "'");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// CSV

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row_strings(header); }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  std::size_t columns() const { return columns_; }
  const std::string& str() const { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

inline std::string trace_csv(const rvec& trace, const char* value_name) {
  CsvWriter w({"iteration", value_name});
  for (std::size_t i = 0; i < trace.size(); ++i) w.row_strings({std::to_string(i), format_number(trace[i])});
  return w.str();
}

/// Long format: one row per (scheme, sweep value, trial).
inline std::string sweep_csv(const MonteCarloResult& r, std::span<const TaskModel> tasks) {
  std::vector<std::string> header{"scheme", "sweep_var", "sweep_value", "trial", "objective", "outer_iterations",
                                  "converged"};
  for (const auto& t : tasks) header.push_back("error_" + t.name);
  CsvWriter w(header);
  const std::string var = r.sweep_variable.empty() ? "none" : r.sweep_variable;
  for (const auto& rec : r.records) {
    std::vector<std::string> row{std::string(scheme_name(rec.scheme)), var, format_number(rec.sweep_value),
                                 std::to_string(rec.trial), format_number(rec.objective),
                                 std::to_string(rec.outer_iterations), rec.converged ? "1" : "0"};
    for (double e : rec.per_task_error) row.push_back(format_number(e));
    w.row_strings(row);
  }
  return w.str();
}

inline std::string sweep_summary_csv(const MonteCarloResult& r, std::span<const TaskModel> tasks) {
  std::vector<std::string> header{"scheme", "sweep_var", "sweep_value", "trials", "mean_objective", "std_objective"};
  for (const auto& t : tasks) header.push_back("mean_error_" + t.name);
  CsvWriter w(header);
  const std::string var = r.sweep_variable.empty() ? "none" : r.sweep_variable;
  for (const auto& s : r.summary) {
    std::vector<std::string> row{std::string(scheme_name(s.scheme)), var, format_number(s.sweep_value),
                                 std::to_string(s.trials), format_number(s.mean), format_number(s.stddev)};
    for (double e : s.mean_per_task) row.push_back(format_number(e));
    w.row_strings(row);
  }
  return w.str();
}

/// AO objective per outer iteration for every (scheme, sweep value, trial).
inline std::string sweep_trace_csv(const MonteCarloResult& r) {
  CsvWriter w({"scheme", "sweep_value", "trial", "iteration", "objective"});
  for (const auto& rec : r.records)
    for (std::size_t i = 0; i < rec.trace.size(); ++i)
      w.row_strings({std::string(scheme_name(rec.scheme)), format_number(rec.sweep_value), std::to_string(rec.trial),
                     std::to_string(i), format_number(rec.trace[i])});
  return w.str();
}

inline std::string scaling_csv(const ScalingResult& r) {
  CsvWriter w({"M", "log2_M", "mean_error", "mean_snr"});
  for (const auto& row : r.rows)
    w.row_strings({std::to_string(row.M), format_number(std::log2(static_cast<double>(row.M))),
                   format_number(row.mean_error), format_number(row.mean_snr)});
  return w.str();
}

/// (sample_size, error) rows; an optional header line is skipped.
inline std::vector<ErrorSample> parse_fit_csv(const std::string& text) {
  std::vector<ErrorSample> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto comma = line.find(',');
    auto fail = [&](const std::string& why) {
      throw config_error("line " + std::to_string(line_no) + ": " + why + ": '" + line + "'");
    };
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      fail("expected two comma-separated fields");
    const std::string a = line.substr(0, comma);
    const std::string b = line.substr(comma + 1);
    double x = 0.0;
    double y = 0.0;
    std::size_t used_a = 0;
    std::size_t used_b = 0;
    try {
      x = std::stod(a, &used_a);
      y = std::stod(b, &used_b);
    } catch (const std::exception&) {
      if (line_no == 1 && out.empty()) continue;  // header
      fail("not a number");
    }
    if (a.find_first_not_of(" \t", used_a) != std::string::npos ||
        b.find_first_not_of(" \t", used_b) != std::string::npos)
      fail("trailing characters");
    out.push_back({x, y});
  }
  return out;
}

inline json fit_to_json(const ErrorModelFit& f, std::size_t samples) {
  return {{"c", f.c}, {"d", f.d}, {"nonpositive_decay", f.nonpositive_decay}, {"samples", samples}};
}

}  // namespace risel
