#ifndef PATANKAR_HARNESS_CONFIG_HPP_
#define PATANKAR_HARNESS_CONFIG_HPP_

#include <cctype>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "patankar/error.hpp"
#include "patankar/grid.hpp"
#include "patankar/problems.hpp"

namespace patankar::harness {

// =================================================================================================
// Minimal TOML subset: [section] headers, key = value with numbers, "strings",
// true/false and flat [arrays]; '#' comments.
struct TomlValue {
  enum class Kind { Number, String, Bool, Array };
  Kind kind = Kind::Number;
  double number = 0.0;
  std::string text;
  bool boolean = false;
  std::vector<TomlValue> items;
};

using TomlTable = std::map<std::string, TomlValue>;  // keys are "section.key"

namespace detail {

inline auto trim(std::string s) -> std::string {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) { return ""; }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline auto strip_comment(const std::string& line) -> std::string {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') { quoted = !quoted; }
    if (line[i] == '#' && !quoted) { return line.substr(0, i); }
  }
  return line;
}

inline auto parse_scalar(const std::string& raw, std::size_t line_no) -> TomlValue {
  const std::string s = trim(raw);
  TomlValue v;
  if (s.empty()) { throw ConfigError(fmt::format("line {}: missing value", line_no)); }
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') { throw ConfigError(fmt::format("line {}: unterminated string", line_no)); }
    v.kind = TomlValue::Kind::String;
    v.text = s.substr(1, s.size() - 2);
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = TomlValue::Kind::Bool;
    v.boolean = s == "true";
    return v;
  }
  std::size_t used = 0;
  try {
    v.number = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) { throw ConfigError(fmt::format("line {}: cannot parse value '{}'", line_no, s)); }
  v.kind = TomlValue::Kind::Number;
  v.text = s;
  return v;
}

inline auto parse_value(const std::string& raw, std::size_t line_no) -> TomlValue {
  const std::string s = trim(raw);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') { throw ConfigError(fmt::format("line {}: unterminated array", line_no)); }
    TomlValue v;
    v.kind = TomlValue::Kind::Array;
    std::string body = s.substr(1, s.size() - 2);
    std::string item;
    bool quoted = false;
    for (char ch : body) {
      if (ch == '"') { quoted = !quoted; }
      if (ch == ',' && !quoted) {
        if (!trim(item).empty()) { v.items.push_back(parse_scalar(item, line_no)); }
        item.clear();
      } else {
        item += ch;
      }
    }
    if (!trim(item).empty()) { v.items.push_back(parse_scalar(item, line_no)); }
    return v;
  }
  return parse_scalar(s, line_no);
}

}  // namespace detail

inline auto parse_toml(const std::string& text) -> TomlTable {
  TomlTable table;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(detail::strip_comment(line));
    if (line.empty()) { continue; }
    if (line.front() == '[') {
      if (line.back() != ']') { throw ConfigError(fmt::format("line {}: malformed section header", line_no)); }
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) { throw ConfigError(fmt::format("line {}: expected key = value", line_no)); }
    const std::string key = detail::trim(line.substr(0, eq));
    if (key.empty()) { throw ConfigError(fmt::format("line {}: empty key", line_no)); }
    const std::string full = section.empty() ? key : section + "." + key;
    if (table.count(full) != 0) { throw ConfigError(fmt::format("line {}: duplicate key '{}'", line_no, full)); }
    table[full] = detail::parse_value(line.substr(eq + 1), line_no);
  }
  return table;
}

inline auto read_file(const std::string& path) -> std::string {
  std::ifstream in(path);
  if (!in) { throw ConfigError("cannot open config file '" + path + "'"); }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// =================================================================================================
enum class TimestepMode { Adaptive, Fixed };

struct RunConfig {
  std::string name = "run";
  std::string problem = "burgers";
  ProblemParams params;
  std::vector<std::string> fluxes{"upwind"};
  std::vector<std::string> integrators{"mpe"};
  std::vector<std::size_t> cells{100};
  std::vector<double> cfl{1.0};
  // adaptive: dt from the current state every step; fixed: dt from the
  // initial state for the whole run (last step clamped to T)
  TimestepMode timestep = TimestepMode::Adaptive;
  std::optional<double> dt_max;
  bool dump_fields = false;
  std::size_t dump_every = 1;
  bool keep_stages = false;
  bool keep_fields = false;  // space-time history for the weak form
  std::size_t exclusion_radius = 5;
  std::size_t max_steps = 2'000'000;
  // explicit runs whose state exceeds this magnitude are stopped as diverged
  double divergence_threshold = 1e12;
  std::uint64_t seed = 0;  // recorded only; the core path is deterministic

  // (flux, integrator) pairs: equal-length lists are zipped, a single entry is
  // broadcast against the other list.
  [[nodiscard]] auto scheme_pairs() const -> std::vector<std::pair<std::string, std::string>> {
    std::vector<std::pair<std::string, std::string>> out;
    const std::size_t n = std::max(fluxes.size(), integrators.size());
    for (std::size_t k = 0; k < n; ++k) {
      out.emplace_back(fluxes.size() == 1 ? fluxes[0] : fluxes[k], integrators.size() == 1 ? integrators[0] : integrators[k]);
    }
    return out;
  }

  void validate() const {
    if (cells.empty()) { throw ConfigError("N list must not be empty"); }
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (cells[k] < 3) { throw ConfigError("N must be at least 3"); }
      if (k > 0 && cells[k] <= cells[k - 1]) { throw ConfigError("N list must be strictly increasing"); }
    }
    if (cfl.empty()) { throw ConfigError("cfl list must not be empty"); }
    for (double c : cfl) {
      if (!(c > 0.0)) { throw ConfigError("cfl must be positive"); }
    }
    if (params.final_time && !(*params.final_time > 0.0)) { throw ConfigError("T must be positive"); }
    if (fluxes.empty() || integrators.empty()) { throw ConfigError("flux and integrator must be given"); }
    if (fluxes.size() > 1 && integrators.size() > 1 && fluxes.size() != integrators.size()) {
      throw ConfigError("flux and integrator lists must have equal length or one entry");
    }
    if (dump_every == 0) { throw ConfigError("dump_every must be at least 1"); }
  }
};

// One point of the run matrix.
struct RunCase {
  RunConfig config;  // shared settings (lists ignored)
  std::string flux;
  std::string integrator;
  std::size_t cells = 100;
  double cfl = 1.0;

  [[nodiscard]] auto run_id() const -> std::string {
    std::string id = fmt::format("{}_{}_{}_N{}_cfl{}", config.problem, flux, integrator, cells, cfl);
    for (char& ch : id) {
      if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.')) { ch = '-'; }
    }
    return id;
  }

  // Canonical text of every setting that influences the numbers.
  [[nodiscard]] auto canonical() const -> std::string {
    const auto& c = config;
    const auto& p = c.params;
    return fmt::format(
        "problem={};u1={:.17g};u2={:.17g};a={:.17g};g={:.17g};standard={};ic={};T={};boundary={};flux={};"
        "integrator={};N={};cfl={:.17g};timestep={};dt_max={};radius={};max_steps={};div={:.17g}",
        c.problem, p.u1, p.u2, p.a, p.g_grav, p.buckley_standard, p.ic,
        p.final_time ? fmt::format("{:.17g}", *p.final_time) : "default",
        p.boundary ? to_string(*p.boundary) : "default", flux, integrator, cells, cfl,
        c.timestep == TimestepMode::Fixed ? "fixed" : "adaptive",
        c.dt_max ? fmt::format("{:.17g}", *c.dt_max) : "default", c.exclusion_radius, c.max_steps,
        c.divergence_threshold);
  }

  // FNV-1a of canonical().
  [[nodiscard]] auto config_hash() const -> std::uint64_t {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : canonical()) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    return h;
  }
};

inline auto expand(const RunConfig& config) -> std::vector<RunCase> {
  config.validate();
  std::vector<RunCase> cases;
  for (const auto& [flux, integrator] : config.scheme_pairs()) {
    for (double c : config.cfl) {
      for (std::size_t n : config.cells) { cases.push_back({config, flux, integrator, n, c}); }
    }
  }
  return cases;
}

// =================================================================================================
namespace detail {

inline auto as_number(const TomlValue& v, const std::string& key) -> double {
  if (v.kind != TomlValue::Kind::Number) { throw ConfigError("'" + key + "' must be a number"); }
  return v.number;
}

inline auto as_string(const TomlValue& v, const std::string& key) -> std::string {
  if (v.kind != TomlValue::Kind::String) { throw ConfigError("'" + key + "' must be a string"); }
  return v.text;
}

inline auto as_bool(const TomlValue& v, const std::string& key) -> bool {
  if (v.kind != TomlValue::Kind::Bool) { throw ConfigError("'" + key + "' must be true or false"); }
  return v.boolean;
}

inline auto as_count(const TomlValue& v, const std::string& key) -> std::size_t {
  const double x = as_number(v, key);
  if (!(x >= 0.0) || x != static_cast<double>(static_cast<std::size_t>(x))) {
    throw ConfigError("'" + key + "' must be a non-negative integer");
  }
  return static_cast<std::size_t>(x);
}

template <typename F>
auto as_list(const TomlValue& v, const std::string& key, F convert) {
  using T = decltype(convert(v, key));
  std::vector<T> out;
  if (v.kind == TomlValue::Kind::Array) {
    for (const auto& item : v.items) { out.push_back(convert(item, key)); }
  } else {
    out.push_back(convert(v, key));
  }
  return out;
}

}  // namespace detail

inline auto config_from_toml(const TomlTable& table) -> RunConfig {
  RunConfig c;
  for (const auto& [key, v] : table) {
    using namespace detail;
    if (key == "name") {
      c.name = as_string(v, key);
    } else if (key == "problem.id") {
      c.problem = as_string(v, key);
    } else if (key == "problem.u1") {
      c.params.u1 = as_number(v, key);
    } else if (key == "problem.u2") {
      c.params.u2 = as_number(v, key);
    } else if (key == "problem.a") {
      c.params.a = as_number(v, key);
    } else if (key == "problem.g_grav") {
      c.params.g_grav = as_number(v, key);
    } else if (key == "problem.buckley_standard") {
      c.params.buckley_standard = as_bool(v, key);
    } else if (key == "problem.ic") {
      c.params.ic = as_string(v, key);
    } else if (key == "problem.T") {
      c.params.final_time = as_number(v, key);
    } else if (key == "problem.boundary") {
      try {
        c.params.boundary = parse_boundary(as_string(v, key));
      } catch (const InvalidParameter& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "scheme.flux") {
      c.fluxes = as_list(v, key, as_string);
    } else if (key == "scheme.integrator") {
      c.integrators = as_list(v, key, as_string);
    } else if (key == "run.N") {
      c.cells = as_list(v, key, as_count);
    } else if (key == "run.cfl") {
      c.cfl = as_list(v, key, as_number);
    } else if (key == "run.timestep") {
      const auto mode = as_string(v, key);
      if (mode == "adaptive") {
        c.timestep = TimestepMode::Adaptive;
      } else if (mode == "fixed") {
        c.timestep = TimestepMode::Fixed;
      } else {
        throw ConfigError("timestep must be 'adaptive' or 'fixed'");
      }
    } else if (key == "run.dt_max") {
      c.dt_max = as_number(v, key);
    } else if (key == "run.max_steps") {
      c.max_steps = as_count(v, key);
    } else if (key == "run.divergence_threshold") {
      c.divergence_threshold = as_number(v, key);
    } else if (key == "run.seed") {
      c.seed = as_count(v, key);
    } else if (key == "output.dump_fields") {
      c.dump_fields = as_bool(v, key);
    } else if (key == "output.dump_every") {
      c.dump_every = as_count(v, key);
    } else if (key == "output.keep_stages") {
      c.keep_stages = as_bool(v, key);
    } else if (key == "output.keep_fields") {
      c.keep_fields = as_bool(v, key);
    } else if (key == "output.exclusion_radius") {
      c.exclusion_radius = as_count(v, key);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

inline auto load_config(const std::string& path) -> RunConfig { return config_from_toml(parse_toml(read_file(path))); }

}  // namespace patankar::harness

#endif  // PATANKAR_HARNESS_CONFIG_HPP_
