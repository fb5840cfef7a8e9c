// Experiment runner: run / convergence / presets.
#include <algorithm>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "patankar/error.hpp"
#include "patankar/harness/config.hpp"
#include "patankar/harness/output.hpp"
#include "patankar/harness/run.hpp"

#ifndef PATANKAR_PRESET_DIR
#define PATANKAR_PRESET_DIR "presets"
#endif

namespace fs = std::filesystem;
using namespace patankar;
using namespace patankar::harness;

namespace {

struct Overrides {
  std::string config;
  std::string preset;
  std::string out_dir = "out";
  bool dump_fields = false;
  bool keep_stages = false;
  std::vector<double> cfl;
  std::vector<std::size_t> cells;
  bool quiet = false;
};

auto preset_path(const std::string& name) -> fs::path {
  const fs::path p = fs::path(PATANKAR_PRESET_DIR) / (name + ".toml");
  if (!fs::exists(p)) { throw ConfigError("unknown preset '" + name + "' (looked in " + p.parent_path().string() + ")"); }
  return p;
}

auto load(const Overrides& o, const std::string& positional) -> RunConfig {
  std::string path = o.config;
  if (path.empty()) { path = positional; }
  if (!o.preset.empty()) { path = preset_path(o.preset).string(); }
  if (path.empty()) { throw ConfigError("no config given (use --config, --preset or a positional path)"); }
  RunConfig c = load_config(path);
  if (!o.cfl.empty()) { c.cfl = o.cfl; }
  if (!o.cells.empty()) {
    c.cells = o.cells;
    std::sort(c.cells.begin(), c.cells.end());
  }
  c.dump_fields = c.dump_fields || o.dump_fields;
  c.keep_stages = c.keep_stages || o.keep_stages;
  c.validate();
  return c;
}

void print_record(const RunRecord& r) {
  fmt::print("{}: status={} steps={} shock_error={} tvd_violation_max={:.3e} ttv_max={:.4g} min_state={:.3e} ({:.2f}s)\n",
             r.run_id, r.status, r.steps, format_optional(r.shock_error), r.tvd_violation_max, r.ttv_max, r.min_state,
             r.wall_clock);
}

auto do_run(const RunConfig& c, const Overrides& o) -> int {
  for (const auto& rc : expand(c)) {
    const auto rec = run(rc);
    const auto dir = emit_outputs(rec, o.out_dir);
    if (!o.quiet) {
      print_record(rec);
      fmt::print("  -> {}\n", dir.string());
    }
  }
  return 0;
}

auto do_convergence(const RunConfig& c, const Overrides& o) -> int {
  std::vector<RunRecord> records;
  const auto tables = convergence_study(c, &records);
  for (const auto& r : records) { emit_outputs(r, o.out_dir); }
  emit_convergence(tables, o.out_dir);
  if (!o.quiet) {
    for (const auto& t : tables) {
      fmt::print("{} | {} | cfl {}\n", t.flux, t.integrator, t.cfl);
      for (const auto& row : t.rows) { fmt::print("  N = {:5d}  error = {}\n", row.cells, format_optional(row.shock_error)); }
      fmt::print("  slope = {}\n", format_optional(t.slope));
    }
  }
  return 0;
}

}  // namespace

auto main(int argc, char** argv) -> int {
  CLI::App app{"Modified Patankar experiments for 1-D conservation laws"};
  app.require_subcommand(1);
  Overrides o;
  std::string positional;
  std::string preset_name;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "config file");
    sub->add_option("--preset", o.preset, "preset name");
    sub->add_option("--out-dir", o.out_dir, "output directory");
    sub->add_flag("--dump-fields", o.dump_fields, "write field.csv");
    sub->add_flag("--keep-stages", o.keep_stages, "retain stage states (TTVRK)");
    sub->add_option("--cfl", o.cfl, "override CFL list");
    sub->add_option("--N", o.cells, "override mesh sizes (repeatable)");
    sub->add_flag("--quiet", o.quiet, "no console output");
  };
  auto* run_cmd = app.add_subcommand("run", "run every case of a config");
  run_cmd->add_option("path", positional, "config file");
  add_common(run_cmd);
  auto* conv_cmd = app.add_subcommand("convergence", "shock-location convergence study");
  conv_cmd->add_option("path", positional, "config file");
  add_common(conv_cmd);
  auto* presets_cmd = app.add_subcommand("presets", "shipped presets");
  presets_cmd->require_subcommand(1);
  auto* list_cmd = presets_cmd->add_subcommand("list", "list presets");
  auto* prun_cmd = presets_cmd->add_subcommand("run", "run a preset");
  prun_cmd->add_option("name", preset_name, "preset name")->required();
  add_common(prun_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*list_cmd) {
      std::vector<std::string> names;
      for (const auto& entry : fs::directory_iterator(PATANKAR_PRESET_DIR)) {
        if (entry.path().extension() == ".toml") { names.push_back(entry.path().stem().string()); }
      }
      std::sort(names.begin(), names.end());
      for (const auto& n : names) { fmt::print("{}\n", n); }
      return 0;
    }
    if (*prun_cmd) {
      o.preset = preset_name;
      return do_run(load(o, ""), o);
    }
    if (*run_cmd) { return do_run(load(o, positional), o); }
    if (*conv_cmd) { return do_convergence(load(o, positional), o); }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidParameter& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
