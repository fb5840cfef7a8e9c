#ifndef PATANKAR_HARNESS_OUTPUT_HPP_
#define PATANKAR_HARNESS_OUTPUT_HPP_

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "patankar/error.hpp"
#include "patankar/harness/run.hpp"

namespace patankar::harness {

inline auto format_double(double v) -> std::string { return fmt::format("{:.17g}", v); }

inline auto format_optional(const std::optional<double>& v) -> std::string {
  return v ? format_double(*v) : std::string("nan");
}

inline constexpr const char* kSeriesHeader =
    "step,time,dt,lambda,tv,tv_increase,ttv_max,delta_dev,gamma_dev,cons_defect,min_state";

inline auto series_csv(const RunRecord& r) -> std::string {
  std::string out = std::string(kSeriesHeader) + "\n";
  for (const auto& s : r.series) {
    out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", s.step,
                       s.time, s.dt, s.lambda, s.tv, s.tv_increase, s.ttv_max, s.delta_dev, s.gamma_dev,
                       s.cons_defect, s.min_state);
  }
  return out;
}

inline auto field_csv(const RunRecord& r) -> std::string {
  std::string out = "time,x,component,value\n";
  const std::size_t n = r.grid.cells();
  for (std::size_t k = 0; k < r.fields.size(); ++k) {
    const auto& f = r.fields[k];
    const std::size_t m = f.size() / n;
    for (std::size_t c = 0; c < m; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        out += fmt::format("{:.17g},{:.17g},{},{:.17g}\n", r.field_times[k], r.grid.center(i), c, f[c * n + i]);
      }
    }
  }
  return out;
}

// key = value lines; wall_clock is the only non-deterministic entry.
inline auto summary_text(const RunRecord& r) -> std::string {
  const auto& rc = r.run_case;
  std::string out;
  auto line = [&out](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  line("run_id", r.run_id);
  line("config_hash", fmt::format("{:016x}", r.config_hash));
  line("problem", rc.config.problem);
  line("flux", rc.flux);
  line("integrator", rc.integrator);
  line("N", std::to_string(rc.cells));
  line("cfl", format_double(rc.cfl));
  line("T", format_double(r.final_time));
  line("boundary", to_string(r.grid.boundary()));
  line("status", r.status);
  if (!r.message.empty()) { line("message", r.message); }
  line("steps", std::to_string(r.steps));
  line("shock_location", format_optional(r.shock_location));
  line("shock_exact", format_optional(r.shock_exact));
  line("shock_error", format_optional(r.shock_error));
  line("tvd_violation_max", format_double(r.tvd_violation_max));
  line("ttv_max", format_double(r.ttv_max));
  line("ttvrk_max", format_optional(r.ttvrk_max));
  line("delta_dev_max", format_double(r.delta_dev_max));
  line("gamma_dev_max", format_double(r.gamma_dev_max));
  line("delta_dev_all_max", format_double(r.delta_dev_all_max));
  line("cons_defect_max", format_double(r.cons_defect_max));
  line("min_state", format_double(r.min_state));
  line("weakform_discrete", format_optional(r.weakform_discrete));
  line("weakform_continuous", format_optional(r.weakform_continuous));
  line("pwd_clamps", std::to_string(r.clamped));
  line("wall_clock", format_double(r.wall_clock));
  return out;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw Error("cannot open '" + path.string() + "' for writing"); }
  out << text;
  if (!out) { throw Error("write failed for '" + path.string() + "'"); }
}

}  // namespace detail

// Writes <dir>/<run_id>/{summary.txt, series.csv[, field.csv]} and returns the
// run directory.
inline auto emit_outputs(const RunRecord& r, const std::filesystem::path& dir) -> std::filesystem::path {
  const auto run_dir = dir / r.run_id;
  std::error_code ec;
  std::filesystem::create_directories(run_dir, ec);
  if (ec) { throw Error("cannot create '" + run_dir.string() + "': " + ec.message()); }
  detail::write_text(run_dir / "summary.txt", summary_text(r));
  detail::write_text(run_dir / "series.csv", series_csv(r));
  if (!r.fields.empty()) { detail::write_text(run_dir / "field.csv", field_csv(r)); }
  return run_dir;
}

inline auto convergence_csv(const std::vector<ConvergenceTable>& tables) -> std::string {
  std::string out = "flux,integrator,cfl,N,shock_error,status\n";
  for (const auto& t : tables) {
    for (const auto& row : t.rows) {
      out += fmt::format("{},{},{:.17g},{},{},{}\n", t.flux, t.integrator, t.cfl, row.cells,
                         format_optional(row.shock_error), row.status);
    }
  }
  return out;
}

inline auto convergence_summary(const std::vector<ConvergenceTable>& tables) -> std::string {
  std::string out;
  for (const auto& t : tables) {
    out += fmt::format("slope[{}|{}|cfl={:.17g}] = {}\n", t.flux, t.integrator, t.cfl, format_optional(t.slope));
  }
  return out;
}

inline void emit_convergence(const std::vector<ConvergenceTable>& tables, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) { throw Error("cannot create '" + dir.string() + "': " + ec.message()); }
  detail::write_text(dir / "convergence.csv", convergence_csv(tables));
  detail::write_text(dir / "convergence_summary.txt", convergence_summary(tables));
}

}  // namespace patankar::harness

#endif  // PATANKAR_HARNESS_OUTPUT_HPP_
