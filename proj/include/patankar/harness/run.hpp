#ifndef PATANKAR_HARNESS_RUN_HPP_
#define PATANKAR_HARNESS_RUN_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "patankar/diagnostics.hpp"
#include "patankar/error.hpp"
#include "patankar/grid.hpp"
#include "patankar/harness/config.hpp"
#include "patankar/integrators.hpp"
#include "patankar/problems.hpp"
#include "patankar/space_disc.hpp"

namespace patankar::harness {

struct SeriesRow {
  std::size_t step = 0;
  double time = 0.0;
  double dt = 0.0;
  double lambda = 0.0;
  double tv = 0.0;
  double tv_increase = 0.0;
  double ttv_max = 0.0;
  double delta_dev = 0.0;
  double gamma_dev = 0.0;
  double cons_defect = 0.0;
  double min_state = 0.0;
};

struct RunRecord {
  RunCase run_case;
  std::string run_id;
  std::uint64_t config_hash = 0;
  Problem problem;
  Grid1D grid{0.0, 1.0, 3, Boundary::Periodic};
  std::size_t diag_component = 0;  // first positive component
  std::vector<SeriesRow> series;
  std::vector<double> final_state;
  std::vector<double> field_times;
  std::vector<std::vector<double>> fields;  // full states at dump times
  std::vector<double> ttv_profile;
  std::vector<StepPath> paths;         // keep_stages
  std::optional<WeakFormData> weak;    // keep_fields

  std::string status = "ok";  // ok | diverged
  std::string message;
  std::size_t steps = 0;
  double final_time = 0.0;
  std::optional<double> shock_location;
  std::optional<double> shock_exact;
  std::optional<double> shock_error;
  double tvd_violation_max = -std::numeric_limits<double>::infinity();
  double ttv_max = 0.0;
  std::optional<double> ttvrk_max;
  double delta_dev_max = 0.0;      // shock-excluded
  double gamma_dev_max = 0.0;      // shock-excluded
  double delta_dev_all_max = 0.0;  // every cell
  double cons_defect_max = 0.0;
  double min_state = std::numeric_limits<double>::infinity();
  std::optional<double> weakform_discrete;
  std::optional<double> weakform_continuous;
  std::size_t clamped = 0;
  double wall_clock = 0.0;
};

namespace detail {

inline auto slice(const std::vector<double>& u, std::size_t c, std::size_t n) -> std::vector<double> {
  return {u.begin() + static_cast<long>(c * n), u.begin() + static_cast<long>((c + 1) * n)};
}

inline auto diverged(const std::vector<double>& u, double threshold) -> bool {
  return std::any_of(u.begin(), u.end(), [threshold](double v) { return !std::isfinite(v) || std::abs(v) > threshold; });
}

}  // namespace detail

// Time loop: select dt, assemble the splitting, step, update diagnostics.
// Patankar runs propagate failures (with the step index); explicit runs that
// blow up or leave the admissible set are recorded as diverged.
inline auto run(const RunCase& rc) -> RunRecord {
  const auto wall_start = std::chrono::steady_clock::now();
  const RunConfig& cfg = rc.config;
  RunRecord rec;
  rec.run_case = rc;
  rec.run_id = rc.run_id();
  rec.config_hash = rc.config_hash();
  try {
    rec.problem = make_problem(cfg.problem, cfg.params);
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  const Problem& prob = rec.problem;
  const ConservationLaw& law = prob.law;
  const IntegratorSpec spec = [&] {
    try {
      return make_integrator(rc.integrator);
    } catch (const InvalidParameter& e) {
      throw ConfigError(e.what());
    }
  }();
  const NumericalFlux flux = [&] {
    try {
      return make_flux(rc.flux);
    } catch (const InvalidParameter& e) {
      throw ConfigError(e.what());
    }
  }();
  if (flux.id == "upwind" && law.components != 1) { throw ConfigError("upwind flux needs a scalar law"); }
  rec.grid = Grid1D(prob.a, prob.b, rc.cells, prob.boundary);
  const Grid1D& grid = rec.grid;
  const SemiDiscretization sd(law, flux, grid);
  const ProductionDestructionSystem pds = sd.pds();
  const std::size_t n = grid.cells();
  const std::size_t m = law.components;
  const std::size_t pc = law.positive_components.empty() ? 0 : law.positive_components.front();
  rec.diag_component = pc;
  const double t_end = prob.final_time;
  rec.final_time = t_end;

  std::vector<double> u = initial_state(law, grid);
  auto comp = [&](const std::vector<double>& s) { return detail::slice(s, pc, n); };
  auto min_positive = [&](const std::vector<double>& s) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < m; ++c) {
      if (!law.is_positive(c)) { continue; }
      for (std::size_t i = 0; i < n; ++i) { lo = std::min(lo, s[c * n + i]); }
    }
    return lo;
  };

  TimeVariationAccumulator ttv(comp(u));
  double tv_prev = total_variation(comp(u), grid.periodic());
  rec.series.push_back({0, 0.0, 0.0, 0.0, tv_prev, 0.0, 0.0, 0.0, 0.0, 0.0, min_positive(u)});
  rec.min_state = min_positive(u);
  if (cfg.dump_fields) {
    rec.field_times.push_back(0.0);
    rec.fields.push_back(u);
  }
  if (cfg.keep_fields) {
    WeakFormData w{grid, {0.0}, {comp(u)}, {}, {}, {}};
    for (std::size_t k = 0; k < sd.interface_count(); ++k) {
      w.interface_left.push_back(grid.periodic() ? static_cast<long>(k) : static_cast<long>(k) - 1);
    }
    rec.weak = std::move(w);
  }
  auto cont_flux = [&](const std::vector<double>& s) {
    std::vector<double> f_cells(n);
    std::vector<double> point(m);
    std::vector<double> f(m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < m; ++c) { point[c] = s[c * n + i]; }
      law.flux(point, f);
      f_cells[i] = f[pc];
    }
    std::vector<double> out;
    for (long l : rec.weak->interface_left) {
      out.push_back(0.5 * (f_cells[grid.resolve(l)] + f_cells[grid.resolve(l + 1)]));
    }
    return out;
  };

  const double fixed_dt = select_timestep(rc.cfl, grid, max_wave_speed(law, grid, u),
                                          std::numeric_limits<double>::infinity(), cfg.dt_max);
  double t = 0.0;
  std::size_t step_no = 0;
  const std::size_t count = sd.interface_count();
  while (t < t_end) {
    if (step_no >= cfg.max_steps) { throw SolverFailure(fmt::format("step limit {} reached at t = {}", cfg.max_steps, t)); }
    const double remaining = t_end - t;
    double dt = cfg.timestep == TimestepMode::Fixed
                    ? std::min(fixed_dt, remaining)
                    : select_timestep(rc.cfl, grid, max_wave_speed(law, grid, u), remaining, cfg.dt_max);
    // avoid a sliver step from round-off in the accumulated time
    if (remaining - dt <= 1e-12 * t_end) { dt = remaining; }
    StepResult res;
    try {
      res = step(spec, pds, u, dt);
    } catch (const Error& e) {
      if (spec.patankar) {
        throw SolverFailure(fmt::format("step {} (t = {:.17g}, dt = {:.17g}, min state {:.17g}): {}", step_no + 1, t, dt,
                                        min_positive(u), e.what()));
      }
      rec.status = "diverged";
      rec.message = fmt::format("step {}: {}", step_no + 1, e.what());
      break;
    }
    if (!spec.patankar && detail::diverged(res.u, cfg.divergence_threshold)) {
      rec.status = "diverged";
      rec.message = fmt::format("step {}: state exceeded {:.3g}", step_no + 1, cfg.divergence_threshold);
      break;
    }
    ++step_no;
    t = dt == remaining ? t_end : t + dt;
    rec.clamped += res.record.clamped;

    const auto cu = comp(res.u);
    SeriesRow row;
    row.step = step_no;
    row.time = t;
    row.dt = dt;
    row.lambda = dt / grid.dx();
    row.tv = total_variation(cu, grid.periodic());
    row.tv_increase = row.tv - tv_prev;
    tv_prev = row.tv;
    ttv.push(cu);
    row.ttv_max = ttv.max();
    const auto shock = shock_interface_or_none(cu, grid);
    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) { dev[i] = std::abs(res.record.delta[pc * n + i] - 1.0); }
    row.delta_dev = weight_deviation(dev, shock, cfg.exclusion_radius, grid.periodic());
    rec.delta_dev_all_max = std::max(rec.delta_dev_all_max, weight_deviation(dev, std::nullopt, 0, grid.periodic()));
    row.gamma_dev = weight_deviation(detail::slice(res.record.gamma_dev, pc, n), shock, cfg.exclusion_radius,
                                     grid.periodic());
    for (std::size_t c = 0; c < m; ++c) {
      row.cons_defect = std::max(row.cons_defect, std::abs(mass(detail::slice(res.u, c, n)) - mass(detail::slice(u, c, n))));
    }
    row.min_state = min_positive(res.u);
    rec.series.push_back(row);

    rec.tvd_violation_max = std::max(rec.tvd_violation_max, row.tv_increase);
    rec.delta_dev_max = std::max(rec.delta_dev_max, row.delta_dev);
    rec.gamma_dev_max = std::max(rec.gamma_dev_max, row.gamma_dev);
    rec.cons_defect_max = std::max(rec.cons_defect_max, row.cons_defect);
    rec.min_state = std::min(rec.min_state, row.min_state);

    if (cfg.keep_stages) {
      StepPath path{comp(u), {}, cu};
      for (const auto& s : res.record.stages) { path.stages.push_back(comp(s)); }
      rec.paths.push_back(std::move(path));
    }
    if (rec.weak) {
      rec.weak->cont_fluxes.push_back(cont_flux(u));
      rec.weak->fluxes.emplace_back(res.record.flux.begin() + static_cast<long>(pc * count),
                                    res.record.flux.begin() + static_cast<long>((pc + 1) * count));
      rec.weak->times.push_back(t);
      rec.weak->states.push_back(cu);
    }
    u = std::move(res.u);
    if (cfg.dump_fields && (step_no % cfg.dump_every == 0 || t == t_end)) {
      rec.field_times.push_back(t);
      rec.fields.push_back(u);
    }
  }
  rec.steps = step_no;
  rec.final_state = u;
  rec.ttv_profile = ttv.profile();

  if (rec.status == "ok") {
    rec.ttv_max = ttv.max();
    if (cfg.keep_stages && !rec.paths.empty()) {
      const auto p = total_time_variation_rk(rec.paths);
      rec.ttvrk_max = *std::max_element(p.begin(), p.end());
    }
    const auto cu = comp(u);
    try {
      rec.shock_location = shock_location(cu, grid, prob.shock_window);
      rec.shock_exact = prob.exact_shock_location(t_end);
      if (rec.shock_exact) { rec.shock_error = std::abs(*rec.shock_location - *rec.shock_exact); }
    } catch (const NoShock&) {
      rec.shock_location.reset();
    }
    if (rec.weak) {
      double disc = 0.0;
      double cont = 0.0;
      for (const auto& phi : default_test_functions(grid.a(), grid.b(), t_end)) {
        const auto r = weak_form_residual(*rec.weak, phi);
        disc = std::max(disc, r.discrete);
        cont = std::max(cont, r.continuous);
      }
      rec.weakform_discrete = disc;
      rec.weakform_continuous = cont;
    }
  } else {
    constexpr double inf = std::numeric_limits<double>::infinity();
    rec.tvd_violation_max = inf;
    rec.ttv_max = inf;
    rec.cons_defect_max = inf;
    if (cfg.keep_stages) { rec.ttvrk_max = inf; }
  }
  rec.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return rec;
}

// =================================================================================================
struct ConvergenceRow {
  std::size_t cells = 0;
  std::optional<double> shock_error;
  std::string status;
};

struct ConvergenceTable {
  std::string flux;
  std::string integrator;
  double cfl = 0.0;
  std::vector<ConvergenceRow> rows;
  std::optional<double> slope;  // least squares of log error vs log N
};

// Least-squares slope of log y against log x; points with y <= 0 are skipped.
inline auto loglog_slope(const std::vector<double>& x, const std::vector<double>& y) -> std::optional<double> {
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) { return std::nullopt; }
  const auto k = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / k;
    my += ly[i] / k;
  }
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

// Runs every N of each (scheme, cfl) combination concurrently; results are
// gathered after all joins. Records are returned alongside the tables.
inline auto convergence_study(const RunConfig& config, std::vector<RunRecord>* records = nullptr)
    -> std::vector<ConvergenceTable> {
  const auto cases = expand(config);
  std::vector<std::future<RunRecord>> futures;
  futures.reserve(cases.size());
  for (const auto& c : cases) {
    futures.push_back(std::async(std::launch::async, [c] { return run(c); }));
  }
  std::vector<RunRecord> done;
  done.reserve(cases.size());
  for (auto& f : futures) { done.push_back(f.get()); }

  std::vector<ConvergenceTable> tables;
  for (const auto& r : done) {
    const auto& rc = r.run_case;
    auto it = std::find_if(tables.begin(), tables.end(), [&](const ConvergenceTable& t) {
      return t.flux == rc.flux && t.integrator == rc.integrator && t.cfl == rc.cfl;
    });
    if (it == tables.end()) {
      tables.push_back({rc.flux, rc.integrator, rc.cfl, {}, std::nullopt});
      it = std::prev(tables.end());
    }
    it->rows.push_back({rc.cells, r.shock_error, r.status});
  }
  for (auto& t : tables) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& row : t.rows) {
      if (row.shock_error) {
        x.push_back(static_cast<double>(row.cells));
        y.push_back(*row.shock_error);
      }
    }
    t.slope = loglog_slope(x, y);
  }
  if (records != nullptr) { *records = std::move(done); }
  return tables;
}

}  // namespace patankar::harness

#endif  // PATANKAR_HARNESS_RUN_HPP_
