#ifndef PATANKAR_DIAGNOSTICS_HPP_
#define PATANKAR_DIAGNOSTICS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "patankar/error.hpp"
#include "patankar/grid.hpp"
#include "patankar/problems.hpp"

namespace patankar {

// Sum |U_i - U_{i-1}|, including |U_0 - U_{N-1}| for periodic grids.
inline auto total_variation(std::span<const double> u, bool periodic) -> double {
  double tv = 0.0;
  for (std::size_t i = 1; i < u.size(); ++i) { tv += std::abs(u[i] - u[i - 1]); }
  if (periodic && u.size() > 1) { tv += std::abs(u.front() - u.back()); }
  return tv;
}

// Sum_n |U^n - U^{n-1}| of one cell's time series.
inline auto total_time_variation(std::span<const double> series) -> double {
  if (series.size() < 2) { throw InvalidParameter("time variation needs at least two time levels"); }
  double ttv = 0.0;
  for (std::size_t n = 1; n < series.size(); ++n) { ttv += std::abs(series[n] - series[n - 1]); }
  return ttv;
}

// Running per-cell time variation, fed one time level at a time.
class TimeVariationAccumulator {
 public:
  explicit TimeVariationAccumulator(std::span<const double> initial)
      : last_(initial.begin(), initial.end()), ttv_(initial.size(), 0.0) {}

  void push(std::span<const double> u) {
    for (std::size_t i = 0; i < ttv_.size(); ++i) {
      ttv_[i] += std::abs(u[i] - last_[i]);
      last_[i] = u[i];
    }
  }
  [[nodiscard]] auto profile() const -> const std::vector<double>& { return ttv_; }
  [[nodiscard]] auto max() const -> double { return *std::max_element(ttv_.begin(), ttv_.end()); }

 private:
  std::vector<double> last_;
  std::vector<double> ttv_;
};

// U^n, the recorded stages and U^{n+1} of one step, restricted to one component.
struct StepPath {
  std::vector<double> start;
  std::vector<std::vector<double>> stages;
  std::vector<double> end;
};

// Time variation along U^n -> U^(2) -> ... -> U^(s) -> U^{n+1}, summed over
// steps, per cell. Without recorded stages this is unavailable.
inline auto total_time_variation_rk(const std::vector<StepPath>& steps) -> std::vector<double> {
  if (steps.empty()) { throw UnavailableDiagnostic("stage states were not recorded"); }
  const std::size_t n = steps.front().start.size();
  std::vector<double> ttv(n, 0.0);
  for (const auto& s : steps) {
    const std::vector<double>* prev = &s.start;
    for (const auto& st : s.stages) {
      for (std::size_t i = 0; i < n; ++i) { ttv[i] += std::abs(st[i] - (*prev)[i]); }
      prev = &st;
    }
    for (std::size_t i = 0; i < n; ++i) { ttv[i] += std::abs(s.end[i] - (*prev)[i]); }
  }
  return ttv;
}

// =================================================================================================
// Interface i + 1/2 maximising |U_{i+1} - U_i| (smallest i on ties) among
// interfaces lying in `window`; returns its index i.
inline auto shock_interface(std::span<const double> u, const Grid1D& grid, std::array<double, 2> window)
    -> std::size_t {
  std::optional<std::size_t> best;
  double best_jump = 0.0;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    const double x = grid.interface(i + 1);
    if (x < window[0] || x > window[1]) { continue; }
    const double jump = std::abs(u[i + 1] - u[i]);
    if (jump > best_jump) {
      best_jump = jump;
      best = i;
    }
  }
  if (!best) { throw NoShock("state is constant inside the search window"); }
  return *best;
}

// Whole-domain argmax, or nothing for a constant state.
inline auto shock_interface_or_none(std::span<const double> u, const Grid1D& grid) -> std::optional<std::size_t> {
  try {
    return shock_interface(u, grid, {grid.a(), grid.b()});
  } catch (const NoShock&) {
    return std::nullopt;
  }
}

inline auto shock_location(std::span<const double> u, const Grid1D& grid, std::array<double, 2> window)
    -> double {
  return grid.interface(shock_interface(u, grid, window) + 1);
}

inline auto shock_location(std::span<const double> u, const Grid1D& grid) -> double {
  return shock_location(u, grid, {grid.a(), grid.b()});
}

// max_n (TV^n - TV^{n-1}); <= 0 means TVD over the series.
inline auto tvd_violation(std::span<const double> tv_series) -> double {
  if (tv_series.size() < 2) { return -std::numeric_limits<double>::infinity(); }
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n < tv_series.size(); ++n) { worst = std::max(worst, tv_series[n] - tv_series[n - 1]); }
  return worst;
}

inline auto mass(std::span<const double> u) -> double {
  double s = 0.0;
  for (double v : u) { s += v; }
  return s;
}

// max_n |sum U^{n+1} - sum U^n| over a sequence of states.
inline auto conservation_defect(const std::vector<std::vector<double>>& states) -> double {
  double worst = 0.0;
  for (std::size_t n = 1; n < states.size(); ++n) {
    worst = std::max(worst, std::abs(mass(states[n]) - mass(states[n - 1])));
  }
  return worst;
}

// max_i |w_i - 1| over cells further than `radius` cells from `center`
// (no exclusion when center is empty). Periodic distance on periodic grids.
inline auto weight_deviation(std::span<const double> deviation, std::optional<std::size_t> center, std::size_t radius,
                             bool periodic) -> double {
  const std::size_t n = deviation.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (center) {
      std::size_t d = i > *center ? i - *center : *center - i;
      if (periodic) { d = std::min(d, n - d); }
      if (d <= radius) { continue; }
    }
    worst = std::max(worst, deviation[i]);
  }
  return worst;
}

// =================================================================================================
// Smooth compactly supported bump exp(1 - 1/(1 - s^2)) on (-1, 1), max 1 at 0.
inline auto bump(double s) -> double {
  if (std::abs(s) >= 1.0) { return 0.0; }
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

inline auto bump_derivative(double s) -> double {
  if (std::abs(s) >= 1.0) { return 0.0; }
  const double q = 1.0 - s * s;
  return bump(s) * (-2.0 * s / (q * q));
}

// phi(x, t) with its derivatives and the box where it may be non-zero.
struct TestFunction {
  std::string name;
  std::function<double(double, double)> phi;
  std::function<double(double, double)> phi_t;
  std::function<double(double, double)> phi_x;
  std::array<double, 2> x_support;
  std::array<double, 2> t_support;
};

// bump in x around xc (radius rx) times bump in t around tc (radius rt).
inline auto bump_test_function(double xc, double rx, double tc, double rt) -> TestFunction {
  TestFunction tf;
  tf.name = "bump";
  tf.phi = [=](double x, double t) { return bump((x - xc) / rx) * bump((t - tc) / rt); };
  tf.phi_t = [=](double x, double t) { return bump((x - xc) / rx) * bump_derivative((t - tc) / rt) / rt; };
  tf.phi_x = [=](double x, double t) { return bump_derivative((x - xc) / rx) / rx * bump((t - tc) / rt); };
  tf.x_support = {xc - rx, xc + rx};
  tf.t_support = {tc - rt, tc + rt};
  return tf;
}

// Same spatial bump, but maximal at t = 0 and vanishing for t >= t_end: tests
// the initial-data term of the weak form.
inline auto initial_bump_test_function(double xc, double rx, double t_end) -> TestFunction {
  TestFunction tf = bump_test_function(xc, rx, 0.0, t_end);
  tf.name = "initial_bump";
  tf.t_support = {0.0, t_end};
  return tf;
}

// The two shipped test functions for a run on [a, b] x [0, T].
inline auto default_test_functions(double a, double b, double final_time) -> std::vector<TestFunction> {
  const double xc = 0.5 * (a + b);
  const double rx = 0.45 * (b - a);
  return {bump_test_function(xc, rx, 0.5 * final_time, 0.4 * final_time),
          initial_bump_test_function(xc, rx, 0.8 * final_time)};
}

// Space-time history of one component, as needed by the weak form.
struct WeakFormData {
  Grid1D grid;
  std::vector<double> times;                 // t_0 = 0, ..., t_L = T
  std::vector<std::vector<double>> states;   // U^0, ..., U^L (this component)
  std::vector<std::vector<double>> fluxes;   // F^0, ..., F^{L-1}, one per interface
  // interface k separates cells left_cell(k), left_cell(k) + 1; kExternal-like
  // ghosts are represented by index -1 / N
  std::vector<long> interface_left;
  // f(U) of this component at the interface's neighbours (continuous form):
  // cont_fluxes[n][k] = (f(U_L) + f(U_R)) / 2
  std::vector<std::vector<double>> cont_fluxes;
};

struct WeakFormResult {
  double discrete = 0.0;    // |residual| / scale
  double continuous = 0.0;  // |residual with f(U)| / scale
  double scale = 0.0;       // dx max|phi| sum_n dt_n sum_i |U_i^n|
  double discrete_abs = 0.0;
  double continuous_abs = 0.0;
};

// dx [sum_{n>=1} sum_i (phi^n_i - phi^{n-1}_i) U^n_i + sum_i phi^0_i U^0_i]
//   + sum_n dt_n sum_k (phi^n_{R(k)} - phi^n_{L(k)}) F^n_k
// which vanishes identically for a conservative flux-form update (summation by
// parts; phi is zero outside the grid and at t = T).
inline auto weak_form_residual(const WeakFormData& d, const TestFunction& phi) -> WeakFormResult {
  const std::size_t levels = d.states.size();
  if (levels < 2 || d.times.size() != levels || d.fluxes.size() + 1 != levels) {
    throw InvalidParameter("weak form needs a complete space-time history");
  }
  const double t_end = d.times.back();
  if (phi.t_support[1] > t_end || phi.x_support[0] < d.grid.a() || phi.x_support[1] > d.grid.b()) {
    throw InvalidParameter("test function support exceeds the space-time box of the run");
  }
  const std::size_t n_cells = d.grid.cells();
  const double dx = d.grid.dx();
  auto phi_at = [&](long i, double t) {
    if (i < 0 || i >= static_cast<long>(n_cells)) { return 0.0; }
    return phi.phi(d.grid.center(static_cast<std::size_t>(i)), t);
  };
  std::vector<double> prev(n_cells);
  std::vector<double> cur(n_cells);
  double phi_max = 0.0;
  for (std::size_t i = 0; i < n_cells; ++i) {
    prev[i] = phi_at(static_cast<long>(i), d.times[0]);
    phi_max = std::max(phi_max, std::abs(prev[i]));
  }
  double time_part = 0.0;
  for (std::size_t i = 0; i < n_cells; ++i) { time_part += prev[i] * d.states[0][i]; }
  double flux_disc = 0.0;
  double flux_cont = 0.0;
  double mass_sum = 0.0;
  for (std::size_t n = 0; n + 1 < levels; ++n) {
    const double dt = d.times[n + 1] - d.times[n];
    double level_mass = 0.0;
    for (double v : d.states[n]) { level_mass += std::abs(v); }
    mass_sum += dt * level_mass;
    // flux terms with phi^n
    for (std::size_t k = 0; k < d.interface_left.size(); ++k) {
      const long l = d.interface_left[k];
      auto wrap = [&](long i) {
        if (d.grid.periodic()) { return static_cast<long>(d.grid.resolve(i)); }
        return i;
      };
      const double dphi = phi_at(wrap(l + 1), d.times[n]) - phi_at(wrap(l), d.times[n]);
      flux_disc += dt * dphi * d.fluxes[n][k];
      flux_cont += dt * dphi * d.cont_fluxes[n][k];
    }
    // time difference at level n + 1
    for (std::size_t i = 0; i < n_cells; ++i) {
      cur[i] = phi_at(static_cast<long>(i), d.times[n + 1]);
      phi_max = std::max(phi_max, std::abs(cur[i]));
      time_part += (cur[i] - prev[i]) * d.states[n + 1][i];
    }
    std::swap(prev, cur);
  }
  WeakFormResult r;
  r.scale = dx * phi_max * mass_sum;
  r.discrete_abs = std::abs(dx * time_part + flux_disc);
  r.continuous_abs = std::abs(dx * time_part + flux_cont);
  if (r.scale > 0.0) {
    r.discrete = r.discrete_abs / r.scale;
    r.continuous = r.continuous_abs / r.scale;
  }
  return r;
}

// Per-cell total time variation of a reference solution sampled at cell
// centres on a fine uniform time grid (exact for piecewise monotone paths up
// to the sampling of jumps, which are captured as single increments).
inline auto reference_time_variation(const SpaceTimeFunction& reference, const Grid1D& grid, std::size_t components,
                                     std::size_t component, double final_time, std::size_t samples = 20000)
    -> std::vector<double> {
  std::vector<double> ttv(grid.cells(), 0.0);
  std::vector<double> state(components);
  for (std::size_t i = 0; i < grid.cells(); ++i) {
    const double x = grid.center(i);
    reference(x, 0.0, state);
    double last = state[component];
    for (std::size_t s = 1; s <= samples; ++s) {
      reference(x, final_time * static_cast<double>(s) / static_cast<double>(samples), state);
      ttv[i] += std::abs(state[component] - last);
      last = state[component];
    }
  }
  return ttv;
}

}  // namespace patankar

#endif  // PATANKAR_DIAGNOSTICS_HPP_
