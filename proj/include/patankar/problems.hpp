#ifndef PATANKAR_PROBLEMS_HPP_
#define PATANKAR_PROBLEMS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "patankar/error.hpp"
#include "patankar/grid.hpp"

namespace patankar {

// Smallest water height used when computing velocities.
inline constexpr double kPositivityFloor = 1e-14;

using PointFunction = std::function<void(double x, std::span<double> state)>;
using SpaceTimeFunction = std::function<void(double x, double t, std::span<double> state)>;

// =================================================================================================
// Hyperbolic conservation law u_t + f(u)_x = 0 with m components.
struct ConservationLaw {
  std::string name;
  std::size_t components = 1;
  std::function<void(std::span<const double> u, std::span<double> f)> flux;
  // Bound on the spectral radius of the flux Jacobian at u.
  std::function<double(std::span<const double> u)> wave_speed;
  // Components on which the modified Patankar weighting is applied.
  std::vector<std::size_t> positive_components;
  PointFunction initial;        // optional
  SpaceTimeFunction reference;  // optional exact/reference solution

  [[nodiscard]] auto is_positive(std::size_t c) const -> bool {
    return std::find(positive_components.begin(), positive_components.end(), c) !=
           positive_components.end();
  }

  // Convenience for scalar laws.
  [[nodiscard]] auto f(double u) const -> double {
    double out = 0.0;
    flux(std::span<const double>(&u, 1), std::span<double>(&out, 1));
    return out;
  }
  [[nodiscard]] auto speed(double u) const -> double { return wave_speed(std::span<const double>(&u, 1)); }
};

// Spectral radius of the finite-difference flux Jacobian at u (m <= 2).
inline auto jacobian_spectral_radius(const ConservationLaw& law, std::span<const double> u,
                                     double rel_step = 1e-7) -> double {
  const std::size_t m = law.components;
  std::vector<double> up(u.begin(), u.end());
  std::vector<double> um(u.begin(), u.end());
  std::vector<double> fp(m);
  std::vector<double> fm(m);
  std::vector<double> jac(m * m);
  for (std::size_t k = 0; k < m; ++k) {
    const double h = rel_step * std::max(1.0, std::abs(u[k]));
    up[k] = u[k] + h;
    um[k] = u[k] - h;
    law.flux(up, fp);
    law.flux(um, fm);
    for (std::size_t r = 0; r < m; ++r) { jac[r * m + k] = (fp[r] - fm[r]) / (2.0 * h); }
    up[k] = u[k];
    um[k] = u[k];
  }
  if (m == 1) { return std::abs(jac[0]); }
  if (m == 2) {
    const double tr = jac[0] + jac[3];
    const double det = jac[0] * jac[3] - jac[1] * jac[2];
    const double disc = tr * tr / 4.0 - det;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      return std::max(std::abs(tr / 2.0 + s), std::abs(tr / 2.0 - s));
    }
    return std::sqrt(det);  // complex pair, |lambda|^2 = det
  }
  throw InvalidParameter("jacobian_spectral_radius supports at most two components");
}

// =================================================================================================
inline auto make_burgers() -> ConservationLaw {
  ConservationLaw law;
  law.name = "burgers";
  law.components = 1;
  law.flux = [](std::span<const double> u, std::span<double> f) { f[0] = 0.5 * u[0] * u[0]; };
  law.wave_speed = [](std::span<const double> u) { return std::abs(u[0]); };
  law.positive_components = {0};
  return law;
}

// Buckley-Leverett flux. The default (standard == false) uses the denominator
// u^2 + a (1 - u^2); standard == true switches to the textbook u^2 + a (1 - u)^2.
inline auto make_buckley_leverett(double a, bool standard = false) -> ConservationLaw {
  if (!(a > 0.0)) { throw InvalidParameter("Buckley-Leverett parameter a must be positive"); }
  ConservationLaw law;
  law.name = "buckley";
  law.components = 1;
  auto denom = [a, standard](double u) {
    return standard ? u * u + a * (1.0 - u) * (1.0 - u) : u * u + a * (1.0 - u * u);
  };
  auto derivative = [a, standard, denom](double u) {
    const double d = denom(u);
    return standard ? 2.0 * a * u * (1.0 - u) / (d * d) : 2.0 * a * u / (d * d);
  };
  law.flux = [denom](std::span<const double> u, std::span<double> f) {
    f[0] = u[0] * u[0] / denom(u[0]);
  };
  // max |f'| sampled over [0, |u|], plus the analytic value at u itself
  law.wave_speed = [derivative](std::span<const double> u) {
    constexpr int kSamples = 64;
    const double top = std::abs(u[0]);
    double s = std::abs(derivative(u[0]));
    for (int k = 0; k <= kSamples; ++k) {
      s = std::max(s, std::abs(derivative(top * static_cast<double>(k) / kSamples)));
    }
    return s;
  };
  law.positive_components = {0};
  return law;
}

inline auto make_shallow_water(double g_grav) -> ConservationLaw {
  if (!(g_grav > 0.0)) { throw InvalidParameter("gravity must be positive"); }
  ConservationLaw law;
  law.name = "shallow_water";
  law.components = 2;
  law.flux = [g_grav](std::span<const double> q, std::span<double> f) {
    const double h = q[0];
    if (!(h > 0.0)) { throw InvalidState("shallow water flux evaluated at non-positive height"); }
    const double u = q[1] / std::max(h, kPositivityFloor);
    f[0] = q[1];
    f[1] = q[1] * u + 0.5 * g_grav * h * h;
  };
  law.wave_speed = [g_grav](std::span<const double> q) {
    const double h = std::max(q[0], 0.0);
    const double u = q[1] / std::max(q[0], kPositivityFloor);
    return std::abs(u) + std::sqrt(g_grav * h);
  };
  law.positive_components = {0};
  return law;
}

// =================================================================================================
enum class RiemannKind { DoubleRP, DamBreak };

// Piecewise-constant initial data. DoubleRP: u1 on (x_left, x_right), u2 elsewhere.
// DamBreak: u1 for x <= x_left, u2 beyond (x_right unused).
struct RiemannSetup {
  double u1 = 1.0;
  double u2 = 0.0;
  double x_left = -0.5;
  double x_right = 0.5;
  RiemannKind kind = RiemannKind::DoubleRP;
};

inline auto exact_burgers_double_rp(double u1, double u2, double t, double x, double x_left = -0.5,
                                    double x_right = 0.5) -> double {
  if (t < 0.0) { throw InvalidParameter("negative time"); }
  if (!(u1 > u2)) { throw InvalidParameter("double Riemann problem requires u1 > u2"); }
  if (t == 0.0) { return (x > x_left && x < x_right) ? u1 : u2; }
  const double c = 0.5 * (u1 + u2);
  if (x >= x_right + c * t) { return u2; }
  return std::clamp((x - x_left) / t, u2, u1);
}

// Double Riemann problem for a scalar law whose flux is convex on [u2, u1]:
// rarefaction at x_left, shock at x_right. The fan is found by inverting f'.
inline auto exact_convex_double_rp(const std::function<double(double)>& f,
                                   const std::function<double(double)>& df, double u1, double u2,
                                   double t, double x, double x_left, double x_right) -> double {
  if (t < 0.0) { throw InvalidParameter("negative time"); }
  if (!(u1 > u2)) { throw InvalidParameter("double Riemann problem requires u1 > u2"); }
  if (t == 0.0) { return (x > x_left && x < x_right) ? u1 : u2; }
  const double c = (f(u1) - f(u2)) / (u1 - u2);
  if (x >= x_right + c * t) { return u2; }
  const double xi = (x - x_left) / t;
  if (xi <= df(u2)) { return u2; }
  if (xi >= df(u1)) { return u1; }
  double lo = u2;
  double hi = u1;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (df(mid) < xi ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Exact wet dam break (zero initial velocity): left rarefaction, right shock.
struct DamBreakSolution {
  double g = 9.8;
  double h_left = 2.5;
  double h_right = 0.025;
  double x0 = 5.0;
  double h_mid = 0.0;
  double u_mid = 0.0;
  double shock_speed = 0.0;

  DamBreakSolution(double g_grav, double hl, double hr, double x_dam)
      : g(g_grav), h_left(hl), h_right(hr), x0(x_dam) {
    if (!(hl > hr && hr > 0.0)) { throw InvalidParameter("wet dam break requires h_left > h_right > 0"); }
    auto phi = [this](double h) {
      const double left = 2.0 * (std::sqrt(g * h) - std::sqrt(g * h_left));
      const double right = (h - h_right) * std::sqrt(0.5 * g * (h + h_right) / (h * h_right));
      return left + right;
    };
    double lo = h_right;
    double hi = h_left;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (phi(mid) < 0.0 ? lo : hi) = mid;
    }
    h_mid = 0.5 * (lo + hi);
    u_mid = -2.0 * (std::sqrt(g * h_mid) - std::sqrt(g * h_left));
    shock_speed = h_mid * u_mid / (h_mid - h_right);
  }

  void operator()(double x, double t, std::span<double> q) const {
    if (t < 0.0) { throw InvalidParameter("negative time"); }
    if (t == 0.0) {
      q[0] = x <= x0 ? h_left : h_right;
      q[1] = 0.0;
      return;
    }
    const double xi = (x - x0) / t;
    const double cl = std::sqrt(g * h_left);
    if (xi <= -cl) {
      q[0] = h_left;
      q[1] = 0.0;
    } else if (xi <= u_mid - std::sqrt(g * h_mid)) {
      const double c = (2.0 * cl - xi) / 3.0;
      q[0] = c * c / g;
      q[1] = q[0] * (2.0 / 3.0) * (cl + xi);
    } else if (xi < shock_speed) {
      q[0] = h_mid;
      q[1] = h_mid * u_mid;
    } else {
      q[0] = h_right;
      q[1] = 0.0;
    }
  }
};

// =================================================================================================
// A fully specified test case: law with initial data, domain, boundary and the
// exact shock trajectory when one exists.
struct Problem {
  std::string id;
  ConservationLaw law;
  double a = -1.0;
  double b = 1.0;
  Boundary boundary = Boundary::Periodic;
  double final_time = 1.0;
  std::optional<double> shock_origin;
  std::optional<double> shock_speed;
  std::array<double, 2> shock_window{-1.0, 1.0};

  [[nodiscard]] auto exact_shock_location(double t) const -> std::optional<double> {
    if (!shock_origin || !shock_speed) { return std::nullopt; }
    return *shock_origin + *shock_speed * t;
  }
};

struct ProblemParams {
  double u1 = 2.0;
  double u2 = 1e-13;
  double a = 0.5;
  double g_grav = 9.8;
  bool buckley_standard = false;
  std::string ic = "double_rp";  // burgers: double_rp | smooth | step
  std::optional<double> final_time;
  std::optional<Boundary> boundary;
};

inline auto make_problem(const std::string& id, const ProblemParams& p) -> Problem {
  Problem prob;
  prob.id = id;
  if (id == "burgers" || id == "buckley") {
    prob.law = id == "burgers" ? make_burgers() : make_buckley_leverett(p.a, p.buckley_standard);
    if (p.ic == "smooth") {
      prob.law.initial = [](double x, std::span<double> u) { u[0] = 1.5 + std::sin(M_PI * x); };
      prob.final_time = 0.2;
      prob.shock_window = {-1.0, 1.0};
    } else if (p.ic == "step") {
      if (id != "burgers") { throw InvalidParameter("step initial data is only defined for burgers"); }
      const double u1 = p.u1;
      const double u2 = p.u2;
      prob.a = 0.0;
      prob.b = 1.0;
      prob.boundary = Boundary::Outflow;
      prob.final_time = 1.0;
      prob.law.initial = [u1, u2](double x, std::span<double> u) { u[0] = x <= 0.2 ? u1 : u2; };
      const double c = 0.5 * (u1 + u2);
      prob.law.reference = [u1, u2, c](double x, double t, std::span<double> u) {
        u[0] = x <= 0.2 + c * t ? u1 : u2;
      };
      prob.shock_origin = 0.2;
      prob.shock_speed = c;
      prob.shock_window = {0.0, 1.0};
    } else if (p.ic == "double_rp") {
      if (!(p.u1 > p.u2 && p.u2 > 0.0)) { throw InvalidParameter("double Riemann problem requires u1 > u2 > 0"); }
      const double u1 = p.u1;
      const double u2 = p.u2;
      prob.law.initial = [u1, u2](double x, std::span<double> u) { u[0] = (x > -0.5 && x < 0.5) ? u1 : u2; };
      const ConservationLaw law = prob.law;
      if (id == "burgers") {
        prob.law.reference = [u1, u2](double x, double t, std::span<double> u) {
          u[0] = exact_burgers_double_rp(u1, u2, t, x);
        };
        prob.shock_speed = 0.5 * (u1 + u2);
        prob.final_time = 0.4;
      } else {
        const double a = p.a;
        const bool standard = p.buckley_standard;
        auto df = [a, standard](double u) {
          const double d = standard ? u * u + a * (1.0 - u) * (1.0 - u) : u * u + a * (1.0 - u * u);
          return standard ? 2.0 * a * u * (1.0 - u) / (d * d) : 2.0 * a * u / (d * d);
        };
        auto f = [law](double u) { return law.f(u); };
        prob.law.reference = [f, df, u1, u2](double x, double t, std::span<double> u) {
          u[0] = exact_convex_double_rp(f, df, u1, u2, t, x, -0.5, 0.5);
        };
        prob.shock_speed = (law.f(u1) - law.f(u2)) / (u1 - u2);
        prob.final_time = 0.4;
      }
      prob.shock_origin = 0.5;
      prob.shock_window = {0.0, 1.0};
    } else {
      throw InvalidParameter("unknown initial condition '" + p.ic + "'");
    }
  } else if (id == "sw_dam_break") {
    prob.law = make_shallow_water(p.g_grav);
    prob.a = 0.0;
    prob.b = 10.0;
    prob.boundary = Boundary::Outflow;
    prob.final_time = 0.7;
    prob.law.initial = [](double x, std::span<double> q) {
      q[0] = x <= 5.0 ? 2.5 : 0.025;
      q[1] = 0.0;
    };
    const DamBreakSolution exact(p.g_grav, 2.5, 0.025, 5.0);
    prob.law.reference = [exact](double x, double t, std::span<double> q) { exact(x, t, q); };
    prob.shock_origin = 5.0;
    prob.shock_speed = exact.shock_speed;
    prob.shock_window = {5.0, 10.0};
  } else {
    throw InvalidParameter("unknown problem id '" + id + "'");
  }
  if (p.final_time) { prob.final_time = *p.final_time; }
  if (p.boundary) { prob.boundary = *p.boundary; }
  return prob;
}

// Cell-centre sampling of the initial data.
inline auto initial_state(const ConservationLaw& law, const Grid1D& grid) -> std::vector<double> {
  if (!law.initial) { throw InvalidParameter("law has no initial condition"); }
  const std::size_t n = grid.cells();
  const std::size_t m = law.components;
  std::vector<double> state(m * n);
  std::vector<double> point(m);
  for (std::size_t i = 0; i < n; ++i) {
    law.initial(grid.center(i), point);
    for (std::size_t c = 0; c < m; ++c) { state[c * n + i] = point[c]; }
  }
  return state;
}

inline auto max_wave_speed(const ConservationLaw& law, const Grid1D& grid, std::span<const double> state)
    -> double {
  const std::size_t n = grid.cells();
  const std::size_t m = law.components;
  std::vector<double> point(m);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < m; ++c) { point[c] = state[c * n + i]; }
    s = std::max(s, law.wave_speed(point));
  }
  return s;
}

// dt = cfl dx / max wave speed, clamped to the remaining time and to dt_max
// (default dx) when the wave speeds vanish.
inline auto select_timestep(double cfl, const Grid1D& grid, double max_speed, double remaining,
                            std::optional<double> dt_max = std::nullopt) -> double {
  if (!(cfl > 0.0)) { throw InvalidParameter("cfl must be positive"); }
  const double cap = dt_max.value_or(grid.dx());
  double dt = max_speed > 0.0 ? cfl * grid.dx() / max_speed : cap;
  if (!std::isfinite(dt)) { dt = cap; }
  return std::min(dt, remaining);
}

inline auto select_timestep(double cfl, const Grid1D& grid, const ConservationLaw& law,
                            std::span<const double> state, double remaining) -> double {
  return select_timestep(cfl, grid, max_wave_speed(law, grid, state), remaining);
}

}  // namespace patankar

#endif  // PATANKAR_PROBLEMS_HPP_
