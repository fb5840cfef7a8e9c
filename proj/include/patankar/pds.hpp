#ifndef PATANKAR_PDS_HPP_
#define PATANKAR_PDS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "patankar/error.hpp"

namespace patankar {

// Column index standing for "outside the system" (boundary in/outflow).
inline constexpr std::size_t kExternal = std::numeric_limits<std::size_t>::max();

// One nonzero production or destruction term. For production entries
// (row i, col j) means i gains from j; for destruction entries i loses to j.
struct PdEntry {
  std::size_t row;
  std::size_t col;
  double value;
};

// Numerical flux through the interface between cells `left` and `right`
// (either may be kExternal at a non-periodic boundary). Positive g moves mass
// from left to right.
struct InterfaceFlux {
  std::size_t left;
  std::size_t right;
  double g;
};

// Production/destruction terms evaluated at one state.
struct PdsMatrices {
  std::vector<PdEntry> production;
  std::vector<PdEntry> destruction;
  // Right-hand side of components that are not Patankar-weighted; zero elsewhere.
  std::vector<double> explicit_rhs;
  // Interface fluxes (unscaled) when the system comes from a flux-form
  // discretization; empty for plain ODE systems.
  std::vector<InterfaceFlux> interfaces;
  double inv_dx = 1.0;

  void clear(std::size_t dimension) {
    production.clear();
    destruction.clear();
    interfaces.clear();
    explicit_rhs.assign(dimension, 0.0);
  }
};

// u' = P(u) 1 - D(u) 1 on the indices flagged in `patankar_mask`, plus an
// ordinary right-hand side on the rest.
struct ProductionDestructionSystem {
  using Evaluator = std::function<void(std::span<const double> u, PdsMatrices& out)>;

  std::size_t dimension = 0;
  std::vector<char> patankar_mask;
  // p_ij == d_ji and p_ii == d_ii == 0 for interior entries; external
  // (boundary) exchange is allowed either way.
  bool conservative = true;
  // Declared sparsity: offsets j - i of the interior entries ({-1, +1} for
  // flux-derived splittings). Empty means an arbitrary index list.
  std::vector<long> band_offsets;
  Evaluator evaluate;

  [[nodiscard]] auto is_patankar(std::size_t i) const -> bool { return patankar_mask[i] != 0; }

  [[nodiscard]] auto eval(std::span<const double> u) const -> PdsMatrices {
    PdsMatrices m;
    m.clear(dimension);
    evaluate(u, m);
    return m;
  }
};

inline auto rhs_from_pds(const PdsMatrices& m) -> std::vector<double> {
  std::vector<double> rhs = m.explicit_rhs;
  for (const auto& e : m.production) { rhs[e.row] += e.value; }
  for (const auto& e : m.destruction) { rhs[e.row] -= e.value; }
  return rhs;
}

// Component i equals sum_j p_ij(u) - sum_j d_ij(u) (plus the explicit part).
inline auto rhs_from_pds(const ProductionDestructionSystem& pds, std::span<const double> u)
    -> std::vector<double> {
  return rhs_from_pds(pds.eval(u));
}

// =================================================================================================
struct ConservationReport {
  double max_exchange_defect = 0.0;  // max |p_ij - d_ji|
  double max_diagonal = 0.0;         // max |p_ii| + |d_ii|
  std::size_t samples = 0;
  [[nodiscard]] auto passed(double tol = 1e-12) const -> bool {
    return max_exchange_defect <= tol && max_diagonal <= tol;
  }
};

// Checks p_ij == d_ji on the given matrices. Entries are summed per (i, j)
// before comparison so split contributions are fine.
inline void accumulate_conservation_defect(const PdsMatrices& m, std::size_t dimension,
                                           ConservationReport& report) {
  auto key = [dimension](std::size_t i, std::size_t j) { return i * dimension + j; };
  std::vector<std::pair<std::size_t, double>> p;
  std::vector<std::pair<std::size_t, double>> d;
  for (const auto& e : m.production) {
    if (e.col == kExternal) { continue; }
    if (e.row == e.col) {
      report.max_diagonal = std::max(report.max_diagonal, std::abs(e.value));
      continue;
    }
    p.emplace_back(key(e.row, e.col), e.value);
  }
  for (const auto& e : m.destruction) {
    if (e.col == kExternal) { continue; }
    if (e.row == e.col) {
      report.max_diagonal = std::max(report.max_diagonal, std::abs(e.value));
      continue;
    }
    d.emplace_back(key(e.col, e.row), e.value);  // d_ji stored under (i, j)
  }
  auto collapse = [](std::vector<std::pair<std::size_t, double>>& v) {
    std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<std::pair<std::size_t, double>> out;
    for (const auto& [k, val] : v) {
      if (!out.empty() && out.back().first == k) {
        out.back().second += val;
      } else {
        out.emplace_back(k, val);
      }
    }
    v = std::move(out);
  };
  collapse(p);
  collapse(d);
  std::size_t ip = 0;
  std::size_t id = 0;
  while (ip < p.size() || id < d.size()) {
    if (id == d.size() || (ip < p.size() && p[ip].first < d[id].first)) {
      report.max_exchange_defect = std::max(report.max_exchange_defect, std::abs(p[ip++].second));
    } else if (ip == p.size() || d[id].first < p[ip].first) {
      report.max_exchange_defect = std::max(report.max_exchange_defect, std::abs(d[id++].second));
    } else {
      report.max_exchange_defect =
          std::max(report.max_exchange_defect, std::abs(p[ip++].second - d[id++].second));
    }
  }
}

// Samples positive states log-uniformly in [1e-12, 1e4] and reports the worst
// conservativity defects.
inline auto verify_conservative(const ProductionDestructionSystem& pds, std::size_t samples,
                                unsigned seed = 12345) -> ConservationReport {
  if (samples < 1) { throw InvalidParameter("verify_conservative needs at least one sample"); }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> exponent(-12.0, 4.0);
  ConservationReport report;
  std::vector<double> u(pds.dimension);
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& v : u) { v = std::pow(10.0, exponent(rng)); }
    accumulate_conservation_defect(pds.eval(u), pds.dimension, report);
    ++report.samples;
  }
  return report;
}

// =================================================================================================
struct PdsOdeProblem {
  ProductionDestructionSystem pds;
  std::vector<double> u0;
  double final_time = 1.0;
  std::function<std::vector<double>(double t)> exact;  // optional
};

// Linear two-species exchange u1' = -a u1 + b u2, u2' = a u1 - b u2.
inline auto make_linear_test_pds(double a, double b, std::vector<double> u0 = {0.9, 0.1},
                                 double final_time = 1.0) -> PdsOdeProblem {
  if (!(a > 0.0 && b > 0.0)) { throw InvalidParameter("linear test rates must be positive"); }
  if (u0.size() != 2 || !(u0[0] > 0.0 && u0[1] > 0.0)) {
    throw InvalidParameter("linear test requires a positive two-component initial state");
  }
  PdsOdeProblem prob;
  prob.pds.dimension = 2;
  prob.pds.patankar_mask = {1, 1};
  prob.pds.conservative = true;
  prob.pds.evaluate = [a, b](std::span<const double> u, PdsMatrices& m) {
    m.production.push_back({0, 1, b * u[1]});
    m.production.push_back({1, 0, a * u[0]});
    m.destruction.push_back({1, 0, b * u[1]});
    m.destruction.push_back({0, 1, a * u[0]});
  };
  prob.u0 = u0;
  prob.final_time = final_time;
  const double mass = u0[0] + u0[1];
  const double steady = b * mass / (a + b);
  prob.exact = [a, b, mass, steady, u0](double t) {
    const double u1 = steady + (u0[0] - steady) * std::exp(-(a + b) * t);
    return std::vector<double>{u1, mass - u1};
  };
  return prob;
}

}  // namespace patankar

#endif  // PATANKAR_PDS_HPP_
