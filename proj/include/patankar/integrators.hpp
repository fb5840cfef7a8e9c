#ifndef PATANKAR_INTEGRATORS_HPP_
#define PATANKAR_INTEGRATORS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include "patankar/error.hpp"
#include "patankar/linear_solver.hpp"
#include "patankar/pds.hpp"

namespace patankar {

// Patankar: production/destruction terms are weighted by (new value / PWD).
// Frozen: all weights are 1, i.e. the underlying explicit Runge-Kutta method.
enum class WeightMode { Patankar, Frozen };

// Denominators below this are clamped; the clamp count is reported.
inline constexpr double kPwdClamp = 1e-300;

struct StageTerm {
  double coeff;
  const PdsMatrices* eval;
};

struct StageOutput {
  std::vector<double> u;
  // Effective interface fluxes sum_t c_t g_t w_donor, aligned with
  // terms[0].eval->interfaces; empty when the matrices carry no interfaces.
  std::vector<double> flux;
  std::size_t clamped = 0;
};

// One modified Patankar stage
//   u_i = base_i + dt sum_t c_t sum_j (p^t_ij u_j / pwd_j - d^t_ij u_i / pwd_i)
// on the Patankar components and base + dt sum_t c_t rhs^t elsewhere. Terms with
// a negative coefficient swap the roles of production and destruction, so the
// cell that loses mass always supplies the weight. Terms sharing the same
// evaluation are merged first. Exchange with kExternal is explicit for sources
// and weighted for sinks.
inline auto patankar_stage(const ProductionDestructionSystem& pds, std::span<const double> base,
                           std::vector<StageTerm> terms, std::span<const double> pwd, double dt,
                           WeightMode mode) -> StageOutput {
  const std::size_t n = pds.dimension;
  std::vector<StageTerm> merged;
  for (const auto& t : terms) {
    auto it = std::find_if(merged.begin(), merged.end(), [&](const StageTerm& x) { return x.eval == t.eval; });
    if (it == merged.end()) {
      merged.push_back(t);
    } else {
      it->coeff += t.coeff;
    }
  }

  StageOutput out;
  out.u.assign(base.begin(), base.end());
  const bool weighted = mode == WeightMode::Patankar;

  // explicit part
  for (const auto& t : merged) {
    const auto& m = *t.eval;
    for (std::size_t i = 0; i < n; ++i) {
      if (!weighted || !pds.is_patankar(i)) { out.u[i] += dt * t.coeff * m.explicit_rhs[i]; }
    }
    if (!weighted) {
      for (const auto& e : m.production) { out.u[e.row] += dt * t.coeff * e.value; }
      for (const auto& e : m.destruction) { out.u[e.row] -= dt * t.coeff * e.value; }
    }
  }

  std::vector<double> weight_den;
  if (weighted) {
    std::vector<std::size_t> compact(n, kExternal);
    std::vector<std::size_t> full;
    for (std::size_t i = 0; i < n; ++i) {
      if (pds.is_patankar(i)) {
        compact[i] = full.size();
        full.push_back(i);
      }
    }
    weight_den.assign(n, 1.0);
    for (std::size_t i : full) {
      double p = pwd[i];
      if (!(p >= kPwdClamp)) {
        if (!(p >= 0.0)) { throw InvalidState("non-positive Patankar weight denominator"); }
        p = kPwdClamp;
        ++out.clamped;
      }
      weight_den[i] = p;
    }

    PatankarLinearSystem sys(full.size());
    const bool conservative = pds.conservative;
    if (conservative) { sys.column_excess.assign(full.size(), 1.0); }
    for (std::size_t k = 0; k < full.size(); ++k) { sys.rhs[k] = base[full[k]]; }
    auto diag_add = [&](std::size_t ci, double v, bool sink) {
      if (conservative) {
        if (sink) { sys.column_excess[ci] += v; }
      } else {
        sys.diagonal[ci] += v;
      }
    };
    auto row_of = [&](std::size_t i) {
      const std::size_t ci = compact[i];
      if (ci == kExternal) { throw InvalidParameter("production/destruction entry on a non-Patankar component"); }
      return ci;
    };
    for (const auto& t : merged) {
      if (t.coeff == 0.0) { continue; }
      const double a = dt * std::abs(t.coeff);
      const bool forward = t.coeff > 0.0;
      for (const auto& e : t.eval->production) {
        const std::size_t ci = row_of(e.row);
        if (e.col == kExternal) {
          if (forward) {
            sys.rhs[ci] += a * e.value;
          } else {
            diag_add(ci, a * e.value / weight_den[e.row], true);
          }
        } else if (forward) {
          sys.off_diagonal.push_back({ci, row_of(e.col), -a * e.value / weight_den[e.col]});
        } else {
          diag_add(ci, a * e.value / weight_den[e.row], false);
        }
      }
      for (const auto& e : t.eval->destruction) {
        const std::size_t ci = row_of(e.row);
        if (e.col == kExternal) {
          if (forward) {
            diag_add(ci, a * e.value / weight_den[e.row], true);
          } else {
            sys.rhs[ci] += a * e.value;
          }
        } else if (forward) {
          diag_add(ci, a * e.value / weight_den[e.row], false);
        } else {
          sys.off_diagonal.push_back({ci, row_of(e.col), -a * e.value / weight_den[e.col]});
        }
      }
    }
    const auto x = solve_banded(sys);
    for (std::size_t k = 0; k < full.size(); ++k) { out.u[full[k]] = x[k]; }
  }

  // effective fluxes
  if (!merged.empty() && !merged.front().eval->interfaces.empty()) {
    const std::size_t count = merged.front().eval->interfaces.size();
    out.flux.assign(count, 0.0);
    for (const auto& t : merged) {
      const auto& faces = t.eval->interfaces;
      if (faces.size() != count) { throw InvalidParameter("stage evaluations disagree on interface count"); }
      for (std::size_t k = 0; k < count; ++k) {
        const auto& f = faces[k];
        double w = 1.0;
        const std::size_t probe = f.left != kExternal ? f.left : f.right;
        if (weighted && probe != kExternal && pds.is_patankar(probe)) {
          const std::size_t donor = t.coeff * f.g > 0.0 ? f.left : f.right;
          if (donor != kExternal) { w = out.u[donor] / weight_den[donor]; }
        }
        out.flux[k] += t.coeff * f.g * w;
      }
    }
  }
  return out;
}

// =================================================================================================
enum class Scheme { MPE, MPRK22, MPSSPRK3, MPDeC };

struct IntegratorSpec {
  std::string id;
  Scheme scheme = Scheme::MPE;
  bool patankar = true;  // false: the underlying explicit method
  std::size_t stages = 1;
  int order = 1;
  double alpha = 1.0;  // MPRK22
  // Butcher tableau of the underlying explicit method (row-major a, b, c);
  // empty for deferred correction.
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> c;
  // deferred correction: Gauss-Lobatto nodes on [0, 1], iterations K and
  // theta[m * (M + 1) + r] = int_0^{t_m} l_r
  std::vector<double> dec_nodes;
  std::size_t dec_iterations = 0;
  std::vector<double> dec_theta;

  [[nodiscard]] auto mode() const -> WeightMode { return patankar ? WeightMode::Patankar : WeightMode::Frozen; }
};

inline auto gauss_lobatto_nodes(std::size_t intervals) -> std::vector<double> {
  switch (intervals) {
    case 1: return {0.0, 1.0};
    case 2: return {0.0, 0.5, 1.0};
    case 3: {
      const double s = 0.5 / std::sqrt(5.0);
      return {0.0, 0.5 - s, 0.5 + s, 1.0};
    }
    case 4: {
      const double s = 0.5 * std::sqrt(3.0 / 7.0);
      return {0.0, 0.5 - s, 0.5, 0.5 + s, 1.0};
    }
    default: throw InvalidParameter("Gauss-Lobatto nodes are available for 1..4 intervals");
  }
}

// theta[m * (M + 1) + r] = int_0^{t_m} l_r(s) ds for the Lagrange basis l_r.
inline auto lagrange_integrals(const std::vector<double>& nodes) -> std::vector<double> {
  const std::size_t p = nodes.size();
  std::vector<double> theta(p * p, 0.0);
  for (std::size_t r = 0; r < p; ++r) {
    std::vector<double> poly{1.0};  // ascending coefficients
    for (std::size_t s = 0; s < p; ++s) {
      if (s == r) { continue; }
      const double den = nodes[r] - nodes[s];
      std::vector<double> next(poly.size() + 1, 0.0);
      for (std::size_t k = 0; k < poly.size(); ++k) {
        next[k + 1] += poly[k] / den;
        next[k] -= nodes[s] * poly[k] / den;
      }
      poly = std::move(next);
    }
    for (std::size_t m = 0; m < p; ++m) {
      double integral = 0.0;
      double tp = nodes[m];
      for (std::size_t k = 0; k < poly.size(); ++k) {
        integral += poly[k] * tp / static_cast<double>(k + 1);
        tp *= nodes[m];
      }
      theta[m * p + r] = integral;
    }
  }
  return theta;
}

inline auto make_mpdec(int order, bool patankar = true) -> IntegratorSpec {
  if (order < 1 || order > 8) { throw InvalidParameter("deferred correction order must be in 1..8"); }
  IntegratorSpec spec;
  spec.id = (patankar ? "mpdec" : "dec") + std::to_string(order);
  spec.scheme = Scheme::MPDeC;
  spec.patankar = patankar;
  spec.order = order;
  const auto intervals = static_cast<std::size_t>((order + 1) / 2);
  spec.dec_nodes = gauss_lobatto_nodes(intervals);
  spec.dec_iterations = static_cast<std::size_t>(order);
  spec.dec_theta = lagrange_integrals(spec.dec_nodes);
  spec.stages = intervals * spec.dec_iterations;
  return spec;
}

inline auto make_mprk22(double alpha, bool patankar = true) -> IntegratorSpec {
  if (!(alpha >= 0.5)) { throw InvalidParameter("MPRK22 requires alpha >= 1/2"); }
  IntegratorSpec spec;
  spec.id = patankar ? "mprk22(alpha=" + std::to_string(alpha) + ")" : "rk22";
  spec.scheme = Scheme::MPRK22;
  spec.patankar = patankar;
  spec.stages = 2;
  spec.order = 2;
  spec.alpha = alpha;
  spec.a = {0.0, 0.0, alpha, 0.0};
  spec.b = {1.0 - 1.0 / (2.0 * alpha), 1.0 / (2.0 * alpha)};
  spec.c = {0.0, alpha};
  return spec;
}

inline auto make_mpe(bool patankar = true) -> IntegratorSpec {
  IntegratorSpec spec;
  spec.id = patankar ? "mpe" : "ee";
  spec.scheme = Scheme::MPE;
  spec.patankar = patankar;
  spec.a = {0.0};
  spec.b = {1.0};
  spec.c = {0.0};
  return spec;
}

// Shu-Osher SSPRK3 in Butcher form.
inline auto make_mpssprk3(bool patankar = true) -> IntegratorSpec {
  IntegratorSpec spec;
  spec.id = patankar ? "mpssprk3" : "ssprk3";
  spec.scheme = Scheme::MPSSPRK3;
  spec.patankar = patankar;
  spec.stages = 3;
  spec.order = 3;
  spec.a = {0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.25, 0.25, 0.0};
  spec.b = {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0};
  spec.c = {0.0, 1.0, 0.5};
  return spec;
}

// Registry: "ee", "ssprk2", "ssprk3", "mpe", "mprk22", "mprk22(α=...)" (or
// alpha=...), "mpssprk3", "mpdec1".."mpdec8".
inline auto make_integrator(const std::string& id) -> IntegratorSpec {
  if (id == "ee") { return make_mpe(false); }
  if (id == "mpe") { return make_mpe(true); }
  if (id == "ssprk2") {
    auto spec = make_mprk22(1.0, false);
    spec.id = "ssprk2";
    return spec;
  }
  if (id == "ssprk3") { return make_mpssprk3(false); }
  if (id == "mpssprk3") { return make_mpssprk3(true); }
  if (id == "mprk22") { return make_mprk22(1.0); }
  static const std::regex mprk(R"(mprk22\((?:α|alpha|a)\s*=\s*([0-9.eE+-]+)\))");
  static const std::regex dec(R"(mpdec([1-8]))");
  std::smatch match;
  if (std::regex_match(id, match, mprk)) {
    double alpha = 0.0;
    try {
      alpha = std::stod(match[1].str());
    } catch (const std::exception&) {
      throw InvalidParameter("bad alpha in integrator id '" + id + "'");
    }
    return make_mprk22(alpha);
  }
  if (std::regex_match(id, match, dec)) { return make_mpdec(std::stoi(match[1].str())); }
  throw InvalidParameter("unknown integrator '" + id + "'");
}

// =================================================================================================
// Per-step record of the non-standard weights and the stage path.
struct StageRecord {
  double dt = 0.0;
  // intermediate states on the path U^n -> U^{n+1} (in evaluation order) and
  // their time labels t_n + c dt, stored as c
  std::vector<std::vector<double>> stages;
  std::vector<double> stage_times;
  std::vector<double> gamma_dev;  // per index: max over stages |gamma^(k) - 1|
  std::vector<double> delta;      // U^{n+1} / sigma, 1 for explicit methods
  std::vector<double> flux;       // effective interface fluxes of the final update
  std::size_t clamped = 0;
};

struct StepResult {
  std::vector<double> u;
  StageRecord record;
};

// Patankar weighting: the ratio u/pwd on Patankar components, 1 elsewhere.
inline auto weight_ratio(const ProductionDestructionSystem& pds, std::span<const double> u,
                         std::span<const double> pwd) -> std::vector<double> {
  std::vector<double> w(u.size(), 1.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (pds.is_patankar(i)) { w[i] = u[i] / std::max(pwd[i], kPwdClamp); }
  }
  return w;
}

// sigma = u^{1 - 1/alpha} U2^{1/alpha}, evaluated in logarithms to avoid
// under/overflow for extreme states.
inline auto mprk22_sigma(std::span<const double> un, std::span<const double> u2, double alpha) -> std::vector<double> {
  std::vector<double> s(un.size());
  for (std::size_t i = 0; i < un.size(); ++i) {
    if (un[i] > 0.0 && u2[i] > 0.0) {
      s[i] = std::exp((1.0 - 1.0 / alpha) * std::log(un[i]) + std::log(u2[i]) / alpha);
    } else {
      s[i] = u2[i];
    }
  }
  return s;
}

// Geometric mean of U^n and U^(2): first-order approximation at t_n + dt/2.
inline auto mpssprk3_pi3(std::span<const double> un, std::span<const double> u2) -> std::vector<double> {
  std::vector<double> s(un.size());
  for (std::size_t i = 0; i < un.size(); ++i) {
    s[i] = un[i] > 0.0 && u2[i] > 0.0 ? std::sqrt(un[i]) * std::sqrt(u2[i]) : 0.5 * (un[i] + u2[i]);
  }
  return s;
}

namespace detail {

inline void track_gamma(const ProductionDestructionSystem& pds, std::span<const double> u, std::span<const double> pwd,
                        std::vector<double>& dev) {
  const auto w = weight_ratio(pds, u, pwd);
  for (std::size_t i = 0; i < dev.size(); ++i) { dev[i] = std::max(dev[i], std::abs(w[i] - 1.0)); }
}

inline void check_input(const ProductionDestructionSystem& pds, std::span<const double> u, double dt, bool patankar) {
  if (u.size() != pds.dimension) { throw InvalidParameter("state size does not match the PDS dimension"); }
  if (!(dt > 0.0) || !std::isfinite(dt)) { throw InvalidParameter("time step must be positive and finite"); }
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i])) { throw InvalidState("non-finite state"); }
    if (patankar && pds.is_patankar(i) && !(u[i] > 0.0)) {
      throw InvalidState("Patankar step requires a positive state (index " + std::to_string(i) + ")");
    }
  }
}

}  // namespace detail

inline auto step(const IntegratorSpec& spec, const ProductionDestructionSystem& pds, std::span<const double> un,
                 double dt, std::optional<WeightMode> force_mode = std::nullopt) -> StepResult {
  const WeightMode mode = force_mode.value_or(spec.mode());
  const bool mp = mode == WeightMode::Patankar;
  detail::check_input(pds, un, dt, mp);
  const std::size_t n = pds.dimension;
  StepResult res;
  auto& rec = res.record;
  rec.dt = dt;
  rec.gamma_dev.assign(n, 0.0);
  auto stage = [&](std::span<const double> base, std::vector<StageTerm> terms, std::span<const double> pwd) {
    auto s = patankar_stage(pds, base, std::move(terms), pwd, dt, mode);
    rec.clamped += s.clamped;
    return s;
  };
  auto finish = [&](StageOutput&& last, std::span<const double> sigma) {
    rec.delta = mp ? weight_ratio(pds, last.u, sigma) : std::vector<double>(n, 1.0);
    rec.flux = std::move(last.flux);
    res.u = std::move(last.u);
  };

  const PdsMatrices e0 = pds.eval(un);
  switch (spec.scheme) {
    case Scheme::MPE: {
      finish(stage(un, {{1.0, &e0}}, un), un);
      break;
    }
    case Scheme::MPRK22: {
      const double alpha = spec.alpha;
      auto s2 = stage(un, {{alpha, &e0}}, un);
      if (mp) { detail::track_gamma(pds, s2.u, un, rec.gamma_dev); }
      const PdsMatrices e1 = pds.eval(s2.u);
      const auto sigma = mp ? mprk22_sigma(un, s2.u, alpha) : s2.u;
      auto last = stage(un, {{spec.b[0], &e0}, {spec.b[1], &e1}}, sigma);
      rec.stages.push_back(std::move(s2.u));
      rec.stage_times.push_back(alpha);
      finish(std::move(last), sigma);
      break;
    }
    case Scheme::MPSSPRK3: {
      // pi2: MPE predictor, so U^(2) / pi2 = 1 + O(dt^2); with pi2 = U^n the
      // O(dt^2) error of U^(2) would reach the final update through b_2.
      const auto pi2 = mp ? stage(un, {{1.0, &e0}}, un).u : std::vector<double>(un.begin(), un.end());
      auto s2 = stage(un, {{1.0, &e0}}, pi2);
      const PdsMatrices e1 = pds.eval(s2.u);
      const auto pi3 = mpssprk3_pi3(un, s2.u);
      auto s3 = stage(un, {{0.25, &e0}, {0.25, &e1}}, pi3);
      const PdsMatrices e2 = pds.eval(s3.u);
      // sigma: second-order MPRK22(1) solution built from U^n and U^(2)
      std::vector<double> sigma = s2.u;
      if (mp) {
        sigma = stage(un, {{0.5, &e0}, {0.5, &e1}}, s2.u).u;
        detail::track_gamma(pds, s2.u, pi2, rec.gamma_dev);
        detail::track_gamma(pds, s3.u, pi3, rec.gamma_dev);
      }
      auto last = stage(un, {{1.0 / 6.0, &e0}, {1.0 / 6.0, &e1}, {2.0 / 3.0, &e2}}, sigma);
      rec.stages.push_back(std::move(s2.u));
      rec.stages.push_back(std::move(s3.u));
      rec.stage_times = {1.0, 0.5};
      finish(std::move(last), sigma);
      break;
    }
    case Scheme::MPDeC: {
      const auto& nodes = spec.dec_nodes;
      const std::size_t p = nodes.size();
      const std::size_t intervals = p - 1;
      // previous iterate at every subnode and its evaluation (all U^n initially)
      std::vector<std::vector<double>> prev(p, std::vector<double>(un.begin(), un.end()));
      std::vector<std::shared_ptr<const PdsMatrices>> evals(p);
      auto shared_e0 = std::shared_ptr<const PdsMatrices>(&e0, [](const PdsMatrices*) {});
      std::fill(evals.begin(), evals.end(), shared_e0);
      for (std::size_t k = 1; k <= spec.dec_iterations; ++k) {
        std::vector<std::vector<double>> next(p);
        next[0] = prev[0];
        const bool final_iteration = k == spec.dec_iterations;
        for (std::size_t m = 1; m <= intervals; ++m) {
          std::vector<StageTerm> terms;
          for (std::size_t r = 0; r < p; ++r) { terms.push_back({spec.dec_theta[m * p + r], evals[r].get()}); }
          auto s = stage(un, std::move(terms), prev[m]);
          if (final_iteration && m == intervals) {
            finish(std::move(s), prev[m]);
          } else {
            if (mp) { detail::track_gamma(pds, s.u, prev[m], rec.gamma_dev); }
            rec.stages.push_back(s.u);
            rec.stage_times.push_back(nodes[m]);
            next[m] = std::move(s.u);
          }
        }
        if (!final_iteration) {
          for (std::size_t m = 1; m <= intervals; ++m) {
            evals[m] = std::make_shared<const PdsMatrices>(pds.eval(next[m]));
          }
          prev = std::move(next);
        }
      }
      break;
    }
  }
  return res;
}

}  // namespace patankar

#endif  // PATANKAR_INTEGRATORS_HPP_
