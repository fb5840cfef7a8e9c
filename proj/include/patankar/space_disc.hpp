#ifndef PATANKAR_SPACE_DISC_HPP_
#define PATANKAR_SPACE_DISC_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "patankar/error.hpp"
#include "patankar/grid.hpp"
#include "patankar/pds.hpp"
#include "patankar/problems.hpp"

namespace patankar {

// =================================================================================================
// Interface flux g_{i+1/2} computed from the cells i-p, ..., i+1+q. The window
// handed to `eval` is component-major: window[c * width() + k] is component c
// of cell i - p + k, so the left cell sits at k == p and the right one at p + 1.
struct NumericalFlux {
  using Eval = std::function<void(const ConservationLaw& law, std::span<const double> window,
                                  std::span<double> g)>;
  std::string id;
  std::size_t left_width = 0;
  std::size_t right_width = 0;
  Eval eval;

  [[nodiscard]] auto width() const -> std::size_t { return left_width + right_width + 2; }
};

// (p, d) with d - p == g and p * d == 0.
struct SplitFlux {
  double production;
  double destruction;
};

inline auto split_interface_flux(double g) -> SplitFlux {
  if (std::isnan(g)) { throw InvalidState("NaN interface flux"); }
  return {-std::min(g, 0.0), std::max(g, 0.0)};
}

// max(g, 0) delta_i + min(g, 0) delta_{i+1}
inline auto modified_flux(double g, double delta_left, double delta_right) -> double {
  return std::max(g, 0.0) * delta_left + std::min(g, 0.0) * delta_right;
}

namespace detail {

inline void gather_state(std::span<const double> window, std::size_t width, std::size_t k,
                         std::size_t m, std::span<double> out) {
  for (std::size_t c = 0; c < m; ++c) { out[c] = window[c * width + k]; }
}

inline void rusanov(const ConservationLaw& law, std::span<const double> ul, std::span<const double> ur,
                    std::span<double> g) {
  const std::size_t m = law.components;
  std::array<double, 4> buf{};
  std::span<double> fl(buf.data(), m);
  std::span<double> fr(buf.data() + 2, m);
  law.flux(ul, fl);
  law.flux(ur, fr);
  const double alpha = std::max(law.wave_speed(ul), law.wave_speed(ur));
  for (std::size_t c = 0; c < m; ++c) { g[c] = 0.5 * (fl[c] + fr[c]) - 0.5 * alpha * (ur[c] - ul[c]); }
}

inline auto minmod(double a, double b) -> double {
  if (a * b <= 0.0) { return 0.0; }
  return a > 0.0 ? std::min(a, b) : std::max(a, b);
}

}  // namespace detail

inline auto upwind_flux() -> NumericalFlux {
  NumericalFlux flux;
  flux.id = "upwind";
  flux.eval = [](const ConservationLaw& law, std::span<const double> window, std::span<double> g) {
    if (law.components != 1) { throw InvalidParameter("upwind flux is only defined for scalar laws"); }
    g[0] = law.f(window[0]);
  };
  return flux;
}

inline auto rusanov_flux() -> NumericalFlux {
  NumericalFlux flux;
  flux.id = "rusanov";
  flux.eval = [](const ConservationLaw& law, std::span<const double> window, std::span<double> g) {
    const std::size_t m = law.components;
    std::array<double, 4> buf{};
    std::span<double> ul(buf.data(), m);
    std::span<double> ur(buf.data() + 2, m);
    detail::gather_state(window, 2, 0, m, ul);
    detail::gather_state(window, 2, 1, m, ur);
    detail::rusanov(law, ul, ur, g);
  };
  return flux;
}

// =================================================================================================
inline constexpr double kWenoEpsilon = 1e-6;

// Edge values (x_{i-1/2}^+, x_{i+1/2}^-) of the centre cell of `window`
// (3 cells for order 2 and 3, 5 cells for order 5). Order 2 is a minmod MUSCL
// slope, orders 3 and 5 are WENO-JS.
inline auto weno_reconstruct(int order, std::span<const double> window) -> std::pair<double, double> {
  for (double v : window) {
    if (!std::isfinite(v)) { throw InvalidState("non-finite value in reconstruction"); }
  }
  auto need = [&](std::size_t n) {
    if (window.size() != n) { throw InvalidParameter("reconstruction window has wrong length"); }
  };
  if (order == 2) {
    need(3);
    const double s = detail::minmod(window[1] - window[0], window[2] - window[1]);
    return {window[1] - 0.5 * s, window[1] + 0.5 * s};
  }
  if (order == 3) {
    need(3);
    auto edge = [](double um, double u0, double up) {
      const double q0 = -0.5 * um + 1.5 * u0;
      const double q1 = 0.5 * u0 + 0.5 * up;
      const double a0 = (1.0 / 3.0) / std::pow(kWenoEpsilon + (u0 - um) * (u0 - um), 2);
      const double a1 = (2.0 / 3.0) / std::pow(kWenoEpsilon + (up - u0) * (up - u0), 2);
      return (a0 * q0 + a1 * q1) / (a0 + a1);
    };
    return {edge(window[2], window[1], window[0]), edge(window[0], window[1], window[2])};
  }
  if (order == 5) {
    need(5);
    auto edge = [](double umm, double um, double u0, double up, double upp) {
      const double q0 = (2.0 * umm - 7.0 * um + 11.0 * u0) / 6.0;
      const double q1 = (-um + 5.0 * u0 + 2.0 * up) / 6.0;
      const double q2 = (2.0 * u0 + 5.0 * up - upp) / 6.0;
      auto sq = [](double v) { return v * v; };
      const double b0 = 13.0 / 12.0 * sq(umm - 2.0 * um + u0) + 0.25 * sq(umm - 4.0 * um + 3.0 * u0);
      const double b1 = 13.0 / 12.0 * sq(um - 2.0 * u0 + up) + 0.25 * sq(um - up);
      const double b2 = 13.0 / 12.0 * sq(u0 - 2.0 * up + upp) + 0.25 * sq(3.0 * u0 - 4.0 * up + upp);
      const double a0 = 0.1 / sq(kWenoEpsilon + b0);
      const double a1 = 0.6 / sq(kWenoEpsilon + b1);
      const double a2 = 0.3 / sq(kWenoEpsilon + b2);
      return (a0 * q0 + a1 * q1 + a2 * q2) / (a0 + a1 + a2);
    };
    return {edge(window[4], window[3], window[2], window[1], window[0]),
            edge(window[0], window[1], window[2], window[3], window[4])};
  }
  throw InvalidParameter("reconstruction order must be 2, 3 or 5");
}

// Scales the reconstruction towards the cell average so every point is at
// least `floor`; the average is unchanged. Returns the scaling factor.
inline auto positivity_limiter(double average, std::span<double> values, double floor) -> double {
  if (average < floor) { throw InvalidState("cell average below positivity floor"); }
  const double lowest = *std::min_element(values.begin(), values.end());
  if (lowest >= floor) { return 1.0; }
  const double theta = average > floor ? (average - floor) / (average - lowest) : 0.0;
  // the max only absorbs rounding at the lowest point
  for (double& v : values) { v = std::max(average + theta * (v - average), floor); }
  return theta;
}

inline auto weno_flux(int order) -> NumericalFlux {
  if (order != 2 && order != 3 && order != 5) { throw InvalidParameter("WENO order must be 2, 3 or 5"); }
  NumericalFlux flux;
  flux.id = "weno" + std::to_string(order);
  const std::size_t half = order == 5 ? 2 : 1;
  flux.left_width = half;
  flux.right_width = half;
  flux.eval = [order, half](const ConservationLaw& law, std::span<const double> window, std::span<double> g) {
    const std::size_t m = law.components;
    const std::size_t width = 2 * half + 2;
    const std::size_t cell_width = 2 * half + 1;
    std::array<double, 4> buf{};
    std::span<double> ul(buf.data(), m);
    std::span<double> ur(buf.data() + 2, m);
    for (std::size_t c = 0; c < m; ++c) {
      const auto comp = window.subspan(c * width, width);
      auto [l_minus, l_plus] = weno_reconstruct(order, comp.subspan(0, cell_width));
      auto [r_minus, r_plus] = weno_reconstruct(order, comp.subspan(1, cell_width));
      if (law.is_positive(c)) {
        // floor is min(1e-14, average) so a cell sitting below it keeps its
        // (positive) constant value
        std::array<double, 2> left{l_minus, l_plus};
        std::array<double, 2> right{r_minus, r_plus};
        const double avg_l = comp[half];
        const double avg_r = comp[half + 1];
        positivity_limiter(avg_l, left, std::min(kPositivityFloor, avg_l));
        positivity_limiter(avg_r, right, std::min(kPositivityFloor, avg_r));
        l_plus = left[1];
        r_minus = right[0];
      }
      ul[c] = l_plus;
      ur[c] = r_minus;
    }
    detail::rusanov(law, ul, ur, g);
  };
  return flux;
}

// Flux registry: "upwind", "rusanov", "weno2", "weno3", "weno5".
inline auto make_flux(const std::string& id) -> NumericalFlux {
  if (id == "upwind") { return upwind_flux(); }
  if (id == "rusanov") { return rusanov_flux(); }
  if (id == "weno2") { return weno_flux(2); }
  if (id == "weno3") { return weno_flux(3); }
  if (id == "weno5") { return weno_flux(5); }
  throw InvalidParameter("unknown flux '" + id + "'");
}

// =================================================================================================
// Evaluates g on a constant stencil (consistency) or on a perturbed one.
inline void evaluate_on_stencil(const NumericalFlux& flux, const ConservationLaw& law,
                                const std::vector<std::vector<double>>& cells, std::span<double> g) {
  const std::size_t m = law.components;
  const std::size_t w = flux.width();
  std::vector<double> window(m * w);
  for (std::size_t k = 0; k < w; ++k) {
    for (std::size_t c = 0; c < m; ++c) { window[c * w + k] = cells[k][c]; }
  }
  flux.eval(law, window, g);
}

using StateSampler = std::function<std::vector<double>(std::mt19937_64&)>;

// Admissible sample states: positive scalars in [1e-3, 2] or wet shallow water.
inline auto default_sampler(const ConservationLaw& law) -> StateSampler {
  if (law.components == 2) {
    return [](std::mt19937_64& rng) {
      std::uniform_real_distribution<double> h(0.1, 3.0);
      std::uniform_real_distribution<double> v(-1.0, 1.0);
      const double hh = h(rng);
      return std::vector<double>{hh, hh * v(rng)};
    };
  }
  return [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(1e-3, 2.0);
    return std::vector<double>{u(rng)};
  };
}

// max_k |g(u_k, ..., u_k) - f(u_k)| over sampled constant states.
inline auto flux_consistency_defect(const NumericalFlux& flux, const ConservationLaw& law, std::size_t samples,
                                    unsigned seed = 7) -> double {
  std::mt19937_64 rng(seed);
  const auto sampler = default_sampler(law);
  const std::size_t m = law.components;
  std::vector<double> g(m);
  std::vector<double> f(m);
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto u = sampler(rng);
    evaluate_on_stencil(flux, law, std::vector<std::vector<double>>(flux.width(), u), g);
    law.flux(u, f);
    for (std::size_t c = 0; c < m; ++c) { worst = std::max(worst, std::abs(g[c] - f[c])); }
  }
  return worst;
}

// Largest observed |g(args) - f(u)| / max_j |arg_j - u| for small random
// perturbations around sampled states; a finite value is the recorded K.
inline auto flux_lipschitz_estimate(const NumericalFlux& flux, const ConservationLaw& law, std::size_t samples,
                                    double radius = 1e-3, unsigned seed = 11) -> double {
  std::mt19937_64 rng(seed);
  const auto sampler = default_sampler(law);
  std::uniform_real_distribution<double> pert(-1.0, 1.0);
  const std::size_t m = law.components;
  std::vector<double> g(m);
  std::vector<double> f(m);
  double k_max = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto u = sampler(rng);
    law.flux(u, f);
    std::vector<std::vector<double>> cells(flux.width(), u);
    double dist = 0.0;
    for (auto& cell : cells) {
      for (std::size_t c = 0; c < m; ++c) {
        const double d = radius * std::max(std::abs(u[c]), 1e-2) * pert(rng);
        cell[c] += d;
        dist = std::max(dist, std::abs(d));
      }
    }
    evaluate_on_stencil(flux, law, cells, g);
    if (dist == 0.0) { continue; }
    for (std::size_t c = 0; c < m; ++c) { k_max = std::max(k_max, std::abs(g[c] - f[c]) / dist); }
  }
  return k_max;
}

// =================================================================================================
// Flux-form semi-discretisation U_i' = -(g_{i+1/2} - g_{i-1/2}) / dx written as
// a conservative PDS: positive fluxes are destruction of the left cell and
// production of the right one, negative fluxes the other way round. Components
// outside law.positive_components go to the explicit right-hand side.
class SemiDiscretization {
 public:
  SemiDiscretization(ConservationLaw law, NumericalFlux flux, Grid1D grid)
      : law_(std::move(law)), flux_(std::move(flux)), grid_(grid) {}

  [[nodiscard]] auto law() const -> const ConservationLaw& { return law_; }
  [[nodiscard]] auto flux() const -> const NumericalFlux& { return flux_; }
  [[nodiscard]] auto grid() const -> const Grid1D& { return grid_; }
  [[nodiscard]] auto dimension() const -> std::size_t { return law_.components * grid_.cells(); }

  // Number of interfaces carrying flux: N (periodic) or N + 1 (outflow).
  [[nodiscard]] auto interface_count() const -> std::size_t {
    return grid_.periodic() ? grid_.cells() : grid_.cells() + 1;
  }

  // Interface k separates cells k - 1 and k for outflow (cell -1 and N are
  // ghosts) and cells k and k + 1 (mod N) for periodic grids. Returns the
  // component-major flux values g[c * interface_count() + k].
  [[nodiscard]] auto interface_fluxes(std::span<const double> state) const -> std::vector<double> {
    const std::size_t n = grid_.cells();
    const std::size_t m = law_.components;
    const std::size_t w = flux_.width();
    const std::size_t count = interface_count();
    std::vector<double> out(m * count);
    std::vector<double> window(m * w);
    std::vector<double> g(m);
    for (std::size_t k = 0; k < count; ++k) {
      const long left = left_cell(k);
      for (std::size_t j = 0; j < w; ++j) {
        const std::size_t cell = grid_.resolve(left - static_cast<long>(flux_.left_width) + static_cast<long>(j));
        for (std::size_t c = 0; c < m; ++c) { window[c * w + j] = state[c * n + cell]; }
      }
      flux_.eval(law_, window, g);
      for (std::size_t c = 0; c < m; ++c) {
        if (std::isnan(g[c])) { throw InvalidState("NaN interface flux at interface " + std::to_string(k)); }
        out[c * count + k] = g[c];
      }
    }
    return out;
  }

  // State indices of the cells on either side of interface k for component c
  // (kExternal beyond an outflow boundary).
  [[nodiscard]] auto interface_cells(std::size_t k, std::size_t c) const -> std::pair<std::size_t, std::size_t> {
    const std::size_t n = grid_.cells();
    const long left = left_cell(k);
    const long right = left + 1;
    auto index = [&](long i) -> std::size_t {
      if (grid_.periodic()) { return c * n + grid_.resolve(i); }
      if (i < 0 || i >= static_cast<long>(n)) { return kExternal; }
      return c * n + static_cast<std::size_t>(i);
    };
    return {index(left), index(right)};
  }

  void assemble(std::span<const double> state, PdsMatrices& out) const {
    const std::size_t m = law_.components;
    const std::size_t count = interface_count();
    const double inv_dx = 1.0 / grid_.dx();
    const auto g = interface_fluxes(state);
    out.clear(dimension());
    out.inv_dx = inv_dx;
    out.production.reserve(count * m);
    out.destruction.reserve(count * m);
    out.interfaces.reserve(count * m);
    for (std::size_t c = 0; c < m; ++c) {
      const bool mp = law_.is_positive(c);
      for (std::size_t k = 0; k < count; ++k) {
        const double gk = g[c * count + k];
        const auto [l, r] = interface_cells(k, c);
        out.interfaces.push_back({l, r, gk});
        if (!mp) {
          if (l != kExternal) { out.explicit_rhs[l] -= gk * inv_dx; }
          if (r != kExternal) { out.explicit_rhs[r] += gk * inv_dx; }
          continue;
        }
        const auto [p, d] = split_interface_flux(gk);
        if (d > 0.0) {  // mass moves left -> right
          if (l != kExternal) { out.destruction.push_back({l, r, d * inv_dx}); }
          if (r != kExternal) { out.production.push_back({r, l, d * inv_dx}); }
        } else if (p > 0.0) {
          if (r != kExternal) { out.destruction.push_back({r, l, p * inv_dx}); }
          if (l != kExternal) { out.production.push_back({l, r, p * inv_dx}); }
        }
      }
    }
  }

  [[nodiscard]] auto pds() const -> ProductionDestructionSystem {
    ProductionDestructionSystem sys;
    sys.dimension = dimension();
    sys.patankar_mask.assign(dimension(), 0);
    for (std::size_t c : law_.positive_components) {
      std::fill_n(sys.patankar_mask.begin() + static_cast<long>(c * grid_.cells()), grid_.cells(), 1);
    }
    sys.conservative = true;
    sys.band_offsets = {-1, 1};
    // copy of *this keeps the evaluator valid independently of the caller
    sys.evaluate = [self = std::make_shared<SemiDiscretization>(*this)](std::span<const double> u, PdsMatrices& m) {
      self->assemble(u, m);
    };
    return sys;
  }

  // -(g_{i+1/2} - g_{i-1/2}) / dx, computed directly from the fluxes.
  [[nodiscard]] auto flux_difference_rhs(std::span<const double> state) const -> std::vector<double> {
    const std::size_t m = law_.components;
    const std::size_t count = interface_count();
    const auto g = interface_fluxes(state);
    std::vector<double> rhs(dimension(), 0.0);
    for (std::size_t c = 0; c < m; ++c) {
      for (std::size_t k = 0; k < count; ++k) {
        const auto [l, r] = interface_cells(k, c);
        if (l != kExternal) { rhs[l] -= g[c * count + k] / grid_.dx(); }
        if (r != kExternal) { rhs[r] += g[c * count + k] / grid_.dx(); }
      }
    }
    return rhs;
  }

 private:
  [[nodiscard]] auto left_cell(std::size_t k) const -> long {
    return grid_.periodic() ? static_cast<long>(k) : static_cast<long>(k) - 1;
  }

  ConservationLaw law_;
  NumericalFlux flux_;
  Grid1D grid_;
};

// PDS of the flux-form scheme together with its matrices at `state`.
inline auto assemble_semidiscretization(const ConservationLaw& law, const NumericalFlux& flux, const Grid1D& grid,
                                        std::span<const double> state) -> std::pair<ProductionDestructionSystem, PdsMatrices> {
  const SemiDiscretization sd(law, flux, grid);
  PdsMatrices m;
  sd.assemble(state, m);
  return {sd.pds(), std::move(m)};
}

}  // namespace patankar

#endif  // PATANKAR_SPACE_DISC_HPP_
