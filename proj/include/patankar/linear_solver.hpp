#ifndef PATANKAR_LINEAR_SOLVER_HPP_
#define PATANKAR_LINEAR_SOLVER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "patankar/error.hpp"
#include "patankar/pds.hpp"

namespace patankar {

// M x = rhs with M a Z-matrix (off-diagonals <= 0) that is column diagonally
// dominant. When `column_excess` is given, diag_j == excess_j + sum_i |M_ij|
// and the elimination never subtracts: every intermediate is a sum of
// nonnegative terms, so positive right-hand sides give positive solutions.
struct PatankarLinearSystem {
  std::size_t size = 0;
  std::vector<double> diagonal;
  std::vector<double> column_excess;  // optional
  std::vector<PdEntry> off_diagonal;  // duplicates are summed
  std::vector<double> rhs;

  explicit PatankarLinearSystem(std::size_t n = 0) : size(n), diagonal(n, 1.0), rhs(n, 0.0) {}

  [[nodiscard]] auto has_excess() const -> bool { return column_excess.size() == size; }

  // Dense copy including the diagonal; intended for tests and small systems.
  [[nodiscard]] auto dense() const -> std::vector<double> {
    std::vector<double> a(size * size, 0.0);
    for (const auto& e : off_diagonal) { a[e.row * size + e.col] += e.value; }
    for (std::size_t j = 0; j < size; ++j) {
      if (has_excess()) {
        double s = column_excess[j];
        for (std::size_t i = 0; i < size; ++i) {
          if (i != j) { s += std::abs(a[i * size + j]); }
        }
        a[j * size + j] = s;
      } else {
        a[j * size + j] = diagonal[j];
      }
    }
    return a;
  }
};

namespace detail {

inline auto collapse_entries(std::vector<PdEntry> entries) -> std::vector<PdEntry> {
  std::sort(entries.begin(), entries.end(), [](const PdEntry& x, const PdEntry& y) {
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });
  std::vector<PdEntry> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    if (!out.empty() && out.back().row == e.row && out.back().col == e.col) {
      out.back().value += e.value;
    } else {
      out.push_back(e);
    }
  }
  return out;
}

inline auto is_cyclic_tridiagonal(const std::vector<PdEntry>& entries, std::size_t n) -> bool {
  if (n < 3) { return false; }
  return std::all_of(entries.begin(), entries.end(), [n](const PdEntry& e) {
    return e.row + 1 == e.col || e.col + 1 == e.row || (e.row == 0 && e.col == n - 1) ||
           (e.row == n - 1 && e.col == 0);
  });
}

// Subtraction-free elimination of a cyclic tridiagonal Z-matrix. The last
// unknown is the border: fill-in is confined to row and column n-1.
inline auto solve_cyclic_gth(const std::vector<PdEntry>& entries, std::vector<double> excess,
                             std::vector<double> rhs) -> std::vector<double> {
  const std::size_t n = rhs.size();
  const std::size_t last = n - 1;
  std::vector<double> lower(n, 0.0);   // |M(i, i-1)|, 1 <= i <= n-2
  std::vector<double> upper(n, 0.0);   // |M(i, i+1)|, i <= n-3
  std::vector<double> border_col(n, 0.0);  // |M(i, n-1)|, i <= n-2
  std::vector<double> border_row(n, 0.0);  // |M(n-1, j)|, j <= n-2
  for (const auto& e : entries) {
    const double v = std::abs(e.value);
    if (e.col == last && e.row < last) {
      border_col[e.row] += v;
    } else if (e.row == last && e.col < last) {
      border_row[e.col] += v;
    } else if (e.col + 1 == e.row) {
      lower[e.row] += v;
    } else {
      upper[e.row] += v;
    }
  }
  std::vector<double> pivot(n, 0.0);
  for (std::size_t k = 0; k < last; ++k) {
    const bool interior = k + 2 <= last;  // row k+1 is not the border row
    pivot[k] = excess[k] + (interior ? lower[k + 1] : 0.0) + border_row[k];
    if (!(pivot[k] > 0.0)) { throw SolverFailure("zero pivot in cyclic elimination"); }
    const double scale = excess[k] / pivot[k];
    if (interior) {
      excess[k + 1] += upper[k] * scale;
      border_col[k + 1] += lower[k + 1] * border_col[k] / pivot[k];
      border_row[k + 1] += border_row[k] * upper[k] / pivot[k];
      rhs[k + 1] += lower[k + 1] * rhs[k] / pivot[k];
    }
    excess[last] += border_col[k] * scale;
    rhs[last] += border_row[k] * rhs[k] / pivot[k];
  }
  if (!(excess[last] > 0.0)) { throw SolverFailure("zero pivot in cyclic elimination"); }
  std::vector<double> x(n);
  x[last] = rhs[last] / excess[last];
  for (std::size_t kk = last; kk-- > 0;) {
    double s = rhs[kk] + border_col[kk] * x[last];
    if (kk + 2 <= last) { s += upper[kk] * x[kk + 1]; }
    x[kk] = s / pivot[kk];
  }
  return x;
}

// Dense subtraction-free elimination (GTH-style) for small Z-matrices.
inline auto solve_dense_gth(const PatankarLinearSystem& sys, std::vector<double> excess,
                            std::vector<double> rhs) -> std::vector<double> {
  const std::size_t n = sys.size;
  std::vector<double> a(n * n, 0.0);  // magnitudes of off-diagonals
  for (const auto& e : sys.off_diagonal) { a[e.row * n + e.col] += std::abs(e.value); }
  std::vector<double> pivot(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double d = excess[k];
    for (std::size_t i = k + 1; i < n; ++i) { d += a[i * n + k]; }
    if (!(d > 0.0)) { throw SolverFailure("zero pivot in dense elimination"); }
    pivot[k] = d;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double lik = a[i * n + k];
      if (lik == 0.0) { continue; }
      rhs[i] += lik * rhs[k] / d;
      for (std::size_t j = k + 1; j < n; ++j) {
        if (j != i) { a[i * n + j] += lik * a[k * n + j] / d; }
      }
    }
    for (std::size_t j = k + 1; j < n; ++j) { excess[j] += a[k * n + j] * excess[k] / d; }
  }
  std::vector<double> x(n);
  for (std::size_t kk = n; kk-- > 0;) {
    double s = rhs[kk];
    for (std::size_t j = kk + 1; j < n; ++j) { s += a[kk * n + j] * x[j]; }
    x[kk] = s / pivot[kk];
  }
  return x;
}

// Gaussian elimination with partial pivoting; fallback for systems that are
// not Z-matrices.
inline auto solve_dense_pivoting(std::vector<double> a, std::vector<double> b) -> std::vector<double> {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a[i * n + k]) > std::abs(a[p * n + k])) { p = i; }
    }
    if (a[p * n + k] == 0.0) { throw SolverFailure("singular Patankar matrix"); }
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) { std::swap(a[k * n + j], a[p * n + j]); }
      std::swap(b[k], b[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = a[i * n + k] / a[k * n + k];
      if (l == 0.0) { continue; }
      for (std::size_t j = k; j < n; ++j) { a[i * n + j] -= l * a[k * n + j]; }
      b[i] -= l * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t kk = n; kk-- > 0;) {
    double s = b[kk];
    for (std::size_t j = kk + 1; j < n; ++j) { s -= a[kk * n + j] * x[j]; }
    x[kk] = s / a[kk * n + kk];
  }
  return x;
}

}  // namespace detail

struct SolveReport {
  double residual = 0.0;  // ||M x - rhs||_inf
  double scale = 0.0;     // max_i (|rhs_i| + sum_j |M_ij x_j|)
  bool cyclic_path = false;
};

inline constexpr double kSolveResidualTolerance = 1e-12;
inline constexpr std::size_t kDenseLimit = 512;

// Direct solve exploiting the (cyclic) tridiagonal structure of flux-derived
// splittings; small general systems fall back to dense elimination. The
// residual is checked against kSolveResidualTolerance relative to the
// magnitude of the terms that enter M x.
inline auto solve_banded(const PatankarLinearSystem& sys, SolveReport* report = nullptr)
    -> std::vector<double> {
  const std::size_t n = sys.size;
  if (sys.rhs.size() != n) { throw InvalidParameter("rhs size mismatch"); }
  if (n == 0) { return {}; }
  const auto entries = detail::collapse_entries(sys.off_diagonal);
  const bool z_matrix =
      std::all_of(entries.begin(), entries.end(), [](const PdEntry& e) { return e.value <= 0.0; });

  std::vector<double> excess;
  bool have_excess = false;
  if (z_matrix) {
    if (sys.has_excess()) {
      excess = sys.column_excess;
      have_excess = true;
    } else {
      excess = sys.diagonal;
      for (const auto& e : entries) { excess[e.col] -= std::abs(e.value); }
      have_excess = std::all_of(excess.begin(), excess.end(), [](double v) { return v >= 0.0; });
    }
  }

  std::vector<double> x;
  bool cyclic = false;
  if (have_excess && detail::is_cyclic_tridiagonal(entries, n)) {
    x = detail::solve_cyclic_gth(entries, excess, sys.rhs);
    cyclic = true;
  } else if (n <= kDenseLimit) {
    PatankarLinearSystem collapsed = sys;
    collapsed.off_diagonal = entries;
    x = have_excess ? detail::solve_dense_gth(collapsed, excess, sys.rhs)
                    : detail::solve_dense_pivoting(collapsed.dense(), sys.rhs);
  } else {
    throw SolverFailure("unsupported sparsity pattern for a system of size " + std::to_string(n));
  }

  // residual check
  std::vector<double> mx(n, 0.0);
  std::vector<double> mag(n, 0.0);
  std::vector<double> diag(n);
  for (std::size_t j = 0; j < n; ++j) { diag[j] = sys.has_excess() ? sys.column_excess[j] : sys.diagonal[j]; }
  if (sys.has_excess()) {
    for (const auto& e : entries) { diag[e.col] += std::abs(e.value); }
  }
  for (std::size_t i = 0; i < n; ++i) {
    mx[i] = diag[i] * x[i];
    mag[i] = std::abs(mx[i]) + std::abs(sys.rhs[i]);
  }
  for (const auto& e : entries) {
    mx[e.row] += e.value * x[e.col];
    mag[e.row] += std::abs(e.value * x[e.col]);
  }
  double res = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    res = std::max(res, std::abs(mx[i] - sys.rhs[i]));
    scale = std::max(scale, mag[i]);
  }
  if (report != nullptr) { *report = {res, scale, cyclic}; }
  if (!(res <= kSolveResidualTolerance * scale)) {
    throw SolverFailure("Patankar solve residual " + std::to_string(res) + " exceeds tolerance (scale " +
                        std::to_string(scale) + ", size " + std::to_string(n) + ")");
  }
  return x;
}

}  // namespace patankar

#endif  // PATANKAR_LINEAR_SOLVER_HPP_
