#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "patankar/linear_solver.hpp"

using namespace patankar;

namespace {

auto rel_diff(const std::vector<double>& x, const std::vector<double>& ref) -> double {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num = std::max(num, std::abs(x[i] - ref[i]));
    den = std::max(den, std::abs(ref[i]));
  }
  return num / den;
}

// Random Patankar-type system: nonpositive off-diagonals on the cyclic band
// (or dense), diagonal = excess + column sum.
auto random_system(std::mt19937_64& rng, std::size_t n, bool cyclic, bool with_excess) -> PatankarLinearSystem {
  std::uniform_real_distribution<double> coef(0.0, 10.0);
  std::uniform_real_distribution<double> pos(0.1, 10.0);
  PatankarLinearSystem sys(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (cyclic) {
      sys.off_diagonal.push_back({i, (i + 1) % n, -coef(rng)});
      sys.off_diagonal.push_back({i, (i + n - 1) % n, -coef(rng)});
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && coef(rng) < 5.0) { sys.off_diagonal.push_back({i, j, -coef(rng)}); }
      }
    }
    sys.rhs[i] = pos(rng);
  }
  std::vector<double> excess(n);
  for (auto& e : excess) { e = pos(rng); }
  if (with_excess) {
    sys.column_excess = excess;
  } else {
    sys.diagonal = excess;
    for (const auto& e : sys.off_diagonal) { sys.diagonal[e.col] += std::abs(e.value); }
  }
  return sys;
}

}  // namespace

TEST(LinearSolver, CyclicMatchesDenseOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(trial % 14);
    const auto sys = random_system(rng, n, true, trial % 2 == 0);
    SolveReport rep;
    const auto x = solve_banded(sys, &rep);
    EXPECT_TRUE(rep.cyclic_path);
    const auto ref = oracle::dense_solve(sys.dense(), sys.rhs);
    EXPECT_LE(rel_diff(x, ref), 1e-12) << "n = " << n;
  }
}

TEST(LinearSolver, DenseZMatrixMatchesOracle) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 16);
    const auto sys = random_system(rng, n, false, trial % 2 == 1);
    const auto x = solve_banded(sys);
    EXPECT_LE(rel_diff(x, oracle::dense_solve(sys.dense(), sys.rhs)), 1e-12);
  }
}

TEST(LinearSolver, GeneralMatrixUsesPivoting) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 15);
    PatankarLinearSystem sys(n);
    for (std::size_t i = 0; i < n; ++i) {
      sys.diagonal[i] = 4.0 + d(rng);
      sys.rhs[i] = d(rng);
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) { sys.off_diagonal.push_back({i, j, d(rng) / static_cast<double>(n)}); }
      }
    }
    const auto x = solve_banded(sys);
    EXPECT_LE(rel_diff(x, oracle::dense_solve(sys.dense(), sys.rhs)), 1e-12);
  }
}

TEST(LinearSolver, DuplicateEntriesAreSummed) {
  PatankarLinearSystem sys(3);
  sys.column_excess = {1.0, 1.0, 1.0};
  sys.off_diagonal = {{0, 1, -0.5}, {0, 1, -0.5}, {1, 2, -2.0}, {2, 0, -1.0}};
  sys.rhs = {1.0, 2.0, 3.0};
  const auto x = solve_banded(sys);
  EXPECT_LE(rel_diff(x, oracle::dense_solve(sys.dense(), sys.rhs)), 1e-13);
}

TEST(LinearSolver, ExtremeScalesStayPositive) {
  // Coefficients spanning 60 orders of magnitude: subtraction-free
  // elimination keeps every component positive.
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> e(-30.0, 30.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(trial % 40);
    PatankarLinearSystem sys(n);
    sys.column_excess.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      sys.off_diagonal.push_back({(i + 1) % n, i, -std::pow(10.0, e(rng))});
      sys.rhs[i] = std::pow(10.0, e(rng));
    }
    const auto x = solve_banded(sys);
    for (double v : x) { EXPECT_GT(v, 0.0); }
    // mass: column sums of M equal the excess (= 1), so sum x == sum rhs
    double sx = 0.0;
    double sr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sx += x[i];
      sr += sys.rhs[i];
    }
    EXPECT_NEAR(sx, sr, 1e-12 * sr);
  }
}

TEST(LinearSolver, SingularSystemFails) {
  PatankarLinearSystem sys(2);
  sys.diagonal = {1.0, 1.0};
  sys.off_diagonal = {{0, 1, 1.0}, {1, 0, 1.0}};
  sys.rhs = {1.0, 2.0};
  EXPECT_THROW(solve_banded(sys), Error);
  PatankarLinearSystem wrong(2);
  wrong.rhs = {1.0};
  EXPECT_THROW(solve_banded(wrong), InvalidParameter);
}
