#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qgrowth/dirichlet.hpp"
#include "qgrowth/fixedpoint.hpp"

using namespace qgrowth;

TEST(SolveDirichlet, ZeroForcingGivesZero) {
  auto g = build_planar_grid(PlanarDomain::rectangle(0, 1, 0, 1), 12);
  for (const auto& op : {OperatorSpec::laplacian(g), OperatorSpec::pucci(OperatorKind::pucci_minus, g, {1, 2})}) {
    const auto r = solve_dirichlet(op, GridFunction(g), 1e-10);
    ASSERT_TRUE(r.converged);
    EXPECT_EQ(r.solution.sup_norm(), 0.0);
  }
}

TEST(SolveDirichlet, LaplacianSineSecondOrder) {
  double prev = 0;
  for (int n : {32, 64, 128}) {
    auto g = build_interval_grid(0, 1, n);
    const auto f = GridFunction::sample(g, [](double x, double) { return M_PI * M_PI * std::sin(M_PI * x); });
    const auto r = solve_dirichlet(OperatorSpec::laplacian(g), f, 1e-9);
    ASSERT_TRUE(r.converged);
    const auto ex = GridFunction::sample(g, [](double x, double) { return std::sin(M_PI * x); });
    const double e = (r.solution - ex).sup_norm();
    if (prev > 0) { EXPECT_NEAR(std::log2(prev / e), 2.0, 0.1); }
    prev = e;
  }
}

TEST(SolveDirichlet, PucciMinusMatchesFineReference) {
  const Ellipticity e{1, 2};
  auto solve = [&](int n) {
    auto g = build_interval_grid(0, 1, n);
    const auto r = solve_dirichlet(OperatorSpec::pucci(OperatorKind::pucci_minus, g, e), GridFunction(g, 1.0), 1e-13);
    EXPECT_TRUE(r.converged);
    return r.solution;
  };
  const auto c = solve(32), f = solve(64), ref = solve(1024);
  double diff = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double rich = (4 * f[2 * i] - c[i]) / 3;
    diff = std::max(diff, std::abs(rich - ref[32 * i]));
  }
  EXPECT_LT(diff, 1e-6);
  // concave solution: -Lambda u'' = 1
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], c.grid()->x(i) * (1 - c.grid()->x(i)) / 4, 1e-10);
}

TEST(SolveDirichlet, DiscreteComparisonAndUniqueness) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(-1, 1);
  auto g = build_interval_grid(0, 1, 64);
  auto hjb = OperatorSpec::hjb(g, {1, 3},
                               {LinearMember::constant(*g, 1.0, 0, 0, 0.5), LinearMember::constant(*g, 3.0, 0, 0, -0.5)},
                               GridFunction(g, 0.5));
  for (int t = 0; t < 10; ++t) {
    const double a = U(rng), b = U(rng);
    const auto f = GridFunction::sample(g, [&](double x, double) { return a + b * std::sin(5 * x); });
    GridFunction gf = f;
    for (int i : g->active()) gf[i] += 0.1 + 0.05 * std::abs(U(rng));
    const auto uf = solve_dirichlet(hjb, f, 1e-11), ug = solve_dirichlet(hjb, gf, 1e-11);
    ASSERT_TRUE(uf.converged && ug.converged);
    for (int i : g->active()) EXPECT_LE(uf.solution[i], ug.solution[i] + 1e-12);
    for (int s = 0; s < 10; ++s) {
      const auto init = GridFunction::sample(g, [&](double x, double) { return 5 * U(rng) * std::sin(M_PI * x); });
      const auto r = solve_dirichlet(hjb, f, 1e-11, init);
      ASSERT_TRUE(r.converged);
      EXPECT_LT((r.solution - uf.solution).sup_norm(), 1e-9);
    }
  }
}

TEST(SolveDirichlet, PolicyIterationResidualNonIncreasing) {
  auto g = build_interval_grid(0, 1, 128);
  auto op = OperatorSpec::pucci(OperatorKind::pucci_plus, g, {1, 4});
  const auto f = GridFunction::sample(g, [](double x, double) { return std::sin(40 * x) + 0.3; });
  const auto r = solve_dirichlet(op, f, 1e-11);
  ASSERT_TRUE(r.converged);
  // entry 0 is the initial guess; sweeps start at entry 1
  ASSERT_GE(r.residual_history.size(), 3u);
  for (std::size_t k = 2; k < r.residual_history.size(); ++k)
    EXPECT_LE(r.residual_history[k], r.residual_history[k - 1] * (1 + 1e-12) + 1e-14);
}

TEST(SolveDirichlet, RejectsBadTolerance) {
  auto g = build_interval_grid(0, 1, 8);
  EXPECT_THROW(solve_dirichlet(OperatorSpec::laplacian(g), GridFunction(g), 0.0), ConfigError);
}

namespace {

ProblemSpec coercive(int n) {
  ProblemSpec P;
  P.grid = build_interval_grid(0, 1, n);
  P.op = OperatorSpec::laplacian(P.grid);
  P.M = MatrixField::scalar(*P.grid, 1.0);
  P.c = GridFunction(P.grid, 1.0);
  P.h = GridFunction(P.grid, 1.0);
  P.lambda = -1.0;
  return P;
}

}  // namespace

TEST(Comparison, ExactSolutionAgainstItself) {
  const ProblemSpec P = coercive(64);
  const auto u = solve_full(P, GridFunction(P.grid)).solution;
  const auto v = comparison_check(u, u, P, 1e-9);
  EXPECT_TRUE(v.preconditions_ok);
  EXPECT_TRUE(v.ordered);
  EXPECT_EQ(v.margin, 0.0);
}

TEST(Comparison, ShiftedSubAndSupersolution) {
  const ProblemSpec P = coercive(64);
  const auto u = solve_full(P, GridFunction(P.grid)).solution;
  const double s = u.sup_norm();
  GridFunction alpha = u, beta = u;
  for (int i : P.grid->active()) {
    alpha[i] -= s;
    beta[i] += s;
  }
  const auto v = comparison_check(alpha, beta, P, 1e-9);
  EXPECT_TRUE(v.preconditions_ok) << v.precondition_message;
  EXPECT_TRUE(v.ordered);
  EXPECT_NEAR(v.margin, 2 * s, 1e-12);
}

TEST(Comparison, FabricatedInputsTriggerPrecondition) {
  const ProblemSpec P = coercive(64);
  const auto u = solve_full(P, GridFunction(P.grid)).solution;
  GridFunction alpha = u;
  for (int i : P.grid->active()) alpha[i] += 1.0;
  const auto v = comparison_check(alpha, u, P, 1e-9);
  EXPECT_FALSE(v.preconditions_ok);
  EXPECT_FALSE(v.ordered);
}
