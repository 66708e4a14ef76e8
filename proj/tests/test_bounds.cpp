#include <gtest/gtest.h>

#include <cmath>

#include "qgrowth/verify.hpp"

using namespace qgrowth;

namespace {

Branch trace(int n, std::function<double(double)> h, double lo, double hi) {
  const ProblemSpec P = model_problem(n, h, lo);
  ContinuationOptions o;
  o.p_min = lo;
  o.p_max = hi;
  o.ds = 0.05;
  return trace_branch(P, GridFunction(P.grid), Parameter::lambda, o);
}

double sin2pi(double x) { return std::sin(2 * M_PI * x); }

}  // namespace

TEST(LowerBound, NonnegativeBranchHasNoNegativePart) {
  const auto c = trace(32, [](double) { return 1.0; }, 0.0, 2.0), f = trace(64, [](double) { return 1.0; }, 0.0, 2.0);
  const auto r = verify_lower_bound(c, f, 2.0);
  EXPECT_TRUE(r.covered);
  EXPECT_EQ(r.sup_negative_fine, 0.0);
  EXPECT_EQ(r.sup_negative_coarse, 0.0);
}

TEST(LowerBound, SignChangingForcingIsStable) {
  const auto c = trace(128, sin2pi, 0.0, 2.0), f = trace(256, sin2pi, 0.0, 2.0);
  const auto r = verify_lower_bound(c, f, 2.0);
  EXPECT_TRUE(r.covered);
  EXPECT_GT(r.sup_negative_fine, 0.0);
  EXPECT_LT(r.stability_ratio, 0.05);
  EXPECT_FALSE(r.table.empty());
}

TEST(LowerBound, UncoveredWindowIsFlagged) {
  const auto c = trace(32, sin2pi, 0.0, 1.0), f = trace(64, sin2pi, 0.0, 1.0);
  const auto r = verify_lower_bound(c, f, 2.0);
  EXPECT_FALSE(r.covered);
  EXPECT_FALSE(r.note.empty());
}

TEST(UpperBound, FiniteOnWindowAndCappedBelow) {
  const ProblemSpec Pc = model_problem(64, [](double) { return 1.0; }, -1.0);
  const ProblemSpec Pf = model_problem(128, [](double) { return 1.0; }, -1.0);
  const auto bc = trace_branch(Pc, GridFunction(Pc.grid), Parameter::lambda, fold_options(0.05));
  const auto bf = trace_branch(Pf, GridFunction(Pf.grid), Parameter::lambda, fold_options(0.05));
  const double lb = detect_fold(bf).value;
  const auto r = verify_upper_bound(bc, bf, 0.2 * lb, 0.9 * lb);
  EXPECT_TRUE(r.covered);
  EXPECT_LT(r.sup_norm_fine, 1e3);
  EXPECT_LT(r.stability_ratio, 0.05);
  EXPECT_EQ(bf.termination, Termination::norm_cap);
  EXPECT_NE(r.note.find("norm cap"), std::string::npos);
  const auto d = verify_upper_bound(bc, bf, 1.0, 1.0);
  EXPECT_TRUE(d.degenerate);
}

TEST(ABP, NonnegativeForcingKeepsMaxOnBoundary) {
  auto g = build_interval_grid(0, 1, 64);
  const auto op = OperatorSpec::pucci(OperatorKind::pucci_minus, g, {1, 2});
  // -L^+[u] - |u'|^2 = 0 with u = 1 on both ends: u is constant
  const auto u = GridFunction::sample(g, [](double x, double) { return -x * (1 - x); });
  GridFunction f = extremal_L(u, +1, op) + quadratic_field(u, MatrixField::scalar(*g, 1.0), QuadraticScheme::exponential, 1.0);
  for (int i : g->interior()) f[i] = std::max(f[i], 0.0) * 0.5;
  const auto r = abp_check(u, f, op, 1.0);
  ASSERT_FALSE(r.gated) << r.message;
  EXPECT_LE(r.margin, 0.0);
  EXPECT_FALSE(r.violation);
}

TEST(ABP, InteriorBumpHasBoundedRatio) {
  auto g = build_interval_grid(0, 1, 64);
  const auto op = OperatorSpec::pucci(OperatorKind::pucci_minus, g, {1, 2});
  const auto u = GridFunction::sample(g, [](double x, double) { return std::sin(M_PI * x); });
  const GridFunction f =
      extremal_L(u, +1, op) + quadratic_field(u, MatrixField::scalar(*g, 1.0), QuadraticScheme::exponential, 1.0);
  const auto r = abp_check(u, f, op, 1.0);
  ASSERT_FALSE(r.gated) << r.message;
  EXPECT_GT(r.margin, 0.0);
  EXPECT_GT(r.f_negative_norm, 0.0);
  EXPECT_FALSE(r.violation);
  std::printf("        empirical ABP ratio = %.4g\n", r.ratio);
}

TEST(ABP, ZeroIsTrivialAndNonSubsolutionGated) {
  auto g = build_interval_grid(0, 1, 32);
  const auto op = OperatorSpec::laplacian(g);
  const auto z = abp_check(GridFunction(g), GridFunction(g), op, 1.0);
  EXPECT_FALSE(z.gated);
  EXPECT_EQ(z.margin, 0.0);
  const auto u = GridFunction::sample(g, [](double x, double) { return x * (1 - x); });
  EXPECT_TRUE(abp_check(u, GridFunction(g, 10.0), op, 1.0).gated);
}

TEST(QLambda, NonnegativeInputGivesZeroW) {
  const ProblemSpec P = model_problem(32, [](double x) { return x - 0.5; }, 1.0);
  const auto u = GridFunction::sample(P.grid, [](double x, double) { return x * (1 - x); });
  const auto r = q_lambda_residual(u, P);
  EXPECT_EQ(r.w.sup_norm(), 0.0);
  for (int i : P.grid->interior()) EXPECT_DOUBLE_EQ(r.residual[i], std::max(-P.h[i], 0.0));
}

TEST(QLambda, HoldsOnBranchSolutions) {
  const auto br = trace(128, sin2pi, 0.0, 2.0);
  const ProblemSpec P = model_problem(128, sin2pi, 0.0);
  for (const auto& pt : br.points) {
    ProblemSpec Q = P;
    Q.lambda = pt.parameter;
    const auto r = q_lambda_residual(pt.solution, Q);
    EXPECT_GE(r.min_relative, -1e-9) << "lambda " << pt.parameter;
    EXPECT_FALSE(r.saturated);
    for (int i : P.grid->active()) {
      EXPECT_GE(r.w[i], 0.0);
      EXPECT_LT(r.w[i], 1.0 / r.m);
    }
  }
}

TEST(QLambda, SaturationFlagged) {
  const ProblemSpec P = model_problem(32, [](double) { return -1.0; }, 1.0);
  GridFunction u(P.grid);
  u[16] = -10.0 / (P.M.mu1 / P.op.ellipticity().hi) * 10;
  const auto r = q_lambda_residual(u, P);
  EXPECT_TRUE(r.saturated);
  EXPECT_EQ(r.saturated_node, 16);
}
