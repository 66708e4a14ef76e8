#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qgrowth/transforms.hpp"

using namespace qgrowth;

namespace {

GridFunction smooth_random(const GridPtr& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1, 1);
  const double a = 2 * U(rng), b = U(rng), p = 1 + 3 * std::abs(U(rng));
  return GridFunction::sample(g, [&](double x, double) { return a * std::sin(p * x) + b * std::cos(2 * x) * x; });
}

const ExpChange kV{1.0, ChangeDirection::v_change};
const ExpChange kW{1.0, ChangeDirection::w_change};

}  // namespace

TEST(ExpChangeType, ZeroMapsToZeroAndExamples) {
  auto g = build_interval_grid(0, 1, 8);
  for (const auto& ch : {kV, kW}) {
    const auto t = forward(GridFunction(g), ch);
    for (int i : g->active()) EXPECT_EQ(t[i], 0.0);
    const auto back = inverse(GridFunction(g), ch);
    for (int i : g->active()) EXPECT_EQ(back[i], 0.0);
  }
  EXPECT_NEAR(kV.forward(std::log(2.0)), 1.0, 1e-15);
  EXPECT_THROW(ExpChange(0.0, ChangeDirection::v_change), DomainError);
}

TEST(ExpChangeType, NamedConstructors) {
  const Ellipticity e{0.5, 2.0};
  EXPECT_DOUBLE_EQ(ExpChange::lower(3.0, e).m, 1.5);
  EXPECT_DOUBLE_EQ(ExpChange::upper(3.0, e).m, 6.0);
}

TEST(ExpChangeType, RoundTrip) {
  std::mt19937_64 rng(3);
  auto g = build_interval_grid(0, 1, 40);
  for (int t = 0; t < 50; ++t) {
    const auto u = smooth_random(g, rng);
    for (const auto& ch : {ExpChange(0.7, ChangeDirection::v_change), ExpChange(1.3, ChangeDirection::w_change)}) {
      const auto back = inverse(forward(u, ch), ch);
      EXPECT_LT((back - u).sup_norm(), 1e-12);
    }
  }
}

TEST(ExpChangeType, InverseOutsideRangeNamesNode) {
  auto g = build_interval_grid(0, 1, 4);
  GridFunction t(g);
  t[2] = 1.0;  // 1 - m t = 0
  try {
    inverse(t, kW);
    FAIL() << "expected a domain error";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("node 2"), std::string::npos);
  }
  GridFunction big(g, 800.0);
  EXPECT_THROW(forward(big, kV), DomainError);
}

TEST(ExpChangeType, GradientIdentity) {
  std::mt19937_64 rng(5);
  double prev = 0;
  for (int n : {32, 64, 128}) {
    auto g = build_interval_grid(0, 1, n);
    std::mt19937_64 r2 = rng;
    const auto u = smooth_random(g, r2);
    const auto v = forward(u, kV);
    const auto Du = gradient_centered(u), Dv = gradient_centered(v);
    double e = 0;
    for (std::size_t k = 0; k < Du.nodes.size(); ++k)
      e = std::max(e, std::abs(Dv.values[k][0] - (1 + v[Du.nodes[k]]) * Du.values[k][0]));
    if (prev > 0) { EXPECT_GT(std::log2(prev / e), 1.8); }
    prev = e;
  }
}

TEST(ExpChangeType, MonotoneAndSignPreserving) {
  std::mt19937_64 rng(9);
  auto g = build_interval_grid(0, 1, 30);
  for (int t = 0; t < 20; ++t) {
    const auto u = smooth_random(g, rng);
    GridFunction up = u;
    for (int i : g->active()) up[i] += 0.01 * (i % 3);
    for (const auto& ch : {kV, kW}) {
      const auto a = forward(u, ch), b = forward(up, ch);
      for (int i : g->active()) {
        EXPECT_LE(a[i], b[i]);
        EXPECT_EQ(a[i] > 0, u[i] > 0);
        EXPECT_EQ(a[i] < 0, u[i] < 0);
      }
    }
  }
  for (int i : g->active()) EXPECT_LT(forward(GridFunction(g, 5.0), kW)[i], 1.0);
}

TEST(Sandwich, ConstantIsExact) {
  auto g = build_planar_grid(PlanarDomain::rectangle(0, 1, 0, 1), 8);
  const auto r = sandwich_check(GridFunction(g, 0.3), kV, Ellipticity{1, 2});
  EXPECT_EQ(r.max_violation, 0.0);
}

TEST(Sandwich, SineViolationIsSecondOrder) {
  std::vector<double> viol;
  for (int n : {32, 64, 128}) {
    auto g = build_interval_grid(0, 1, n);
    const auto u = GridFunction::sample(g, [](double x, double) { return std::sin(M_PI * x); });
    viol.push_back(std::max(sandwich_check(u, kV, Ellipticity{1, 2}).max_violation,
                            sandwich_check(u, kW, Ellipticity{1, 2}).max_violation));
  }
  for (std::size_t k = 0; k + 1 < viol.size(); ++k)
    if (viol[k + 1] > 0) { EXPECT_GT(std::log2(viol[k] / viol[k + 1]), 1.8); }
}

TEST(Sandwich, CollapsesForEqualEllipticity) {
  auto g = build_interval_grid(0, 1, 256);
  const auto u = GridFunction::sample(g, [](double x, double) { return std::sin(M_PI * x) + x * x; });
  const auto r = sandwich_check(u, kV, Ellipticity{1.5, 1.5});
  EXPECT_LT(r.max_violation, 1e-3);
}

namespace {

ProblemSpec reducible(double mu, double lambda, double h) {
  ProblemSpec P;
  P.grid = build_interval_grid(0, 1, 32);
  P.op = OperatorSpec::laplacian(P.grid);
  P.M = MatrixField::scalar(*P.grid, mu);
  P.c = GridFunction(P.grid, 1.0);
  P.h = GridFunction(P.grid, h);
  P.lambda = lambda;
  return P;
}

}  // namespace

TEST(SemilinearReduction, RightHandSide) {
  const auto R0 = semilinear_reduction(reducible(1.0, 0.0, 0.0));
  EXPECT_EQ(R0.rhs(1.0, 0.0, 0.0), 0.0);
  const auto R = semilinear_reduction(reducible(1.0, 1.0, 0.0));
  EXPECT_DOUBLE_EQ(R.m, 1.0);
  EXPECT_NEAR(R.rhs(1.0, 0.0, std::exp(1.0) - 1.0), std::exp(1.0), 1e-14);
}

TEST(SemilinearReduction, RejectsNonScalarM) {
  ProblemSpec P = reducible(1.0, 1.0, 1.0);
  P.M.m11 = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(P.grid->size()), 1.0, 1.5);
  P.M.mu2 = 1.5;
  EXPECT_THROW(semilinear_reduction(P), UnsupportedError);
  auto g = build_planar_grid(PlanarDomain::rectangle(0, 1, 0, 1), 8);
  ProblemSpec Q;
  Q.grid = g;
  Q.op = OperatorSpec::laplacian(g);
  Q.M = MatrixField::scalar(*g, 1.0);
  Q.M.m22.setConstant(1.2);
  Q.M.mu2 = 1.2;
  Q.c = GridFunction(g, 1.0);
  Q.h = GridFunction(g);
  EXPECT_THROW(semilinear_reduction(Q), UnsupportedError);
}
