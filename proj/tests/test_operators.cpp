#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qgrowth/operators.hpp"

using namespace qgrowth;

namespace {

Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> N(0.0, 2.0);
  Eigen::MatrixXd X(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) X(i, j) = X(j, i) = N(rng);
  return X;
}

const Ellipticity kE12{1, 2};

}  // namespace

TEST(Pucci, Examples) {
  EXPECT_EQ(pucci_plus(Eigen::Matrix2d::Zero(), kE12), 0.0);
  EXPECT_EQ(pucci_minus(Eigen::Matrix2d::Zero(), kE12), 0.0);
  EXPECT_DOUBLE_EQ(pucci_plus(Eigen::Matrix2d::Identity(), kE12), 4.0);
  Eigen::Matrix2d D;
  D << 2, 0, 0, -3;
  EXPECT_DOUBLE_EQ(pucci_plus(D, kE12), 1.0);
  EXPECT_DOUBLE_EQ(pucci_minus(D, kE12), -4.0);
}

TEST(Pucci, RejectsNonSymmetric) {
  Eigen::Matrix2d X;
  X << 1, 2, 0, 1;
  EXPECT_THROW(pucci_plus(X, kE12), DomainError);
  EXPECT_THROW(pucci_minus(X, kE12), DomainError);
}

TEST(Pucci, DualityOrderAndSubadditivity) {
  std::mt19937_64 rng(7);
  const Ellipticity e{0.5, 3.0};
  for (int t = 0; t < 100; ++t) {
    const int d = 2 + t % 2;
    const auto X = random_symmetric(rng, d), Y = random_symmetric(rng, d);
    EXPECT_NEAR(pucci_minus(X, e), -pucci_plus(-X, e), 1e-12);
    EXPECT_GE(pucci_plus(X, e), pucci_minus(X, e));
    const double tol = 1e-10 * (1 + X.norm() + Y.norm());
    EXPECT_LE(pucci_plus(X, e) + pucci_minus(Y, e), pucci_plus(X + Y, e) + tol);
    EXPECT_LE(pucci_plus(X + Y, e), pucci_plus(X, e) + pucci_plus(Y, e) + tol);
  }
}

TEST(Ellipticity, Validation) {
  EXPECT_THROW((Ellipticity{0, 1}.validate()), ValidationError);
  EXPECT_THROW((Ellipticity{2, 1}.validate()), ValidationError);
  EXPECT_NO_THROW((Ellipticity{1, 1}.validate()));
}

TEST(ExtremalL, ConstantGivesZero) {
  auto g = build_planar_grid(PlanarDomain::rectangle(0, 1, 0, 1), 8);
  for (int s : {+1, -1}) {
    const auto r = extremal_L(GridFunction(g, 3.0), s, kE12, GridFunction(g, 1.0));
    for (int i : g->active()) EXPECT_EQ(r[i], 0.0);
  }
}

TEST(ExtremalL, DegenerateIntervalIsSecondDifference) {
  auto g = build_interval_grid(0, 1, 16);
  auto u = GridFunction::sample(g, [](double x, double) { return std::sin(3 * x); });
  const auto r = extremal_L(u, -1, Ellipticity{1, 1}, GridFunction());
  const double h = g->hx();
  for (int i : g->interior()) EXPECT_NEAR(r[i], (u[i + 1] - 2 * u[i] + u[i - 1]) / (h * h), 1e-9);
}

TEST(ExtremalL, QuadraticWithDrift) {
  auto g = build_interval_grid(0, 1, 10);
  auto u = GridFunction::sample(g, [](double x, double) { return x * x; });
  const auto r = extremal_L(u, +1, kE12, GridFunction(g, 1.0));
  // upwinded |Du| of x^2 is the forward difference 2x + h
  for (int i : g->interior()) EXPECT_NEAR(r[i], 4.0 + (2 * g->x(i) + g->hx()), 1e-10);
  const double h = g->hx();
  for (int i : g->interior()) EXPECT_NEAR(r[i], 4.0 + 2 * g->x(i), h + 1e-10);
}

TEST(ApplyF, ZeroAtZero) {
  auto g = build_planar_grid(PlanarDomain::rectangle(0, 1, 0, 1), 8);
  auto hjb = OperatorSpec::hjb(g, kE12, {LinearMember::constant(*g, 1.5, 0.3, 1.2), LinearMember::laplacian(*g, 2)});
  for (const auto& op : {hjb, OperatorSpec::pucci(OperatorKind::pucci_minus, g, kE12)}) {
    const auto r = apply_F(op, GridFunction(g));
    for (int i : g->active()) EXPECT_EQ(r[i], 0.0);
  }
}

TEST(ApplyF, HjbOfScaledLaplaciansIsPucciPlus) {
  auto g = build_interval_grid(0, 1, 12);
  auto op = OperatorSpec::hjb(g, kE12, {LinearMember::laplacian(*g, kE12.lo), LinearMember::laplacian(*g, kE12.hi)});
  const auto r = apply_F(op, GridFunction::sample(g, [](double x, double) { return x * x; }));
  Eigen::MatrixXd two(1, 1);
  two(0, 0) = 2;
  for (int i : g->interior()) EXPECT_NEAR(r[i], pucci_plus(two, kE12), 1e-9);
}

TEST(ApplyF, MemberOutsideEllipticityRejected) {
  auto g = build_interval_grid(0, 1, 8);
  EXPECT_THROW(OperatorSpec::hjb(g, kE12, {LinearMember::laplacian(*g, 3.0)}), ValidationError);
  EXPECT_THROW(OperatorSpec::hjb(g, kE12, {}), ConfigError);
}

TEST(ApplyF, SandwichBetweenExtremalOperators2D) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1, 1);
  auto g = build_planar_grid(PlanarDomain::rectangle(0, 1, 0, 1), 16);
  std::vector<LinearMember> fam;
  for (int k = 0; k < 4; ++k) {
    const double th = 0.4 * k, l1 = 1.0 + 0.25 * k, l2 = 2.0 - 0.2 * k;
    const double c = std::cos(th), s = std::sin(th);
    fam.push_back(LinearMember::constant(*g, l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c));
  }
  const auto hjb = OperatorSpec::hjb(g, kE12, fam);
  const auto isaacs = OperatorSpec::isaacs(g, kE12, {{fam[0], fam[1]}, {fam[2], fam[3]}});
  for (int t = 0; t < 50; ++t) {
    const double a = U(rng), b = U(rng), p = 1 + 2 * std::abs(U(rng));
    auto u = GridFunction::sample(g, [&](double x, double y) { return a * std::sin(p * x + y) + b * x * y * y; });
    auto v = GridFunction::sample(g, [&](double x, double y) { return b * std::cos(x - p * y) + a * x * x; });
    const GridFunction w = u - v;
    const auto lo = extremal_L(w, -1, kE12, GridFunction()), hi = extremal_L(w, +1, kE12, GridFunction());
    for (const auto& op : {hjb, isaacs}) {
      const GridFunction d = apply_F(op, u) - apply_F(op, v);
      for (int i : g->interior()) {
        const double tol = 1e-9 * (1 + std::abs(hi[i]) + std::abs(lo[i]));
        EXPECT_GE(d[i], lo[i] - tol);
        EXPECT_LE(d[i], hi[i] + tol);
      }
    }
  }
}

TEST(ApplyF, SandwichWithDriftWithinUpwindTolerance) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> U(-1, 1);
  auto g = build_interval_grid(0, 1, 64);
  const double bmax = 1.5;
  std::vector<LinearMember> fam = {LinearMember::constant(*g, 1.0, 0, 0, 1.5), LinearMember::constant(*g, 2.0, 0, 0, -1.0),
                                   LinearMember::constant(*g, 1.4, 0, 0, 0.3)};
  const auto op = OperatorSpec::hjb(g, kE12, fam, GridFunction(g, bmax));
  for (int t = 0; t < 50; ++t) {
    const double a = U(rng), b = U(rng), p = 1 + 3 * std::abs(U(rng));
    auto u = GridFunction::sample(g, [&](double x, double) { return a * std::sin(p * x) + b * x * x * x; });
    auto v = GridFunction::sample(g, [&](double x, double) { return b * std::cos(p * x) - a * x; });
    const GridFunction w = u - v;
    const GridFunction d = apply_F(op, u) - apply_F(op, v);
    const auto lo = extremal_L(w, -1, op), hi = extremal_L(w, +1, op);
    double d2 = 0;
    for (int i : g->interior()) d2 = std::max(d2, std::abs((w[i + 1] - 2 * w[i] + w[i - 1]) / (g->hx() * g->hx())));
    const double tol = 2 * bmax * g->hx() * d2 + 1e-9;
    for (int i : g->interior()) {
      EXPECT_GE(d[i], lo[i] - tol);
      EXPECT_LE(d[i], hi[i] + tol);
    }
  }
}

namespace {

ProblemSpec model(int n, double lambda) {
  ProblemSpec P;
  P.grid = build_interval_grid(0, 1, n);
  P.op = OperatorSpec::laplacian(P.grid);
  P.M = MatrixField::scalar(*P.grid, 1.0);
  P.c = GridFunction(P.grid, 1.0);
  P.h = GridFunction(P.grid, 1.0);
  P.lambda = lambda;
  return P;
}

}  // namespace

TEST(ResidualP, ZeroForZeroData) {
  ProblemSpec P = model(16, 2.0);
  P.h = GridFunction(P.grid);
  const auto r = residual_P(GridFunction(P.grid), P);
  for (int i : P.grid->active()) EXPECT_EQ(r[i], 0.0);
}

TEST(ResidualP, BoundaryRowsCarryTheValue) {
  ProblemSpec P = model(8, 1.0);
  GridFunction u(P.grid, 0.5);
  const auto r = residual_P(u, P);
  EXPECT_EQ(r[0], 0.5);
  EXPECT_EQ(r[8], 0.5);
}

TEST(ResidualP, ManufacturedSecondOrder) {
  double prev = 0;
  for (int n : {32, 64, 128}) {
    ProblemSpec P = model(n, 1.5);
    auto us = [](double x) { return std::sin(M_PI * x); };
    // -F[u] = lambda c u + |u'|^2 + h with F = u''
    P.h = GridFunction::sample(P.grid, [&](double x, double) {
      return M_PI * M_PI * us(x) - 1.5 * us(x) - M_PI * M_PI * std::pow(std::cos(M_PI * x), 2);
    });
    const auto r = residual_P(GridFunction::sample(P.grid, [&](double x, double) { return us(x); }), P);
    double e = 0;
    for (int i : P.grid->interior()) e = std::max(e, std::abs(r[i]));
    if (prev > 0) { EXPECT_GT(std::log2(prev / e), 1.8); }
    prev = e;
  }
}

TEST(ResidualP, LinearInLambdaAndH) {
  ProblemSpec P = model(32, 0.0);
  auto u = GridFunction::sample(P.grid, [](double x, double) { return x * (1 - x) * std::exp(x); });
  const auto r0 = residual_P(u, P);
  P.lambda = 1.0;
  const auto r1 = residual_P(u, P);
  P.lambda = 3.0;
  const auto r3 = residual_P(u, P);
  for (int i : P.grid->interior()) EXPECT_NEAR(r3[i] - r0[i], 3.0 * (r1[i] - r0[i]), 1e-10);
  ProblemSpec Q = P;
  Q.h = 2.0 * P.h;
  const auto rq = residual_P(u, Q);
  for (int i : P.grid->interior()) EXPECT_NEAR(rq[i] - r3[i], P.h[i], 1e-12);
}

TEST(MatrixFieldType, BoundsChecked) {
  auto g = build_planar_grid(PlanarDomain::rectangle(0, 1, 0, 1), 6);
  MatrixField M = MatrixField::scalar(*g, 1.0);
  M.mu1 = 0.5;
  M.mu2 = 2.0;
  EXPECT_NO_THROW(M.validate(*g));
  M.m12.setConstant(1.2);  // eigenvalues -0.2 and 2.2
  EXPECT_THROW(M.validate(*g), ValidationError);
  MatrixField bad = MatrixField::scalar(*g, 1.0);
  bad.mu1 = 0;
  EXPECT_THROW(bad.validate(*g), ValidationError);
}

TEST(ProblemSpecType, WeightMustBeNonnegativeAndNontrivial) {
  ProblemSpec P = model(8, 1.0);
  P.c = GridFunction(P.grid);
  EXPECT_THROW(P.validate(), ValidationError);
  P.c = GridFunction(P.grid, -1.0);
  EXPECT_THROW(P.validate(), ValidationError);
  P.c = GridFunction(P.grid, 1.0);
  EXPECT_NO_THROW(P.validate());
}
