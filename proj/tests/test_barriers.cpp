#include <gtest/gtest.h>

#include <cmath>

#include "qgrowth/barriers.hpp"
#include "qgrowth/principal.hpp"

using namespace qgrowth;

TEST(BarrierExponent, HandSimplifiedCase) {
  EXPECT_EQ(vazquez_alpha(1.0, Ellipticity{1, 1}, 0, 0, 0, 0.1, 1.0), 2.0);
}

TEST(BarrierExponent, MonotoneInDrift) {
  double prev = 0;
  for (double gamma = 0; gamma <= 20; gamma += 0.5) {
    const double a = vazquez_alpha(1.0, Ellipticity{1, 2}, gamma, 1.0, 0.5, 0.1, 0.5);
    EXPECT_GE(a, prev);
    prev = a;
  }
}

TEST(BarrierExponent, LargeC0StillFound) {
  const double a = 1e4;
  ASSERT_GT(barrier_C0(1.0, a, 0.1, 1.0), 1e4);
  const double alpha = vazquez_alpha(1.0, Ellipticity{1, 1}, 0, 0, a, 0.1, 1.0);
  EXPECT_GT(alpha, 1e4);
  const double C0 = barrier_C0(1.0, a, 0.1, 1.0);
  EXPECT_GT(alpha * alpha, C0 * alpha);
  EXPECT_LE((alpha - 1) * (alpha - 1), C0 * (alpha - 1));
}

TEST(BarrierExponent, RejectsBadInput) {
  EXPECT_THROW(vazquez_alpha(-1, Ellipticity{1, 1}, 0, 0, 0, 0.1, 1), ConfigError);
  EXPECT_THROW(vazquez_alpha(1, Ellipticity{1, 1}, 0, 0, 0, 1.5, 1), ConfigError);
}

TEST(Barrier, BoundaryValuesAndShape) {
  auto g = build_planar_grid(PlanarDomain::rectangle(-1, 1, -1, 1), 64);
  const auto B = make_barrier_spec(0, 0, 0.8, 0.1, Ellipticity{1, 2}, 1.0, 1.0, 0.5, 0.5 / M_E);
  EXPECT_NEAR(B.value(B.R), 0.0, 1e-15);
  EXPECT_NEAR(B.value(B.R / 2), B.mu, 1e-14);
  EXPECT_GT(-B.d1(B.R), 0.0);
  for (double r = 0.4; r <= 0.8; r += 0.01) {
    EXPECT_LT(B.d1(r), 0.0);
    EXPECT_GT(B.d2(r), 0.0);
  }
  const auto f = build_barrier(B, g);
  EXPECT_FALSE(f.annulus.empty());
  EXPECT_GT(f.min_margin, 0.0);
  EXPECT_GT(f.min_discrete_margin, 0.0);
}

TEST(Barrier, DiscreteRayIsDecreasingAndConvex) {
  auto g = build_interval_grid(0, 1, 400);
  const auto B = make_barrier_spec(0, 0, 1.0, 0.2, Ellipticity{1, 1}, 0, 0, 1.0, 1.0 / M_E, 1);
  const auto f = build_barrier(B, g);
  std::vector<double> ray;
  for (int i : f.annulus) ray.push_back(f.v[i]);
  for (std::size_t k = 1; k < ray.size(); ++k) EXPECT_LT(ray[k], ray[k - 1]);
  for (std::size_t k = 1; k + 1 < ray.size(); ++k) EXPECT_GT(ray[k + 1] - 2 * ray[k] + ray[k - 1], 0.0);
}

TEST(Barrier, UnderResolvedAnnulusRejected) {
  auto g = build_planar_grid(PlanarDomain::rectangle(-1, 1, -1, 1), 16);
  const auto B = make_barrier_spec(0, 0, 0.5, 0.1, Ellipticity{1, 1}, 0, 0, 0.5, 0.2);
  EXPECT_THROW(build_barrier(B, g), ConfigError);
}

TEST(SMP, ZeroAndEigenfunction) {
  auto g = build_interval_grid(0, 1, 64);
  const auto op = OperatorSpec::laplacian(g);
  const auto z = smp_classify(GridFunction(g), op, 1.0);
  EXPECT_EQ(z.verdict, SMPClass::identically_zero);
  EXPECT_EQ(hopf_margin(GridFunction(g)), 0.0);
  const auto ep = principal_eigenpair(op, GridFunction(g, 1.0), 1e-10);
  const auto p = smp_classify(ep.phi1, op, 1.0);
  EXPECT_EQ(p.verdict, SMPClass::strictly_positive) << p.message;
  EXPECT_GT(hopf_margin(ep.phi1), 0.0);
}

TEST(SMP, KinkFailsSupersolutionGate) {
  auto g = build_interval_grid(0, 1, 64);
  const auto u = GridFunction::sample(g, [](double x, double) { return std::max(0.0, x - 0.5); });
  const auto r = smp_classify(u, OperatorSpec::laplacian(g), 1.0);
  EXPECT_EQ(r.verdict, SMPClass::precondition_failed);
  EXPECT_FALSE(r.message.empty());
}

TEST(Hopf, ParabolaMargin) {
  const int n = 50;
  auto g = build_interval_grid(0, 1, n);
  const auto u = GridFunction::sample(g, [](double x, double) { return x * (1 - x); });
  EXPECT_NEAR(hopf_margin(u), 1.0 - 1.0 / n, 1e-12);
}

TEST(LogAbsorption, ContinuousAtZero) {
  EXPECT_EQ(log_absorption(2.0, 0.0), 0.0);
  EXPECT_NEAR(log_absorption(2.0, 1e-300), 0.0, 1e-290);
  EXPECT_NEAR(log_absorption(1.0, kLogDelta), kLogDelta, 1e-15);
}
