#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "qgrowth/calculus.hpp"

using namespace qgrowth;

TEST(Gradient, ExactOnLinearAndConstant) {
  auto g = build_interval_grid(0, 1, 10);
  const auto lin = gradient_centered(GridFunction::sample(g, [](double x, double) { return x; }));
  for (const auto& d : lin.values) EXPECT_NEAR(d[0], 1.0, 1e-12);
  const auto con = gradient_centered(GridFunction(g, 7.0));
  for (const auto& d : con.values) EXPECT_EQ(d[0], 0.0);
}

TEST(Gradient, ExactOnQuadratic) {
  auto g = build_interval_grid(0, 1, 8);
  const auto d = gradient_centered(GridFunction::sample(g, [](double x, double) { return x * x; }));
  for (std::size_t k = 0; k < d.nodes.size(); ++k) EXPECT_NEAR(d.values[k][0], 2 * g->x(d.nodes[k]), 1e-13);
}

TEST(Hessian, ExactOnQuadraticBilinearConstant) {
  auto g1 = build_interval_grid(0, 1, 8);
  for (const auto& H : hessian_centered(GridFunction::sample(g1, [](double x, double) { return x * x; })).values)
    EXPECT_NEAR(H(0, 0), 2.0, 1e-10);
  auto g2 = build_planar_grid(PlanarDomain::rectangle(-1, 1, 0, 2), 8);
  for (const auto& H : hessian_centered(GridFunction::sample(g2, [](double x, double y) { return x * y; })).values) {
    EXPECT_NEAR(H(0, 1), 1.0, 1e-12);
    EXPECT_NEAR(H(1, 0), 1.0, 1e-12);
    EXPECT_NEAR(H(0, 0), 0.0, 1e-12);
    EXPECT_NEAR(H(1, 1), 0.0, 1e-12);
  }
  for (const auto& H : hessian_centered(GridFunction(g2, 3.5)).values) EXPECT_EQ(H.norm(), 0.0);
}

TEST(RadialSpectrum, Examples) {
  EXPECT_EQ(radial_hessian_spectrum(0, 2, 1, 3), (std::vector<double>{0, 0, 2}));
  for (double r : {0.3, 1.0, 2.5}) EXPECT_EQ(radial_hessian_spectrum(r, 1, r, 4), (std::vector<double>(4, 1.0)));
  // phi = r^-2 at r = 1
  EXPECT_EQ(radial_hessian_spectrum(-2, 6, 1, 2), (std::vector<double>{-2, 6}));
  EXPECT_THROW(radial_hessian_spectrum(1, 1, 0, 2), DomainError);
}

namespace {

double grad_hess_error(int n) {
  auto g = build_planar_grid(PlanarDomain::rectangle(0, 1, 0, 1), n);
  auto f = [](double x, double y) { return std::sin(2 * x + y) * std::exp(x * y); };
  auto u = GridFunction::sample(g, f);
  const auto D = gradient_centered(u);
  const auto H = hessian_centered(u);
  double err = 0;
  const double e = 1e-5;
  for (std::size_t k = 0; k < D.nodes.size(); ++k) {
    const double x = g->x(D.nodes[k]), y = g->y(D.nodes[k]);
    const double fx = (f(x + e, y) - f(x - e, y)) / (2 * e), fy = (f(x, y + e) - f(x, y - e)) / (2 * e);
    err = std::max({err, std::abs(D.values[k][0] - fx), std::abs(D.values[k][1] - fy)});
    const double e2 = 1e-4;
    const double fxx = (f(x + e2, y) - 2 * f(x, y) + f(x - e2, y)) / (e2 * e2);
    const double fxy = (f(x + e2, y + e2) - f(x + e2, y - e2) - f(x - e2, y + e2) + f(x - e2, y - e2)) / (4 * e2 * e2);
    err = std::max({err, std::abs(H.values[k](0, 0) - fxx), std::abs(H.values[k](0, 1) - fxy)});
  }
  return err;
}

}  // namespace

TEST(Calculus, SecondOrderUnderRefinement) {
  const double e1 = grad_hess_error(16), e2 = grad_hess_error(32), e3 = grad_hess_error(64);
  EXPECT_GT(std::log2(e1 / e2), 1.8);
  EXPECT_GT(std::log2(e2 / e3), 1.8);
}

TEST(RadialSpectrum, MatchesDiscreteHessianEigenvalues) {
  // u = r^3 about the origin: phi' = 3 r^2, phi'' = 6 r
  double prev = 0;
  for (int n : {32, 64}) {
    auto g = build_planar_grid(PlanarDomain::rectangle(-1, 1, -1, 1), n);
    auto u = GridFunction::sample(g, [](double x, double y) { return std::pow(std::hypot(x, y), 3); });
    const auto H = hessian_centered(u);
    double err = 0;
    for (std::size_t k = 0; k < H.nodes.size(); ++k) {
      const double r = std::hypot(g->x(H.nodes[k]), g->y(H.nodes[k]));
      if (r < 0.4 || r > 0.8) continue;
      auto s = radial_hessian_spectrum(3 * r * r, 6 * r, r, 2);
      std::sort(s.begin(), s.end());
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(H.values[k]);
      err = std::max({err, std::abs(es.eigenvalues()[0] - s[0]), std::abs(es.eigenvalues()[1] - s[1])});
    }
    if (prev > 0) { EXPECT_GT(std::log2(prev / err), 1.7); }
    prev = err;
  }
}

TEST(GridFunctionType, LengthAndFiniteness) {
  auto g = build_interval_grid(0, 1, 4);
  EXPECT_THROW(GridFunction(g, Eigen::VectorXd::Zero(3)), DomainError);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(5);
  v[2] = std::nan("");
  EXPECT_THROW(GridFunction(g, v), DomainError);
}
