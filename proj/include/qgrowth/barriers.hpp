#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qgrowth/calculus.hpp"
#include "qgrowth/operators.hpp"

namespace qgrowth {

/// Upper end of the interval on which s |ln s| increases.
inline constexpr double kLogDelta = 0.36787944117144233;

/// f(s) = a s |ln s|, continuously extended by f(0) = 0.
inline double log_absorption(double a, double s) {
  if (s <= 0) return 0.0;
  return a * s * std::abs(std::log(s));
}

struct BarrierSpec {
  double cx = 0.0, cy = 0.0;
  double R = 1.0;
  double mu = 0.1;
  double alpha = 2.0;
  double eps = 0.0;
  Ellipticity ell;
  double gamma = 0.0, d = 0.0, a = 0.0;
  int dim = 2;

  double value(double r) const { return eps * (std::pow(r, -alpha) - std::pow(R, -alpha)); }
  double d1(double r) const { return -alpha * eps * std::pow(r, -alpha - 1.0); }
  double d2(double r) const { return alpha * (alpha + 1.0) * eps * std::pow(r, -alpha - 2.0); }
};

inline double barrier_C0(double R, double a, double mu, double m0) {
  return a * (std::abs(std::log(mu)) + 2.0 * std::abs(std::log(R)) + std::log(2.0) + std::abs(std::log(R / 2.0))) + m0;
}

/// Smallest integer alpha >= 2 with
///   alpha [lambda_P (alpha+1) - (n-1) Lambda_P - gamma R] - d R^2 > C0 alpha R^2,
/// the condition under which the radial barrier is a strict subsolution.
inline double vazquez_alpha(double R, const Ellipticity& e, double gamma, double d, double a, double mu, double m0,
                            int n = 2) {
  if (!(R > 0)) throw ConfigError("vazquez_alpha: R must be positive");
  if (!(mu > 0 && mu < 1)) throw ConfigError("vazquez_alpha: mu must lie in (0, 1)");
  if (!(m0 > 0)) throw ConfigError("vazquez_alpha: m0 must be positive");
  e.validate();
  mu = std::min(mu, kLogDelta);
  const double C0 = barrier_C0(R, a, mu, m0);
  for (double alpha = 2.0; alpha <= 1e6; alpha += 1.0) {
    const double lhs = alpha * (e.lo * (alpha + 1.0) - (n - 1) * e.hi - gamma * R) - d * R * R;
    if (lhs > C0 * alpha * R * R) return alpha;
  }
  throw DomainError("vazquez_alpha: no admissible alpha up to 1e6");
}

/// Complete barrier data: alpha from vazquez_alpha, eps so that v = mu on |x - c| = R/2.
inline BarrierSpec make_barrier_spec(double cx, double cy, double R, double mu, const Ellipticity& e, double gamma,
                                     double d, double a, double m0, int n = 2) {
  BarrierSpec B;
  B.cx = cx;
  B.cy = cy;
  B.R = R;
  B.mu = std::min(mu, kLogDelta);
  B.ell = e;
  B.gamma = gamma;
  B.d = d;
  B.a = a;
  B.dim = n;
  B.alpha = vazquez_alpha(R, e, gamma, d, a, mu, m0, n);
  B.eps = B.mu / (std::pow(R / 2.0, -B.alpha) - std::pow(R, -B.alpha));
  return B;
}

struct BarrierField {
  GridFunction v;
  std::vector<int> annulus;
  /// Radial margin L1^-[v] - f(v) at each annulus node (exact radial derivatives).
  std::vector<double> margin;
  /// The same margin with finite differences on the grid, where the stencil fits in the annulus.
  std::vector<double> discrete_margin;
  double min_margin = 0.0;
  double min_discrete_margin = 0.0;
};

/// L1^-[v] = M^-(D^2 v) - gamma |Dv| - d v for the radial barrier at radius r.
inline double barrier_operator(const BarrierSpec& B, double r) {
  const auto spec = radial_hessian_spectrum(B.d1(r), B.d2(r), r, B.dim);
  double m = 0;
  for (double ev : spec) m += ev > 0 ? B.ell.lo * ev : B.ell.hi * ev;
  return m - B.gamma * std::abs(B.d1(r)) - B.d * B.value(r);
}

/// Samples the barrier on the annulus R/2 <= |x - c| <= R of a planar grid or
/// interval (distance from c), zero elsewhere, and evaluates the strict
/// subsolution margins.
inline BarrierField build_barrier(const BarrierSpec& B, const GridPtr& grid) {
  const auto& g = *grid;
  const double h = std::max(g.hx(), g.hy());
  if (0.5 * B.R / h < 8.0) throw ConfigError("build_barrier: annulus under-resolved (need >= 8 nodes across)");
  BarrierField out;
  out.v = GridFunction(grid);
  auto radius = [&](int i) { return std::hypot(g.x(i) - B.cx, g.dimension() == 2 ? g.y(i) - B.cy : 0.0); };
  for (int i : g.active()) {
    const double r = radius(i);
    if (r >= 0.5 * B.R * (1 - 1e-12) && r <= B.R * (1 + 1e-12)) {
      out.v[i] = std::max(B.value(r), 0.0);
      out.annulus.push_back(i);
    }
  }
  out.min_margin = std::numeric_limits<double>::infinity();
  out.min_discrete_margin = std::numeric_limits<double>::infinity();
  // discrete operator on the full sampled barrier (v extended radially)
  GridFunction ext(grid);
  for (int i : g.active()) {
    const double r = radius(i);
    ext[i] = r > 0 ? B.value(r) : 0.0;
  }
  const GridFunction Lm = extremal_L(ext, -1, B.ell, GridFunction(grid, B.gamma));
  for (int i : out.annulus) {
    const double r = radius(i);
    const double marg = barrier_operator(B, r) - log_absorption(B.a, out.v[i]);
    out.margin.push_back(marg);
    out.min_margin = std::min(out.min_margin, marg);
    if (g.is_interior(i)) {
      const double dm = Lm[i] - B.d * ext[i] - log_absorption(B.a, std::max(ext[i], 0.0));
      out.discrete_margin.push_back(dm);
      out.min_discrete_margin = std::min(out.min_discrete_margin, dm);
    }
  }
  return out;
}

enum class SMPClass { identically_zero, strictly_positive, violation, precondition_failed };

inline std::string to_string(SMPClass c) {
  switch (c) {
    case SMPClass::identically_zero: return "identically_zero";
    case SMPClass::strictly_positive: return "strictly_positive";
    case SMPClass::violation: return "VIOLATION";
    case SMPClass::precondition_failed: return "precondition_failed";
  }
  return "?";
}

struct SMPReport {
  SMPClass verdict = SMPClass::precondition_failed;
  std::string message;
  double min_interior = 0.0;
};

/// Classifies a nonnegative supersolution of L1^-[u] <= a u |ln u| with
/// L1^- = M^-(D^2 .) - gamma |D .| - d (.), gamma and d taken from `op`.
inline SMPReport smp_classify(const GridFunction& u, const OperatorSpec& op, double a, double tol = 1e-8) {
  const auto& g = *u.grid();
  SMPReport rep;
  const double scale_u = std::max(1.0, u.sup_norm());
  for (int i : g.active())
    if (u[i] < -tol * scale_u) {
      rep.message = "u is negative at node " + std::to_string(i);
      return rep;
    }
  const GridFunction Lm = extremal_L(u, -1, op);
  for (int i : g.interior()) {
    const double lhs = Lm[i] - op.zero_order_bound()[i] * u[i];
    const double rhs = log_absorption(a, std::max(u[i], 0.0));
    const double scale = 1.0 + std::abs(Lm[i]) + std::abs(rhs);
    if (lhs - rhs > tol * scale) {
      rep.message = "not a supersolution at node " + std::to_string(i);
      return rep;
    }
  }
  std::size_t zeros = 0;
  rep.min_interior = std::numeric_limits<double>::infinity();
  for (int i : g.interior()) {
    rep.min_interior = std::min(rep.min_interior, u[i]);
    if (u[i] <= tol * scale_u) ++zeros;
  }
  if (zeros == g.interior().size() && u.sup_norm() <= tol * scale_u)
    rep.verdict = SMPClass::identically_zero;
  else if (zeros == 0)
    rep.verdict = SMPClass::strictly_positive;
  else {
    rep.verdict = SMPClass::violation;
    rep.message = std::to_string(zeros) + " interior zero(s) next to positive values";
  }
  return rep;
}

/// min over boundary nodes of (u(inward neighbour) - u) / step.
inline double hopf_margin(const GridFunction& u) {
  const auto& g = *u.grid();
  double m = std::numeric_limits<double>::infinity();
  for (int i : g.boundary()) {
    const int j = g.inward_neighbor(i);
    if (j < 0) continue;
    m = std::min(m, (u[j] - u[i]) / g.inward_step(i));
  }
  return m;
}

}  // namespace qgrowth
