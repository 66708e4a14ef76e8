#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qgrowth/dirichlet.hpp"

namespace qgrowth {

struct EigenPair {
  double lambda1 = 0.0;
  GridFunction phi1;
  /// max |L^-[phi1] + lambda1 c phi1| over interior nodes.
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Collatz-Wielandt bracket of the final iterate.
  double lower = 0.0, upper = 0.0;
  std::vector<double> rayleigh_history;
  std::string message;
};

/// L^- = M^-(D^2 .) - b|D .| built from an operator's ellipticity and drift bound.
inline OperatorSpec extremal_minus(const OperatorSpec& op) {
  return OperatorSpec::pucci(OperatorKind::pucci_minus, op.grid(), op.ellipticity(), op.drift_bound(), {},
                             op.stencil());
}

inline GridFunction eigen_residual(const OperatorSpec& Lminus, const GridFunction& c, double lambda,
                                   const GridFunction& phi) {
  GridFunction r = apply_F(Lminus, phi);
  for (int i : phi.grid()->interior()) r[i] += lambda * c[i] * phi[i];
  return r;
}

/// Principal weighted eigenpair of L^- (built from `op`) with weight c, by
/// nonlinear inverse iteration phi <- solve(-L^-[psi] = c phi), normalised
/// to max phi = 1.
inline EigenPair principal_eigenpair(const OperatorSpec& op, const GridFunction& c, double tol = 1e-9,
                                     int max_iter = 500, const GridFunction& start = {}) {
  const auto& g = *op.grid();
  bool positive = false;
  for (int i : g.active()) {
    if (c[i] < 0) throw ValidationError("principal_eigenpair: weight c must be >= 0");
    positive = positive || (c[i] > 0 && g.is_interior(i));
  }
  if (!positive) throw ValidationError("principal_eigenpair: weight c must be positive somewhere");
  const OperatorSpec L = extremal_minus(op);
  EigenPair ep;
  GridFunction phi = start.empty() ? GridFunction(op.grid(), 1.0) : start;
  phi.zero_boundary();
  if (!(phi.max() > 0)) throw DomainError("principal_eigenpair: start must be positive somewhere");
  phi *= 1.0 / phi.max();
  // roundoff floor of the discrete operator applied to an O(1) function
  const double hmin = g.dimension() == 1 ? g.hx() : std::min(g.hx(), g.hy());
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * 2.0 * g.dimension() * op.ellipticity().hi /
                       (hmin * hmin);
  const double inner_tol = std::max(floor, 1e-3 * tol);
  for (int it = 0; it < max_iter; ++it) {
    SolveReport s = solve_dirichlet(L, pointwise(c, phi), inner_tol);
    if (!s.converged) {
      ep.message = "inner solve failed: " + s.message;
      break;
    }
    const GridFunction& psi = s.solution;
    const double pm = psi.max();
    if (!(pm > 0)) {
      ep.message = "iterate lost positivity";
      break;
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int i : g.interior())
      if (c[i] > 0 && psi[i] > 0) {
        const double q = phi[i] / psi[i];
        lo = std::min(lo, q);
        hi = std::max(hi, q);
      }
    const double lambda = 1.0 / pm;
    phi = psi * lambda;
    ep.rayleigh_history.push_back(lambda);
    ep.iterations = it + 1;
    ep.lambda1 = lambda;
    ep.lower = lo;
    ep.upper = hi;
    const GridFunction r = eigen_residual(L, c, lambda, phi);
    double res = 0;
    for (int i : g.interior()) res = std::max(res, std::abs(r[i]));
    ep.residual = res;
    if (res <= std::max(tol, 10.0 * floor)) {
      ep.converged = true;
      if (res > tol) ep.message = "converged at the roundoff floor " + std::to_string(10.0 * floor) + " above tol";
      break;
    }
  }
  ep.phi1 = phi;
  if (!ep.converged && ep.message.empty()) ep.message = "iteration budget exhausted";
  return ep;
}

struct SimplicityReport {
  bool preconditions_ok = true;
  std::string message;
  double t = 0.0;
  /// max |u - t v|
  double deviation = 0.0;
  /// deviation / max |u|
  double relative_deviation = 0.0;
};

/// Given a positive supersolution u and a subsolution v (positive somewhere)
/// of L^-[w] + lambda1 c w = 0, finds t > 0 minimising max |u - t v|.
inline SimplicityReport simplicity_check(const GridFunction& u, const GridFunction& v, const OperatorSpec& op,
                                         const GridFunction& c, double lambda1, double tol) {
  SimplicityReport rep;
  const auto& g = *u.grid();
  const OperatorSpec L = extremal_minus(op);
  const GridFunction Lu = apply_F(L, u), Lv = apply_F(L, v);
  for (int i : g.interior()) {
    const double ru = Lu[i] + lambda1 * c[i] * u[i];
    const double rv = Lv[i] + lambda1 * c[i] * v[i];
    const double su = 1.0 + std::abs(Lu[i]) + std::abs(lambda1 * c[i] * u[i]);
    const double sv = 1.0 + std::abs(Lv[i]) + std::abs(lambda1 * c[i] * v[i]);
    if (ru > tol * su) {
      rep.preconditions_ok = false;
      rep.message = "u is not a supersolution at node " + std::to_string(i);
      return rep;
    }
    if (rv < -tol * sv) {
      rep.preconditions_ok = false;
      rep.message = "v is not a subsolution at node " + std::to_string(i);
      return rep;
    }
    if (u[i] <= 0) {
      rep.preconditions_ok = false;
      rep.message = "u is not positive at node " + std::to_string(i);
      return rep;
    }
  }
  if (!(v.interior_max() > 0)) {
    rep.preconditions_ok = false;
    rep.message = "v must be positive somewhere";
    return rep;
  }
  auto dev = [&](double t) {
    double m = 0;
    for (int i : g.active()) m = std::max(m, std::abs(u[i] - t * v[i]));
    return m;
  };
  double a = 0.0, b = 2.0 * u.sup_norm() / v.interior_max() + 1.0;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = dev(x1), f2 = dev(x2);
  for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + b); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = dev(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = dev(x2);
    }
  }
  rep.t = 0.5 * (a + b);
  rep.deviation = dev(rep.t);
  rep.relative_deviation = rep.deviation / std::max(u.sup_norm(), 1e-300);
  return rep;
}

}  // namespace qgrowth
