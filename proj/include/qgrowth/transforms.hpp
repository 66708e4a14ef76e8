#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "qgrowth/operators.hpp"

namespace qgrowth {

enum class ChangeDirection { v_change, w_change };

/// v = (e^{mu} - 1)/m  or  w = (1 - e^{-mu})/m, with m > 0.
struct ExpChange {
  double m = 1.0;
  ChangeDirection direction = ChangeDirection::v_change;

  ExpChange(double m_, ChangeDirection d) : m(m_), direction(d) {
    if (!(m > 0) || !std::isfinite(m)) throw DomainError("exponential change: m must be positive and finite");
  }
  /// m = mu_1 / Lambda_P
  static ExpChange lower(double mu1, const Ellipticity& e, ChangeDirection d = ChangeDirection::w_change) {
    return {mu1 / e.hi, d};
  }
  /// m = mu_2 / lambda_P
  static ExpChange upper(double mu2, const Ellipticity& e, ChangeDirection d = ChangeDirection::v_change) {
    return {mu2 / e.lo, d};
  }

  double forward(double u) const {
    if (std::abs(m * u) > 700.0) throw DomainError("exponential change: |m u| > 700");
    return direction == ChangeDirection::v_change ? std::expm1(m * u) / m : -std::expm1(-m * u) / m;
  }
  double inverse(double t) const {
    if (direction == ChangeDirection::v_change) {
      if (!(1.0 + m * t > 0)) throw DomainError("exponential change: 1 + m t must be positive");
      return std::log1p(m * t) / m;
    }
    if (!(1.0 - m * t > 0)) throw DomainError("exponential change: 1 - m t must be positive");
    return -std::log1p(-m * t) / m;
  }
  /// 1 + m v for the v-change, 1 - m w for the w-change, i.e. e^{+-mu}.
  double factor(double t) const { return direction == ChangeDirection::v_change ? 1.0 + m * t : 1.0 - m * t; }
};

inline GridFunction forward(const GridFunction& u, const ExpChange& ch) {
  GridFunction out(u.grid());
  for (int i : u.grid()->active()) {
    if (std::abs(ch.m * u[i]) > 700.0)
      throw DomainError("exponential change: |m u| > 700 at node " + std::to_string(i));
    out[i] = ch.forward(u[i]);
  }
  return out;
}

inline GridFunction inverse(const GridFunction& t, const ExpChange& ch) {
  GridFunction out(t.grid());
  for (int i : t.grid()->active()) {
    if (!(ch.factor(t[i]) > 0))
      throw DomainError("exponential change: inverse undefined at node " + std::to_string(i) +
                        (ch.direction == ChangeDirection::v_change ? " (1 + m t <= 0)" : " (1 - m t <= 0)"));
    out[i] = ch.inverse(t[i]);
  }
  return out;
}

struct SandwichReport {
  double max_violation = 0.0;
  int worst_node = -1;
  /// Largest |lower|, |middle|, |upper| seen, for scale.
  double magnitude = 0.0;
};

/// Checks, for both Pucci operators and at every interior node,
///   v-change:  M(D^2u) + m lo |Du|^2 <= M(D^2v)/(1+mv) <= M(D^2u) + m hi |Du|^2
///   w-change:  M(D^2u) - m hi |Du|^2 <= M(D^2w)/(1-mw) <= M(D^2u) - m lo |Du|^2
/// using centred differences throughout.
inline SandwichReport sandwich_check(const GridFunction& u, const ExpChange& ch, const Ellipticity& e) {
  const auto& g = *u.grid();
  const GridFunction t = forward(u, ch);
  const auto Hu = hessian_centered(u);
  const auto Ht = hessian_centered(t);
  const auto Du = gradient_centered(u);
  const int n = g.dimension();
  SandwichReport rep;
  for (std::size_t k = 0; k < Hu.nodes.size(); ++k) {
    const int i = Hu.nodes[k];
    const Eigen::MatrixXd Xu = Hu.values[k].topLeftCorner(n, n);
    const Eigen::MatrixXd Xt = Ht.values[k].topLeftCorner(n, n);
    const double p2 = Du.values[k].squaredNorm();
    const double f = ch.factor(t[i]);
    for (int sign : {1, -1}) {
      auto P = [&](const Eigen::MatrixXd& X) { return sign > 0 ? pucci_plus(X, e) : pucci_minus(X, e); };
      const double base = P(Xu);
      const double mid = P(Xt) / f;
      double lo, hi;
      if (ch.direction == ChangeDirection::v_change) {
        lo = base + ch.m * e.lo * p2;
        hi = base + ch.m * e.hi * p2;
      } else {
        lo = base - ch.m * e.hi * p2;
        hi = base - ch.m * e.lo * p2;
      }
      const double viol = std::max({lo - mid, mid - hi, 0.0});
      rep.magnitude = std::max({rep.magnitude, std::abs(lo), std::abs(mid), std::abs(hi)});
      if (viol > rep.max_violation) {
        rep.max_violation = viol;
        rep.worst_node = i;
      }
    }
  }
  return rep;
}

/// -a Lap v = g(x, v) with g = (lambda/m) c (1+mv) ln(1+mv) + h (1+mv), u = ln(1+mv)/m.
/// `exact` is false when the reduction only brackets the original problem.
struct SemilinearReduction {
  GridPtr grid;
  double diffusion = 1.0;
  double m = 1.0;
  double lambda = 0.0;
  GridFunction c, h;
  std::function<double(double, double)> c_source, h_source;
  bool exact = true;

  double rhs(double cc, double hh, double v) const {
    const double t = 1.0 + m * v;
    if (!(t > 0)) throw DomainError("semilinear reduction: 1 + m v must be positive");
    return (lambda / m) * cc * t * std::log(t) + hh * t;
  }
  double rhs_derivative(double cc, double hh, double v) const {
    const double t = 1.0 + m * v;
    if (!(t > 0)) throw DomainError("semilinear reduction: 1 + m v must be positive");
    return lambda * cc * (std::log(t) + 1.0) + hh * m;
  }
  GridFunction rhs(const GridFunction& v) const {
    GridFunction out(v.grid());
    for (int i : v.grid()->active()) out[i] = rhs(c[i], h[i], v[i]);
    return out;
  }
  ExpChange change() const { return {m, ChangeDirection::v_change}; }
};

/// Eliminates the quadratic gradient term when M = mu I is constant and F is
/// a constant isotropic diffusion a Lap (linear kind, or Pucci with lo = hi,
/// no drift or zero-order part). Pucci-plus with lo < hi is reduced with
/// a = lo and flagged inexact.
inline SemilinearReduction semilinear_reduction(const ProblemSpec& P) {
  const auto& g = *P.grid;
  double mu;
  if (!P.M.is_constant_scalar(g, &mu))
    throw UnsupportedError("semilinear reduction: M must be a spatially constant multiple of the identity");
  SemilinearReduction r;
  r.grid = P.grid;
  r.lambda = P.lambda;
  r.c = P.c;
  r.h = P.h;
  r.c_source = P.c_source;
  r.h_source = P.h_source;
  const auto& op = P.op;
  auto no_lower_order = [&] {
    for (int i : g.active())
      if (op.drift_bound()[i] != 0.0 || op.zero_order_bound()[i] != 0.0) return false;
    return true;
  };
  if (op.kind() == OperatorKind::linear) {
    const auto& mem = op.groups()[0][0];
    const double a = mem.a11[g.interior()[0]];
    for (int i : g.interior()) {
      if (mem.a11[i] != a || mem.a12[i] != 0.0 || (g.dimension() == 2 && mem.a22[i] != a) || mem.b1[i] != 0.0 ||
          mem.b2[i] != 0.0 || mem.d0[i] != 0.0)
        throw UnsupportedError("semilinear reduction: linear operator must be a constant multiple of the Laplacian");
    }
    r.diffusion = a;
  } else if (op.is_pucci()) {
    if (!no_lower_order()) throw UnsupportedError("semilinear reduction: Pucci operator must have b = d = 0");
    const auto& e = op.ellipticity();
    if (e.lo == e.hi) {
      r.diffusion = e.lo;
    } else if (op.kind() == OperatorKind::pucci_plus) {
      r.diffusion = e.lo;
      r.exact = false;
    } else {
      throw UnsupportedError("semilinear reduction: pucci_minus with lambda_P < Lambda_P is not reducible");
    }
  } else {
    throw UnsupportedError("semilinear reduction: operator kind " + to_string(op.kind()) + " is not reducible");
  }
  r.m = mu / r.diffusion;
  if (!P.ctilde.empty() && P.k != 0.0)
    throw UnsupportedError("semilinear reduction: k-forcing is not supported");
  return r;
}

}  // namespace qgrowth
