#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qgrowth/continuation.hpp"
#include "qgrowth/transforms.hpp"

namespace qgrowth {

struct BoundRow {
  double parameter = 0.0;
  double negative_part = 0.0;
  double positive_part = 0.0;
  double sup_norm = 0.0;
};

struct BoundReport {
  double window_lo = 0.0, window_hi = 0.0;
  double sup_negative_coarse = 0.0, sup_negative_fine = 0.0;
  double sup_positive_coarse = 0.0, sup_positive_fine = 0.0;
  double sup_norm_coarse = 0.0, sup_norm_fine = 0.0;
  /// |fine - coarse| / fine for the bounded quantity.
  double stability_ratio = 0.0;
  bool covered = true;
  bool degenerate = false;
  std::size_t points_coarse = 0, points_fine = 0;
  std::vector<BoundRow> table;
  std::string note;
};

namespace detail {

inline bool covers(const Branch& b, double lo, double hi) {
  if (b.points.empty()) return false;
  double pmin = b.points.front().parameter, pmax = pmin;
  for (const auto& p : b.points) {
    pmin = std::min(pmin, p.parameter);
    pmax = std::max(pmax, p.parameter);
  }
  return pmin <= lo && pmax >= hi;
}

struct WindowSup {
  double neg = 0.0, pos = 0.0, sup = 0.0;
  std::size_t count = 0;
};

inline WindowSup window_sup(const Branch& b, double lo, double hi, std::vector<BoundRow>* table) {
  WindowSup w;
  for (const auto& p : b.points) {
    if (p.parameter < lo || p.parameter > hi) continue;
    const double neg = p.solution.negative_part_norm();
    const double pos = std::max(0.0, p.max_u);
    w.neg = std::max(w.neg, neg);
    w.pos = std::max(w.pos, pos);
    w.sup = std::max(w.sup, p.sup_norm);
    ++w.count;
    if (table) table->push_back({p.parameter, neg, pos, p.sup_norm});
  }
  return w;
}

inline double ratio(double coarse, double fine) {
  if (coarse == 0.0 && fine == 0.0) return 0.0;
  return std::abs(fine - coarse) / std::max(std::abs(fine), 1e-300);
}

}  // namespace detail

/// sup ||u^-|| over accepted branch points with parameter in [0, Lambda2], on a
/// coarse and a fine branch of the same scenario.
inline BoundReport verify_lower_bound(const Branch& coarse, const Branch& fine, double Lambda2) {
  BoundReport r;
  r.window_lo = 0.0;
  r.window_hi = Lambda2;
  r.covered = detail::covers(coarse, 0.0, Lambda2) && detail::covers(fine, 0.0, Lambda2);
  if (!r.covered) r.note = "window not covered by the branch; partial report";
  const auto wc = detail::window_sup(coarse, 0.0, Lambda2, nullptr);
  const auto wf = detail::window_sup(fine, 0.0, Lambda2, &r.table);
  r.sup_negative_coarse = wc.neg;
  r.sup_negative_fine = wf.neg;
  r.sup_positive_coarse = wc.pos;
  r.sup_positive_fine = wf.pos;
  r.sup_norm_coarse = wc.sup;
  r.sup_norm_fine = wf.sup;
  r.points_coarse = wc.count;
  r.points_fine = wf.count;
  r.stability_ratio = detail::ratio(wc.neg, wf.neg);
  return r;
}

/// sup ||u|| over accepted branch points with parameter in [Lambda1, Lambda2].
/// The note records what happens below Lambda1 (norm cap reached or not).
inline BoundReport verify_upper_bound(const Branch& coarse, const Branch& fine, double Lambda1, double Lambda2) {
  BoundReport r;
  r.window_lo = Lambda1;
  r.window_hi = Lambda2;
  if (!(Lambda1 < Lambda2)) {
    r.degenerate = true;
    r.note = "empty window";
    return r;
  }
  if (!(Lambda1 > 0)) throw ConfigError("verify_upper_bound: Lambda1 must be positive");
  r.covered = detail::covers(coarse, Lambda1, Lambda2) && detail::covers(fine, Lambda1, Lambda2);
  if (!r.covered) r.note = "window not covered by the branch; partial report";
  const auto wc = detail::window_sup(coarse, Lambda1, Lambda2, nullptr);
  const auto wf = detail::window_sup(fine, Lambda1, Lambda2, &r.table);
  r.sup_negative_coarse = wc.neg;
  r.sup_negative_fine = wf.neg;
  r.sup_positive_coarse = wc.pos;
  r.sup_positive_fine = wf.pos;
  r.sup_norm_coarse = wc.sup;
  r.sup_norm_fine = wf.sup;
  r.points_coarse = wc.count;
  r.points_fine = wf.count;
  r.stability_ratio = detail::ratio(wc.sup, wf.sup);
  const auto below = detail::window_sup(fine, 0.0, Lambda1, nullptr);
  if (fine.termination == Termination::norm_cap)
    r.note += (r.note.empty() ? "" : "; ") + std::string("below the window the branch reached the norm cap (sup ") +
              std::to_string(below.sup) + ")";
  return r;
}

struct ABPReport {
  bool gated = false;
  std::string message;
  /// max over the domain minus max over the boundary.
  double margin = 0.0;
  /// discrete L^p norm of f^-.
  double f_negative_norm = 0.0;
  double p = 0.0;
  /// margin / ||f^-||_p when both are positive.
  double ratio = 0.0;
  bool violation = false;
};

/// ABP-type check for a subsolution of L^+[u] + mu Q[u] >= f, where Q is the
/// quadratic term of the given scheme with M = I.
inline ABPReport abp_check(const GridFunction& u, const GridFunction& f, const OperatorSpec& op, double mu,
                           double C_max = 1e3, double tol = 1e-8, double p = 0.0,
                           QuadraticScheme scheme = QuadraticScheme::exponential) {
  const auto& g = *u.grid();
  ABPReport rep;
  rep.p = p > 0 ? p : 2.0 * g.dimension() + 1.0;
  const GridFunction Lp = extremal_L(u, +1, op);
  GridFunction Q(u.grid());
  if (mu > 0) Q = quadratic_field(u, MatrixField::scalar(g, mu), scheme, op.ellipticity().lo);
  for (int i : g.interior()) {
    const double lhs = Lp[i] + Q[i];
    const double scale = 1.0 + std::abs(Lp[i]) + std::abs(Q[i]) + std::abs(f[i]);
    if (lhs - f[i] < -tol * scale) {
      rep.gated = true;
      rep.message = "not a subsolution at node " + std::to_string(i);
      return rep;
    }
  }
  rep.margin = u.max() - u.boundary_max();
  GridFunction fneg(u.grid());
  for (int i : g.interior()) fneg[i] = std::max(-f[i], 0.0);
  rep.f_negative_norm = lp_norm(fneg, rep.p);
  if (rep.f_negative_norm > 0) {
    rep.ratio = std::max(rep.margin, 0.0) / rep.f_negative_norm;
    rep.violation = rep.ratio > C_max;
  } else {
    rep.violation = rep.margin > tol * (1.0 + u.sup_norm());
  }
  return rep;
}

struct QLambdaReport {
  GridFunction w;
  /// L^+[w] - m h^- w + h^- + (lambda/m) c |ln(1-mw)| (1-mw); nonnegative where the inequality holds.
  GridFunction residual;
  double min_residual = 0.0;
  /// min of residual / (1 + sum of the absolute terms)
  double min_relative = 0.0;
  double m = 0.0;
  bool saturated = false;
  int saturated_node = -1;
};

/// Transformed negative part w = (1 - e^{-m u^-})/m, m = mu_1 / Lambda_P, and
/// the residual of the inequality it satisfies.
inline QLambdaReport q_lambda_residual(const GridFunction& u, const ProblemSpec& P) {
  const auto& g = *P.grid;
  QLambdaReport rep;
  rep.m = P.M.mu1 / P.op.ellipticity().hi;
  const double m = rep.m;
  rep.w = GridFunction(P.grid);
  for (int i : g.active()) {
    const double U = std::max(-u[i], 0.0);
    rep.w[i] = -std::expm1(-m * U) / m;
    if (1.0 - m * rep.w[i] <= 1e-12) {
      rep.saturated = true;
      if (rep.saturated_node < 0) rep.saturated_node = i;
    }
  }
  const GridFunction Lp = extremal_L(rep.w, +1, P.op);
  rep.residual = GridFunction(P.grid);
  rep.min_residual = std::numeric_limits<double>::infinity();
  rep.min_relative = std::numeric_limits<double>::infinity();
  const double nb_scale = P.op.ellipticity().hi;
  const double h2 = g.dimension() == 1 ? g.hx() * g.hx() : std::min(g.hx(), g.hy()) * std::min(g.hx(), g.hy());
  for (int i : g.interior()) {
    const double hneg = std::max(-P.h[i], 0.0);
    const double t = std::max(1.0 - m * rep.w[i], 1e-300);
    const double src = (P.lambda / m) * P.c[i] * std::abs(std::log(t)) * t;
    const double r = Lp[i] - m * hneg * rep.w[i] + hneg + src;
    rep.residual[i] = r;
    rep.min_residual = std::min(rep.min_residual, r);
    const double scale = 1.0 + 4.0 * g.dimension() * nb_scale * std::abs(rep.w[i]) / h2 + std::abs(Lp[i]) +
                         m * hneg * rep.w[i] + hneg + std::abs(src);
    rep.min_relative = std::min(rep.min_relative, r / scale);
  }
  return rep;
}

}  // namespace qgrowth
