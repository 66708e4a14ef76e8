#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qgrowth/fixedpoint.hpp"
#include "qgrowth/principal.hpp"

namespace qgrowth {

enum class Parameter { lambda, k };
enum class Termination { range_exhausted, norm_cap, step_failure };

inline std::string to_string(Parameter p) { return p == Parameter::lambda ? "lambda" : "k"; }
inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::range_exhausted: return "range-exhausted";
    case Termination::norm_cap: return "norm-cap";
    case Termination::step_failure: return "step-failure";
  }
  return "?";
}

struct BranchPoint {
  double parameter = 0.0;
  GridFunction solution;
  double sup_norm = 0.0, max_u = 0.0, min_u = 0.0, probe_value = 0.0;
  double arclength = 0.0;
  /// Sign of the parameter component of the secant arriving at this point.
  int tangent_sign = 1;
  bool fold = false;
  double residual = 0.0;
  /// Parameter component of the unit tangent at this point.
  double tangent_parameter = 0.0;
};

struct FoldEstimate {
  bool present = false;
  double value = 0.0;
  double lo = 0.0, hi = 0.0;
  std::size_t index = 0;
};

struct Branch {
  Parameter parameter = Parameter::lambda;
  std::vector<BranchPoint> points;
  std::vector<double> folds;
  Termination termination = Termination::range_exhausted;
  std::string message;
  int probe_node = -1;
};

struct ContinuationOptions {
  double p_min = -1.0, p_max = 1.0;
  double ds = 0.05, ds_min = 1e-7, ds_max = 2.0;
  double norm_cap = 1e3;
  double tol = 1e-10;
  int max_points = 50000;
  int max_corrector = 15;
  /// A change of direction in the parameter is only accepted with steps at most this long.
  double fold_ds = 1e-3;
  /// Initial direction of travel in the parameter.
  int direction = 1;
  int probe_node = -1;
};

namespace detail {

inline void set_parameter(ProblemSpec& P, Parameter which, double p) {
  if (which == Parameter::lambda)
    P.lambda = p;
  else
    P.k = p;
}

/// d residual / d parameter.
inline Eigen::VectorXd parameter_derivative(const ProblemSpec& P, Parameter which, const Eigen::VectorXd& u) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(u.size());
  for (int i : P.grid->interior()) d[i] = which == Parameter::lambda ? P.c[i] * u[i] : P.ctilde[i];
  return d;
}

inline double weighted_sq(double w, const Eigen::VectorXd& du, double dp) { return w * du.squaredNorm() + dp * dp; }

/// Newton on residual(u, p) = 0 together with |(u,p) - (u0,p0)|_w = ds.
inline bool arclength_correct(ProblemSpec& P, Parameter which, Eigen::VectorXd& u, double& p,
                              const Eigen::VectorXd& u0, double p0, double ds, double w, double tol, int max_it,
                              double cap, double* residual_out) {
  const auto n = u.size();
  for (int it = 0; it <= max_it; ++it) {
    set_parameter(P, which, p);
    Linearization L = linearize_P(u, P, true);
    const double g = weighted_sq(w, u - u0, p - p0) - ds * ds;
    const double rel = L.relative_norm();
    if (!std::isfinite(rel)) return false;
    if (rel <= tol && std::abs(g) <= 1e-8 * ds * ds) {
      *residual_out = rel;
      return true;
    }
    if (it == max_it) break;
    const Eigen::VectorXd gp = parameter_derivative(P, which, u);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(L.jacobian.nonZeros() + 2 * n + 1));
    for (int k = 0; k < L.jacobian.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator itr(L.jacobian, k); itr; ++itr)
        trips.emplace_back(static_cast<int>(itr.row()), static_cast<int>(itr.col()), itr.value());
    for (Eigen::Index i = 0; i < n; ++i) {
      if (gp[i] != 0.0) trips.emplace_back(static_cast<int>(i), static_cast<int>(n), gp[i]);
      const double r = 2.0 * w * (u[i] - u0[i]);
      if (r != 0.0) trips.emplace_back(static_cast<int>(n), static_cast<int>(i), r);
    }
    trips.emplace_back(static_cast<int>(n), static_cast<int>(n), 2.0 * (p - p0));
    Eigen::SparseMatrix<double> A(n + 1, n + 1);
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = -L.residual;
    rhs[n] = -g;
    LinearSolveResult ls = solve_sparse(A, rhs);
    if (!ls.ok) return false;
    u += ls.x.head(n);
    p += ls.x[n];
    if (!u.allFinite() || u.cwiseAbs().maxCoeff() > 10.0 * cap) return false;
  }
  return false;
}

/// Unit tangent (weighted norm) at a solution, oriented along (ru, rp).
inline bool tangent_at(const ProblemSpec& P0, Parameter which, const Eigen::VectorXd& u, double p,
                       const Eigen::VectorXd& ru, double rp, double w, Eigen::VectorXd* tu, double* tp) {
  ProblemSpec P = P0;
  set_parameter(P, which, p);
  const auto n = u.size();
  Linearization L = linearize_P(u, P, true);
  const Eigen::VectorXd gp = parameter_derivative(P, which, u);
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < L.jacobian.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator itr(L.jacobian, k); itr; ++itr)
      trips.emplace_back(static_cast<int>(itr.row()), static_cast<int>(itr.col()), itr.value());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (gp[i] != 0.0) trips.emplace_back(static_cast<int>(i), static_cast<int>(n), gp[i]);
    if (ru[i] != 0.0) trips.emplace_back(static_cast<int>(n), static_cast<int>(i), w * ru[i]);
  }
  trips.emplace_back(static_cast<int>(n), static_cast<int>(n), rp);
  Eigen::SparseMatrix<double> A(n + 1, n + 1);
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs[n] = 1.0;
  LinearSolveResult ls = solve_sparse(A, rhs);
  if (!ls.ok) return false;
  const double nrm = std::sqrt(weighted_sq(w, ls.x.head(n), ls.x[n]));
  if (!(nrm > 0)) return false;
  *tu = ls.x.head(n) / nrm;
  *tp = ls.x[n] / nrm;
  return true;
}

/// Turning point between two points whose tangents point opposite ways in the
/// parameter: critical point of the cubic Hermite interpolant p(s).
inline FoldEstimate fold_between(const BranchPoint& a, const BranchPoint& b) {
  FoldEstimate f;
  f.present = true;
  const double h = b.arclength - a.arclength;
  const double pa = a.parameter, pb = b.parameter, ma = a.tangent_parameter * h, mb = b.tangent_parameter * h;
  auto value = [&](double t) {
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * pa + (t3 - 2 * t2 + t) * ma + (-2 * t3 + 3 * t2) * pb + (t3 - t2) * mb;
  };
  auto slope = [&](double t) {
    const double t2 = t * t;
    return (6 * t2 - 6 * t) * pa + (3 * t2 - 4 * t + 1) * ma + (-6 * t2 + 6 * t) * pb + (3 * t2 - 2 * t) * mb;
  };
  double lo = 0.0, hi = 1.0;
  const double s0 = slope(0.0);
  if (s0 * slope(1.0) < 0)
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if ((slope(mid) > 0) == (s0 > 0))
        lo = mid;
      else
        hi = mid;
    }
  const double est = value(0.5 * (lo + hi));
  const bool is_max = a.tangent_sign > 0;
  if (is_max) {
    f.lo = std::max(pa, pb);
    f.hi = f.lo + std::abs(h);
  } else {
    f.hi = std::min(pa, pb);
    f.lo = f.hi - std::abs(h);
  }
  f.value = std::clamp(est, f.lo, f.hi);
  return f;
}

inline BranchPoint make_point(const ProblemSpec& P, double p, const Eigen::VectorXd& u, double s, int sign,
                              double residual, int probe) {
  BranchPoint b;
  b.parameter = p;
  b.solution = GridFunction(P.grid, u);
  b.solution.zero_boundary();
  b.sup_norm = b.solution.sup_norm();
  b.max_u = b.solution.max();
  b.min_u = b.solution.min();
  b.probe_value = b.solution[static_cast<std::size_t>(probe)];
  b.arclength = s;
  b.tangent_sign = sign;
  b.residual = residual;
  return b;
}

}  // namespace detail

/// Pseudo-arclength continuation of the problem in lambda or k, starting from
/// a solution (or seed) at the parameter value carried by P0.
inline Branch trace_branch(const ProblemSpec& P0, const GridFunction& start, Parameter which,
                           const ContinuationOptions& o) {
  if (which == Parameter::k && P0.ctilde.empty()) throw ConfigError("trace_branch: k-continuation needs ctilde");
  if (!(o.ds > 0) || !(o.ds_min > 0) || !(o.ds_max >= o.ds)) throw ConfigError("trace_branch: invalid step sizes");
  ProblemSpec P = P0;
  const auto& g = *P.grid;
  Branch br;
  br.parameter = which;
  br.probe_node = o.probe_node >= 0 ? o.probe_node : g.centroid_node();
  const double w = g.cell_measure();
  double p = which == Parameter::lambda ? P.lambda : P.k;
  if (p < o.p_min || p > o.p_max) throw ConfigError("trace_branch: start parameter outside range");

  FullSolveOptions fo;
  fo.tol = o.tol;
  fo.blowup_cap = 10.0 * o.norm_cap;
  SolveReport first = solve_full(P, start, fo);
  if (!first.converged) {
    br.termination = Termination::step_failure;
    br.message = "no solution at the start parameter: " + first.message;
    return br;
  }
  Eigen::VectorXd u = first.solution.values();
  br.points.push_back(detail::make_point(P, p, u, 0.0, o.direction, first.residual, br.probe_node));

  // initial tangent from J du/dp = -G_p
  Eigen::VectorXd tu;
  double tp;
  {
    Linearization L = linearize_P(u, P, true);
    LinearSolveResult ls = solve_sparse(L.jacobian, -detail::parameter_derivative(P, which, u));
    if (!ls.ok) {
      br.termination = Termination::step_failure;
      br.message = "singular Jacobian at the start parameter";
      return br;
    }
    tu = ls.x;
    tp = 1.0;
    const double nrm = std::sqrt(detail::weighted_sq(w, tu, tp));
    tu *= o.direction / nrm;
    tp *= o.direction / nrm;
  }
  br.points.back().tangent_parameter = tp;

  double ds = o.ds;
  double s = 0.0;
  while (true) {
    if (static_cast<int>(br.points.size()) >= o.max_points) {
      br.termination = Termination::step_failure;
      br.message = "point budget exhausted";
      break;
    }
    bool accepted = false;
    Eigen::VectorXd un;
    double pn = 0.0, res = 0.0;
    while (ds >= o.ds_min) {
      un = u + ds * tu;
      pn = p + ds * tp;
      if (detail::arclength_correct(P, which, un, pn, u, p, ds, w, o.tol, o.max_corrector, o.norm_cap, &res)) {
        const double ahead = w * tu.dot(un - u) + tp * (pn - p);
        if (ahead > 0.5 * ds) {
          accepted = true;
          break;
        }
      }
      ds *= 0.5;
    }
    if (!accepted) {
      br.termination = Termination::step_failure;
      br.message = "corrector failed at minimum step";
      break;
    }
    if (pn < o.p_min || pn > o.p_max) {
      // land on the range end by a fixed-parameter solve from the interpolated chord
      const double bound = pn < o.p_min ? o.p_min : o.p_max;
      const double t = (bound - p) / (pn - p);
      ProblemSpec Pb = P;
      detail::set_parameter(Pb, which, bound);
      GridFunction seed(P.grid);
      seed.values() = u + t * (un - u);
      SolveReport last = solve_full(Pb, seed, fo);
      if (last.converged) {
        Eigen::VectorXd ul = last.solution.values();
        const double chord = std::sqrt(detail::weighted_sq(w, ul - u, bound - p));
        s += chord;
        br.points.push_back(detail::make_point(Pb, bound, ul, s, br.points.back().tangent_sign, last.residual,
                                               br.probe_node));
        br.points.back().tangent_parameter = tp;
      }
      br.termination = Termination::range_exhausted;
      break;
    }
    Eigen::VectorXd du = un - u;
    double dp = pn - p;
    const double chord = std::sqrt(detail::weighted_sq(w, du, dp));
    Eigen::VectorXd tu_new;
    double tp_new;
    if (!detail::tangent_at(P, which, un, pn, du / chord, dp / chord, w, &tu_new, &tp_new)) {
      br.termination = Termination::step_failure;
      br.message = "singular bordered system at accepted point";
      break;
    }
    const int last_sign = br.points.back().tangent_sign;
    const int sign = tp_new > 0 ? 1 : (tp_new < 0 ? -1 : last_sign);
    if (sign != last_sign && chord > o.fold_ds) {
      ds = std::max(0.5 * o.fold_ds, 0.25 * ds);
      continue;
    }
    s += chord;
    tu = du / chord;
    tp = dp / chord;
    u = std::move(un);
    p = pn;
    br.points.push_back(detail::make_point(P, p, u, s, sign, res, br.probe_node));
    br.points.back().tangent_parameter = tp_new;
    if (br.points.back().sup_norm >= o.norm_cap) {
      br.termination = Termination::norm_cap;
      break;
    }
    ds = std::min(o.ds_max, ds * 1.5);
  }

  for (std::size_t k = 0; k + 1 < br.points.size(); ++k)
    if (br.points[k].tangent_sign != br.points[k + 1].tangent_sign) {
      br.points[k].fold = true;
      br.folds.push_back(detail::fold_between(br.points[k], br.points[k + 1]).value);
    }
  return br;
}

/// First turning point of the branch, located between the two consecutive
/// points whose tangents disagree in the sign of their parameter component.
inline FoldEstimate detect_fold(const Branch& br) {
  for (std::size_t k = 0; k + 1 < br.points.size(); ++k)
    if (br.points[k].tangent_sign != br.points[k + 1].tangent_sign) {
      FoldEstimate f = detail::fold_between(br.points[k], br.points[k + 1]);
      f.index = k;
      return f;
    }
  return {};
}

/// Solutions on the branch at parameter value `p`: every crossing, in branch
/// order, interpolated and Newton-corrected at fixed parameter.
inline std::vector<GridFunction> solutions_at(const Branch& br, const ProblemSpec& P0, double p, double tol = 1e-10) {
  std::vector<GridFunction> out;
  ProblemSpec P = P0;
  detail::set_parameter(P, br.parameter, p);
  for (std::size_t k = 0; k + 1 < br.points.size(); ++k) {
    const auto& a = br.points[k];
    const auto& b = br.points[k + 1];
    const bool crosses = (a.parameter - p) * (b.parameter - p) <= 0 && a.parameter != b.parameter;
    if (!crosses) continue;
    if (b.parameter == p && k + 2 < br.points.size()) continue;
    const double t = (p - a.parameter) / (b.parameter - a.parameter);
    GridFunction seed = a.solution * (1.0 - t) + b.solution * t;
    FullSolveOptions fo;
    fo.tol = tol;
    SolveReport r = solve_full(P, seed, fo);
    if (r.converged) out.push_back(r.solution);
  }
  return out;
}

/// Re-evaluates residual_P at every branch point independently of the tracer.
inline double reverify_branch(const Branch& br, const ProblemSpec& P0) {
  ProblemSpec P = P0;
  double worst = 0;
  for (const auto& pt : br.points) {
    detail::set_parameter(P, br.parameter, pt.parameter);
    worst = std::max(worst, linearize_P(pt.solution.values(), P, false).relative_norm());
  }
  return worst;
}

/// ctilde = (lambda1/m) c + h^- + Lambda2 C0 c.
inline GridFunction build_ctilde(const GridFunction& c, const GridFunction& h, double Lambda2, double C0,
                                 const EigenPair& eig, double m) {
  if (!(Lambda2 > 0)) throw ConfigError("build_ctilde: Lambda2 must be positive");
  if (!(C0 >= 0)) throw ConfigError("build_ctilde: C0 must be nonnegative");
  if (!(m > 0)) throw ConfigError("build_ctilde: m must be positive");
  GridFunction out(c.grid());
  for (int i : c.grid()->active()) out[i] = (eig.lambda1 / m) * c[i] + std::max(-h[i], 0.0) + Lambda2 * C0 * c[i];
  return out;
}

/// Continuation in k in [k_min, k_max] at fixed lambda, starting from the k = k_min solution.
inline Branch homotopy_in_k(const ProblemSpec& P, double lambda, double k_min, double k_max,
                            const GridFunction& start, ContinuationOptions o) {
  if (!(lambda > 0)) throw ConfigError("homotopy_in_k: lambda must be positive");
  if (k_min < 0 || k_max > 1 || !(k_min < k_max)) throw ConfigError("homotopy_in_k: k range must lie in [0, 1]");
  ProblemSpec Q = P;
  Q.lambda = lambda;
  Q.k = k_min;
  o.p_min = k_min - 1e-12;
  o.p_max = k_max;
  o.direction = 1;
  return trace_branch(Q, start, Parameter::k, o);
}

}  // namespace qgrowth
