#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "qgrowth/dirichlet.hpp"
#include "qgrowth/parallel.hpp"

namespace qgrowth {

/// Right-hand side lambda c u + <M Du, Du> + h (+ k ctilde) frozen at u; zero on the boundary.
inline GridFunction frozen_rhs(const GridFunction& u, const ProblemSpec& P) {
  const auto& g = *P.grid;
  GridFunction f = quadratic_field(u, P.M, P.quad, P.op.ellipticity().lo);
  for (int i : g.interior()) {
    f[i] += P.lambda * P.c[i] * u[i] + P.h[i];
    if (!P.ctilde.empty()) f[i] += P.k * P.ctilde[i];
  }
  return f;
}

/// T(u): the Dirichlet solve of -F[U] = lambda c u + <M Du, Du> + h.
inline GridFunction apply_T(const GridFunction& u, const ProblemSpec& P, double tol) {
  SolveReport r = solve_dirichlet(P.op, frozen_rhs(u, P), tol);
  if (!r.converged) throw Error("apply_T: inner Dirichlet solve failed: " + r.message);
  return r.solution;
}

/// Gradient cap R and ordered sandwich alpha <= beta.
struct Truncation {
  double R = 1.0;
  GridFunction alpha, beta;

  void validate() const {
    if (!(R > 0)) throw ConfigError("truncation: R must be positive");
    const auto& g = *alpha.grid();
    for (int i : g.active())
      if (alpha[i] > beta[i]) throw ValidationError("truncation: alpha > beta at node " + std::to_string(i));
    auto sup_grad = [](const GridFunction& w) {
      double m = 0;
      for (const auto& p : gradient_centered(w).values) m = std::max(m, p.norm());
      return m;
    };
    if (!(R > std::max(sup_grad(alpha), sup_grad(beta))))
      throw ValidationError("truncation: R must exceed the gradients of alpha and beta");
  }
};

/// Pointwise truncated nonlinearity: u is clamped to [alpha, beta] (taking the
/// obstacle's own gradient there), and the quadratic term is scaled by R^2/|p|^2
/// wherever the centred gradient reaches R. Bounded by |h| + mu_2 R^2 + |lambda c| max(|alpha|, |beta|).
inline GridFunction truncated_rhs(const GridFunction& u, const Truncation& T, const ProblemSpec& P) {
  const auto& g = *P.grid;
  const double lp = P.op.ellipticity().lo;
  const auto Du = gradient_centered(u), Da = gradient_centered(T.alpha), Db = gradient_centered(T.beta);
  const GridFunction Qu = quadratic_field(u, P.M, P.quad, lp);
  const GridFunction Qa = quadratic_field(T.alpha, P.M, P.quad, lp);
  const GridFunction Qb = quadratic_field(T.beta, P.M, P.quad, lp);
  GridFunction out(P.grid);
  const auto& nodes = g.interior();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const int i = nodes[k];
    double r;
    Eigen::Vector2d p;
    double q;
    if (u[i] < T.alpha[i]) {
      r = T.alpha[i];
      p = Da.values[k];
      q = Qa[i];
    } else if (u[i] > T.beta[i]) {
      r = T.beta[i];
      p = Db.values[k];
      q = Qb[i];
    } else {
      r = u[i];
      p = Du.values[k];
      q = Qu[i];
    }
    const double pn2 = p.squaredNorm();
    // the stencil value can exceed the cap even when the centred gradient does not
    if (pn2 >= T.R * T.R || std::abs(q) > P.M.mu2 * T.R * T.R) {
      Eigen::Matrix2d Mx;
      Mx << P.M.m11[i], P.M.m12[i], P.M.m12[i], P.M.m22[i];
      q = p.dot(Mx * p) * std::min(1.0, T.R * T.R / pn2);
    }
    out[i] = P.lambda * P.c[i] * r + q + P.h[i];
    if (!P.ctilde.empty()) out[i] += P.k * P.ctilde[i];
  }
  return out;
}

struct FullSolveOptions {
  double tol = 1e-10;
  int max_iter = 200;
  double blowup_cap = 1e6;
};

/// Damped Newton on the full problem from `seed`. Tolerance is relative to the
/// local term magnitude.
inline SolveReport solve_full(const ProblemSpec& P, const GridFunction& seed, const FullSolveOptions& o = {}) {
  if (!(o.tol > 0)) throw ConfigError("solve_full: tol must be positive");
  NewtonOptions opt;
  opt.tol = o.tol;
  opt.max_iter = o.max_iter;
  opt.blowup_cap = o.blowup_cap;
  opt.damped = true;
  opt.relative = true;
  Eigen::VectorXd u0 = seed.empty() ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(P.grid->size())) : seed.values();
  auto assemble = [&](const Eigen::VectorXd& u, bool jac) { return linearize_P(u, P, jac); };
  return to_report(P.grid, newton_solve(std::move(u0), assemble, opt));
}

/// Whether u is a subsolution (sign > 0) or supersolution (sign < 0) of the
/// problem up to a relative residual tolerance, including boundary signs.
inline bool residual_sign_ok(const GridFunction& u, const ProblemSpec& P, int sign, double tol,
                             std::string* why = nullptr) {
  const auto L = linearize_P(u.values(), P, false);
  for (int i : P.grid->interior()) {
    const double r = L.residual[i] / L.scale[i];
    if (sign > 0 ? r < -tol : r > tol) {
      if (why) *why = (sign > 0 ? "subsolution" : "supersolution") + std::string(" sign fails at node ") + std::to_string(i);
      return false;
    }
  }
  for (int i : P.grid->boundary())
    if (sign > 0 ? u[i] > tol : u[i] < -tol) {
      if (why) *why = "boundary sign fails at node " + std::to_string(i);
      return false;
    }
  return true;
}

/// u << v: strict inside; on the boundary either strict, or equal with a
/// strictly smaller inward one-sided slope.
inline bool strictly_below(const GridFunction& u, const GridFunction& v, double tol = 0.0) {
  const auto& g = *u.grid();
  for (int i : g.interior())
    if (!(v[i] - u[i] > tol)) return false;
  const double eq = 1e-13 * (1.0 + std::max(u.sup_norm(), v.sup_norm()));
  for (int i : g.boundary()) {
    if (v[i] - u[i] > eq) continue;
    if (std::abs(v[i] - u[i]) > eq) return false;
    const int j = g.inward_neighbor(i);
    if (j < 0) return false;
    const double s = g.inward_step(i);
    if (!((u[j] - u[i]) / s < (v[j] - v[i]) / s)) return false;
  }
  return true;
}

/// Pointwise comparison u <= v + tol on active nodes.
inline bool below_or_equal(const GridFunction& u, const GridFunction& v, double tol = 0.0) {
  for (int i : u.grid()->active())
    if (u[i] > v[i] + tol) return false;
  return true;
}

/// Distinct converged solutions of the problem from a list of seeds, in order
/// of increasing maximum.
inline std::vector<GridFunction> seed_sweep(const ProblemSpec& P, const std::vector<GridFunction>& seeds,
                                            const FullSolveOptions& o = {}, double distinct = 1e-6, int threads = 1) {
  std::vector<SolveReport> reports(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t i) { reports[i] = solve_full(P, seeds[i], o); });
  std::vector<GridFunction> found;
  for (const auto& r : reports) {
    if (!r.converged) continue;
    bool dup = false;
    for (const auto& f : found)
      if ((f - r.solution).sup_norm() <= distinct * (1.0 + f.sup_norm())) dup = true;
    if (!dup) found.push_back(r.solution);
  }
  std::sort(found.begin(), found.end(), [](const GridFunction& a, const GridFunction& b) { return a.max() < b.max(); });
  return found;
}

/// Amplitude family A sin-bump / plateau seeds used for multi-solution searches.
inline std::vector<GridFunction> amplitude_seeds(const GridPtr& grid, const std::vector<double>& amplitudes) {
  std::vector<GridFunction> out;
  const auto& g = *grid;
  auto bump = [&](double x, double y) {
    if (g.dimension() == 1) return std::sin(M_PI * (x - g.x_lo()) / (g.x_hi() - g.x_lo()));
    if (g.shape() == Shape::disk) return std::max(0.0, 1.0 - (x * x + y * y) / (g.disk_radius() * g.disk_radius()));
    return std::sin(M_PI * (x - g.x_lo()) / (g.x_hi() - g.x_lo())) * std::sin(M_PI * (y - g.y_lo()) / (g.y_hi() - g.y_lo()));
  };
  for (double A : amplitudes) {
    out.push_back(GridFunction::sample(grid, [&](double x, double y) { return A * bump(x, y); }));
    out.push_back(GridFunction::sample(grid, [&](double x, double y) { return A * std::min(1.0, 8.0 * bump(x, y)); }));
  }
  for (auto& s : out) s.zero_boundary();
  return out;
}

/// Monotone-refinement surrogate for the minimal solution in [alpha, beta]:
/// solves from seeds spread across the sandwich, keeps converged solutions
/// inside it, and returns the pointwise smallest.
inline SolveReport minimal_solution(const Truncation& T, const ProblemSpec& P, double tol, double gate = 1e-8) {
  T.validate();
  SolveReport out;
  std::string why;
  if (!residual_sign_ok(T.alpha, P, +1, gate, &why) || !residual_sign_ok(T.beta, P, -1, gate, &why)) {
    out.message = "precondition: " + why;
    out.solution = T.alpha;
    return out;
  }
  FullSolveOptions o;
  o.tol = tol;
  std::vector<GridFunction> inside;
  GridFunction beta = T.beta;
  for (double theta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    GridFunction seed = T.alpha + theta * (beta - T.alpha);
    SolveReport r = solve_full(P, seed, o);
    if (!r.converged) continue;
    const double band = 1e-8 * (1.0 + r.solution.sup_norm());
    if (!below_or_equal(T.alpha, r.solution, band) || !below_or_equal(r.solution, beta, band)) continue;
    bool within_R = true;
    for (const auto& p : gradient_centered(r.solution).values)
      if (p.norm() >= T.R) within_R = false;
    if (!within_R) continue;
    inside.push_back(r.solution);
    beta = r.solution;
    out.outer_iterations += r.outer_iterations;
  }
  if (inside.empty()) {
    out.message = "no solution found inside the sandwich";
    out.solution = T.alpha;
    return out;
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < inside.size(); ++k)
    if (below_or_equal(inside[k], inside[best], 1e-9 * (1.0 + inside[best].sup_norm()))) best = k;
  out.solution = inside[best];
  const auto L = linearize_P(out.solution.values(), P, false);
  out.residual = L.relative_norm();
  out.raw_residual = L.raw_norm();
  out.converged = out.residual <= tol;
  for (const auto& s : inside)
    if (!below_or_equal(out.solution, s, 1e-9 * (1.0 + s.sup_norm()))) out.message = "found solutions are not totally ordered";
  return out;
}

}  // namespace qgrowth
