#pragma once

#include <string>
#include <vector>

#include "qgrowth/newton.hpp"

namespace qgrowth {

struct SolveReport {
  GridFunction solution;
  double residual = 0.0;
  double raw_residual = 0.0;
  int outer_iterations = 0;
  int linear_iterations = 0;
  bool converged = false;
  bool blew_up = false;
  std::vector<int> policy_changes;
  std::vector<double> residual_history;
  std::string message;
};

inline SolveReport to_report(const GridPtr& grid, NewtonResult&& r) {
  SolveReport s;
  s.solution = GridFunction(grid, Eigen::VectorXd(r.u.allFinite() ? r.u : Eigen::VectorXd::Zero(r.u.size())));
  s.solution.zero_boundary();  // Newton leaves roundoff on the Dirichlet rows
  s.residual = r.residual;
  s.raw_residual = r.raw_residual;
  s.outer_iterations = r.iterations;
  s.linear_iterations = r.linear_iterations;
  s.converged = r.converged;
  s.blew_up = r.blew_up;
  s.policy_changes = std::move(r.policy_changes);
  s.residual_history = std::move(r.history);
  s.message = std::move(r.message);
  return s;
}

inline double default_tolerance(const Grid& g) { return g.dimension() == 1 ? 1e-10 : 1e-8; }

/// Solves -F[U] = f in the interior, U = 0 on the boundary. The residual
/// max |F[U] + f| is measured in absolute terms.
inline SolveReport solve_dirichlet(const OperatorSpec& op, const GridFunction& f, double tol,
                                   const GridFunction& initial = {}, int max_iter = 200) {
  if (!(tol > 0)) throw ConfigError("solve_dirichlet: tol must be positive");
  const GridPtr& grid = op.grid();
  const auto& g = *grid;
  NewtonOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  opt.relative = false;
  opt.damped = !op.policy_iteration_applies();
  opt.blowup_cap = std::numeric_limits<double>::infinity();
  auto assemble = [&](const Eigen::VectorXd& u, bool jac) {
    return detail::assemble(
        g, u,
        [&](const detail::NodeCtx& c, double* s, int* p) {
          detail::Lin l = op.evaluate(c, p);
          l.value += f[c.node];
          *s = 1.0;
          return l;
        },
        jac);
  };
  Eigen::VectorXd u0 = initial.empty() ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size())) : initial.values();
  for (int i : g.boundary()) u0[i] = 0.0;
  return to_report(grid, newton_solve(std::move(u0), assemble, opt));
}

struct ComparisonVerdict {
  bool preconditions_ok = true;
  std::string precondition_message;
  bool ordered = false;
  /// min over active nodes of beta - alpha.
  double margin = 0.0;
  int worst_node = -1;
};

/// Checks that a sub/supersolution pair of the problem is ordered, alpha <= beta + tol.
/// Sub/supersolution status is judged by the relative residual sign.
inline ComparisonVerdict comparison_check(const GridFunction& alpha, const GridFunction& beta, const ProblemSpec& P,
                                          double tol) {
  ComparisonVerdict v;
  const auto& g = *P.grid;
  auto La = linearize_P(alpha.values(), P, false);
  auto Lb = linearize_P(beta.values(), P, false);
  for (int i : g.interior()) {
    if (La.residual[i] / La.scale[i] < -tol) {
      v.preconditions_ok = false;
      v.precondition_message = "alpha is not a subsolution at node " + std::to_string(i);
      break;
    }
    if (Lb.residual[i] / Lb.scale[i] > tol) {
      v.preconditions_ok = false;
      v.precondition_message = "beta is not a supersolution at node " + std::to_string(i);
      break;
    }
  }
  if (v.preconditions_ok)
    for (int i : g.boundary()) {
      if (alpha[i] > tol || beta[i] < -tol) {
        v.preconditions_ok = false;
        v.precondition_message = "boundary data of alpha/beta have the wrong sign at node " + std::to_string(i);
        break;
      }
    }
  v.margin = std::numeric_limits<double>::infinity();
  for (int i : g.active()) {
    const double m = beta[i] - alpha[i];
    if (m < v.margin) {
      v.margin = m;
      v.worst_node = i;
    }
  }
  v.ordered = v.preconditions_ok && v.margin >= -tol;
  return v;
}

}  // namespace qgrowth
