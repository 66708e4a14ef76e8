#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qgrowth/operators.hpp"

namespace qgrowth {

/// Result of one sparse linear solve.
struct LinearSolveResult {
  Eigen::VectorXd x;
  bool ok = false;
  int iterations = 0;
};

/// Direct sparse LU below `direct_limit` unknowns, BiCGSTAB with a diagonal
/// preconditioner above it (or when the factorization fails).
inline LinearSolveResult solve_sparse(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b,
                                      Eigen::Index direct_limit = 250000) {
  LinearSolveResult r;
  if (A.rows() <= direct_limit) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() == Eigen::Success) {
      r.x = lu.solve(b);
      r.iterations = 1;
      r.ok = lu.info() == Eigen::Success && r.x.allFinite();
      if (r.ok) return r;
    }
  }
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::DiagonalPreconditioner<double>> it;
  it.setTolerance(1e-14);
  it.setMaxIterations(20 * static_cast<int>(A.rows()) + 100);
  it.compute(A);
  r.x = it.solve(b);
  r.iterations += static_cast<int>(it.iterations());
  r.ok = it.info() == Eigen::Success && r.x.allFinite();
  return r;
}

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 200;
  /// Armijo backtracking by halving; full steps otherwise (policy iteration).
  bool damped = true;
  double min_step = 1.0 / 1048576.0;
  double blowup_cap = 1e6;
  /// Converge on max |r_i| / scale_i rather than max |r_i|.
  bool relative = true;
};

struct NewtonResult {
  Eigen::VectorXd u;
  double residual = std::numeric_limits<double>::infinity();
  double raw_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int linear_iterations = 0;
  bool converged = false;
  bool blew_up = false;
  std::vector<int> policy_changes;
  std::vector<double> history;
  std::string message;
};

/// Newton iteration on a nodal system given by `assemble(u, want_jacobian)`.
/// With `damped = false` and a piecewise-linear homogeneous operator this is
/// exactly Howard policy iteration.
template <class Assemble>
NewtonResult newton_solve(Eigen::VectorXd u, Assemble&& assemble, const NewtonOptions& opt) {
  NewtonResult res;
  auto measure = [&](const Linearization& L) { return opt.relative ? L.relative_norm() : L.raw_norm(); };
  Linearization L = assemble(u, true);
  double err = measure(L);
  res.history.push_back(err);
  Eigen::VectorXd best = u;
  double best_err = err;
  std::vector<int> last_policy = L.policy;
  for (int it = 0; it < opt.max_iter; ++it) {
    if (err <= opt.tol) {
      res.converged = true;
      break;
    }
    LinearSolveResult ls = solve_sparse(L.jacobian, -L.residual);
    res.linear_iterations += ls.iterations;
    ++res.iterations;
    if (!ls.ok) {
      res.message = "linear solve failed";
      break;
    }
    const Eigen::VectorXd du = ls.x;
    double t = 1.0;
    Eigen::VectorXd trial;
    Linearization Lt;
    double trial_err;
    if (opt.damped) {
      const double merit0 = L.residual.norm();
      bool accepted = false;
      while (t >= opt.min_step) {
        trial = u + t * du;
        if (trial.allFinite() && trial.cwiseAbs().maxCoeff() <= opt.blowup_cap) {
          Lt = assemble(trial, false);
          const double merit = Lt.residual.norm();
          if (std::isfinite(merit) && merit <= (1.0 - 1e-4 * t) * merit0) {
            accepted = true;
            break;
          }
        }
        t *= 0.5;
      }
      if (!accepted) {
        res.message = "line search failed";
        break;
      }
      Lt = assemble(trial, true);
    } else {
      trial = u + du;
      if (!trial.allFinite()) {
        res.message = "non-finite iterate";
        break;
      }
      Lt = assemble(trial, true);
    }
    u = std::move(trial);
    L = std::move(Lt);
    trial_err = measure(L);
    err = trial_err;
    res.history.push_back(err);
    int changes = 0;
    for (std::size_t i = 0; i < L.policy.size(); ++i) changes += L.policy[i] != last_policy[i];
    res.policy_changes.push_back(changes);
    last_policy = L.policy;
    if (u.cwiseAbs().maxCoeff() > opt.blowup_cap) {
      res.blew_up = true;
      res.message = "iterate exceeded blow-up cap";
      break;
    }
    if (err < best_err) {
      best_err = err;
      best = u;
    }
  }
  if (err <= opt.tol) res.converged = true;
  if (res.converged) {
    res.u = u;
    res.residual = err;
    res.raw_residual = L.raw_norm();
  } else {
    res.u = best;
    res.residual = best_err;
    res.raw_residual = assemble(best, false).raw_norm();
    if (res.message.empty()) res.message = "iteration budget exhausted";
  }
  return res;
}

}  // namespace qgrowth
