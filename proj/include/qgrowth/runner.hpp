#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qgrowth/bounds.hpp"
#include "qgrowth/continuation.hpp"
#include "qgrowth/oracle.hpp"
#include "qgrowth/output.hpp"
#include "qgrowth/parallel.hpp"
#include "qgrowth/scenario.hpp"
#include "qgrowth/verify.hpp"

namespace qgrowth {

struct RunOptions {
  std::string out_dir = "run";
  std::uint64_t seed = 20261018;
  int threads = 1;
  std::optional<double> tol;
};

/// Exit statuses shared by all subcommands.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2 };

/// Lines for verification.log plus a pass flag. Nothing time-dependent goes in.
class RunLog {
 public:
  explicit RunLog(std::string command) { line("command " + std::move(command)); }

  void line(const std::string& s) { text_ << s << '\n'; }
  void kv(const std::string& k, const std::string& v) { line(k + " = " + v); }
  void kv(const std::string& k, double v) { kv(k, fmt(v)); }
  void check(const std::string& what, bool ok, const std::string& detail = {}) {
    line(std::string(ok ? "PASS " : "FAIL ") + what + (detail.empty() ? "" : ": " + detail));
    ok_ = ok_ && ok;
  }
  bool ok() const { return ok_; }
  std::string str() const { return text_.str() + (ok_ ? "status = pass\n" : "status = fail\n"); }

 private:
  std::ostringstream text_;
  bool ok_ = true;
};

namespace detail {

inline std::string out_path(const RunOptions& ro, const std::string& file) {
  return (std::filesystem::path(ro.out_dir) / file).string();
}

inline void prepare(const RunOptions& ro) { std::filesystem::create_directories(ro.out_dir); }

template <class Writer>
void write_file(const RunOptions& ro, const std::string& file, Writer&& w) {
  std::ofstream f(out_path(ro, file), std::ios::binary);
  if (!f) throw Error("cannot write '" + out_path(ro, file) + "'");
  w(f);
}

inline void apply_tolerance(Scenario& sc, const RunOptions& ro) {
  if (ro.tol) {
    sc.tol = *ro.tol;
    sc.continuation.tol = *ro.tol;
  }
}

inline void describe(RunLog& log, const Scenario& sc, const RunOptions& ro) {
  const auto& g = *sc.problem.grid;
  log.kv("scenario", sc.name);
  log.kv("grid_nodes", std::to_string(g.size()));
  log.kv("grid_dimension", std::to_string(g.dimension()));
  log.kv("n", std::to_string(sc.n));
  log.kv("tol", sc.tol);
  log.kv("seed", std::to_string(ro.seed));
}

/// Reads the snapshot file back and re-evaluates residual_P at each row.
inline void reverify_snapshots(RunLog& log, const RunOptions& ro, const std::string& file, const ProblemSpec& P0,
                               Parameter which, double tol) {
  std::ifstream in(out_path(ro, file), std::ios::binary);
  const auto snaps = read_snapshots_csv(in, P0.grid);
  ProblemSpec P = P0;
  double worst = 0;
  for (const auto& s : snaps) {
    detail::set_parameter(P, which, s.parameter);
    worst = std::max(worst, linearize_P(s.solution.values(), P, false).relative_norm());
  }
  log.kv("reloaded_snapshots", std::to_string(snaps.size()));
  log.kv("reloaded_max_residual", worst);
  log.check("snapshot re-verification", worst <= tol, "max relative residual " + fmt_short(worst));
}

inline std::vector<std::pair<std::string, GridFunction>> profile_sample(const Branch& br, std::size_t count = 6) {
  std::vector<std::pair<std::string, GridFunction>> out;
  if (br.points.empty()) return out;
  const std::size_t step = std::max<std::size_t>(1, br.points.size() / count);
  for (std::size_t k = 0; k < br.points.size(); k += step)
    out.emplace_back(to_string(br.parameter) + "=" + fmt_short(br.points[k].parameter), br.points[k].solution);
  return out;
}

inline FullSolveOptions solve_options(const Scenario& sc) {
  FullSolveOptions fo;
  fo.tol = sc.tol;
  fo.max_iter = sc.max_iter;
  return fo;
}

inline void log_branch(RunLog& log, const Branch& br) {
  log.kv("branch_points", std::to_string(br.points.size()));
  log.kv("termination", to_string(br.termination));
  if (!br.message.empty()) log.kv("termination_message", br.message);
  log.kv("folds", std::to_string(br.folds.size()));
  for (std::size_t f = 0; f < br.folds.size(); ++f) log.kv("fold_" + std::to_string(f), br.folds[f]);
  const FoldEstimate fe = detect_fold(br);
  if (fe.present) {
    log.kv("first_fold_bracket_lo", fe.lo);
    log.kv("first_fold_bracket_hi", fe.hi);
  }
  log.check("branch traced", br.termination != Termination::step_failure && !br.points.empty(), br.message);
}

inline void write_branch_outputs(RunLog& log, const RunOptions& ro, const Branch& br, const ProblemSpec& P,
                                 const std::string& stem, const std::string& title, double tol) {
  write_file(ro, stem + ".csv", [&](std::ostream& o) { write_branch_csv(o, br); });
  write_file(ro, stem + "_snapshots.csv", [&](std::ostream& o) { write_snapshots_csv(o, br); });
  write_text(out_path(ro, stem + ".svg"), branch_svg(br, title));
  write_text(out_path(ro, stem + "_profiles.svg"), profile_svg(profile_sample(br), title + ": profiles"));
  reverify_snapshots(log, ro, stem + "_snapshots.csv", P, br.parameter, tol);
}

inline int finish(const RunLog& log, const RunOptions& ro) {
  write_text(out_path(ro, "verification.log"), log.str());
  return log.ok() ? kExitOk : kExitFailure;
}

}  // namespace detail

/// Every distinct solution reachable from the zero seed and the random seeds at solver.lambda.
inline int run_solve(Scenario sc, const RunOptions& ro) {
  detail::apply_tolerance(sc, ro);
  detail::prepare(ro);
  RunLog log("solve");
  detail::describe(log, sc, ro);
  ProblemSpec P = sc.problem;
  P.lambda = sc.solve.lambda;
  log.kv("lambda", P.lambda);
  Random rng(ro.seed);
  std::vector<GridFunction> seeds{GridFunction(P.grid)};
  for (auto& s : random_seeds(P.grid, sc.solve.seeds, rng, 0.05, sc.solve.amplitude_max)) seeds.push_back(std::move(s));
  // near-duplicates on steep upper sheets differ by ~1e-4 relative
  const auto sols = seed_sweep(P, seeds, detail::solve_options(sc), 1e-3, ro.threads);
  log.kv("seeds", std::to_string(seeds.size()));
  log.kv("distinct_solutions", std::to_string(sols.size()));
  std::vector<Snapshot> snaps;
  for (std::size_t k = 0; k < sols.size(); ++k) {
    snaps.push_back({P.lambda, sols[k]});
    log.kv("solution_" + std::to_string(k) + "_max", sols[k].max());
    log.kv("solution_" + std::to_string(k) + "_min", sols[k].min());
    if (k > 0) log.kv("solution_" + std::to_string(k - 1) + "_strictly_below_" + std::to_string(k),
                      strictly_below(sols[k - 1], sols[k]) ? "true" : "false");
  }
  detail::write_file(ro, "solutions.csv", [&](std::ostream& o) { write_snapshots_csv(o, snaps); });
  std::vector<std::pair<std::string, GridFunction>> prof;
  for (std::size_t k = 0; k < sols.size(); ++k) prof.emplace_back("u" + std::to_string(k + 1), sols[k]);
  write_text(detail::out_path(ro, "solutions.svg"), profile_svg(prof, sc.name + ": solutions at lambda = " + fmt_short(P.lambda)));
  log.check("at least one solution", !sols.empty());
  detail::reverify_snapshots(log, ro, "solutions.csv", P, Parameter::lambda, sc.tol);
  return detail::finish(log, ro);
}

/// Lambda branch from [continuation], with the bound report when [bounds] is present.
inline int run_branch(Scenario sc, const RunOptions& ro) {
  detail::apply_tolerance(sc, ro);
  detail::prepare(ro);
  RunLog log("branch");
  detail::describe(log, sc, ro);
  const ProblemSpec& P = sc.problem;
  Branch fine, coarse;
  std::optional<Scenario> csc;
  if (sc.bounds.enabled) {
    csc = load_scenario(sc.config, sc.bounds.coarse_n);
    detail::apply_tolerance(*csc, ro);
  }
  parallel_for(csc ? 2 : 1, ro.threads, [&](std::size_t j) {
    if (j == 0) fine = trace_branch(P, GridFunction(P.grid), Parameter::lambda, sc.continuation);
    else coarse = trace_branch(csc->problem, GridFunction(csc->problem.grid), Parameter::lambda, csc->continuation);
  });
  detail::log_branch(log, fine);
  detail::write_branch_outputs(log, ro, fine, P, "branch", sc.name + ": branch in lambda", sc.tol);
  if (csc) {
    std::vector<std::pair<std::string, BoundReport>> reps;
    reps.emplace_back("lower", verify_lower_bound(coarse, fine, sc.bounds.Lambda2));
    if (sc.bounds.Lambda1 > 0) reps.emplace_back("upper", verify_upper_bound(coarse, fine, sc.bounds.Lambda1, sc.bounds.Lambda2));
    detail::write_file(ro, "bounds.csv", [&](std::ostream& o) { write_bound_csv(o, reps); });
    log.kv("coarse_n", std::to_string(csc->n));
    for (const auto& [name, r] : reps) {
      log.kv(name + "_stability_ratio", r.stability_ratio);
      log.kv(name + "_sup_negative_fine", r.sup_negative_fine);
      log.kv(name + "_sup_norm_fine", r.sup_norm_fine);
      if (!r.note.empty()) log.kv(name + "_note", r.note);
    }
  }
  return detail::finish(log, ro);
}

/// Branch in k for the auxiliary problem at [homotopy] lambda, then seeds at k_max.
inline int run_homotopy(Scenario sc, const RunOptions& ro) {
  if (!sc.homotopy.enabled) throw ConfigError("homotopy-k needs a [homotopy] section");
  detail::apply_tolerance(sc, ro);
  detail::prepare(ro);
  RunLog log("homotopy-k");
  detail::describe(log, sc, ro);
  const auto& hs = sc.homotopy;
  const ProblemSpec& P0 = sc.problem;
  const Branch lam = trace_branch(P0, GridFunction(P0.grid), Parameter::lambda, sc.continuation);
  double C0 = hs.C0;
  if (C0 < 0) {
    double sup_neg = 0;
    for (const auto& p : lam.points)
      if (p.parameter >= 0 && p.parameter <= hs.Lambda2) sup_neg = std::max(sup_neg, p.solution.negative_part_norm());
    C0 = 2.0 * sup_neg;
  }
  const auto starts = solutions_at(lam, P0, hs.lambda, sc.tol);
  ProblemSpec P = P0;
  P.lambda = hs.lambda;
  P.k = hs.k_min;
  GridFunction start = starts.empty() ? GridFunction(P.grid) : starts.front();
  const EigenPair ep = principal_eigenpair(P.op, P.c, sc.eigen_tol);
  const double m = P.M.mu1 / P.op.ellipticity().hi;
  P.ctilde = build_ctilde(P.c, P.h, hs.Lambda2, C0, ep, m);
  log.kv("lambda", hs.lambda);
  log.kv("C0", C0);
  log.kv("lambda1", ep.lambda1);
  ContinuationOptions o = sc.continuation;
  o.ds = hs.ds;
  o.ds_max = std::max(o.ds_max, o.ds);
  const Branch br = homotopy_in_k(P, hs.lambda, hs.k_min, hs.k_max, start, o);
  detail::log_branch(log, br);
  detail::write_branch_outputs(log, ro, br, P, "homotopy", sc.name + ": branch in k", sc.tol);
  P.k = hs.k_max;
  Random rng(ro.seed);
  const auto seeds = random_seeds(P.grid, sc.solve.seeds, rng, 0.05, sc.solve.amplitude_max);
  std::vector<int> ok(seeds.size());
  parallel_for(seeds.size(), ro.threads,
               [&](std::size_t i) { ok[i] = solve_full(P, seeds[i], detail::solve_options(sc)).converged; });
  int conv = 0;
  for (int v : ok) conv += v;
  log.kv("seeds_at_k_max", std::to_string(seeds.size()));
  log.kv("converged_at_k_max", std::to_string(conv));
  return detail::finish(log, ro);
}

/// Principal weighted eigenpair of the extremal operator built from [operator] with weight c.
inline int run_eigen(Scenario sc, const RunOptions& ro) {
  if (ro.tol) sc.eigen_tol = *ro.tol;
  detail::prepare(ro);
  RunLog log("eigen");
  detail::describe(log, sc, ro);
  const EigenPair ep = principal_eigenpair(sc.problem.op, sc.problem.c, sc.eigen_tol);
  log.kv("lambda1", ep.lambda1);
  log.kv("collatz_lower", ep.lower);
  log.kv("collatz_upper", ep.upper);
  log.kv("residual", ep.residual);
  log.kv("iterations", std::to_string(ep.iterations));
  bool positive = true;
  for (int i : sc.problem.grid->interior()) positive = positive && ep.phi1[i] > 0;
  log.check("eigen iteration converged", ep.converged, ep.message);
  log.check("phi1 positive in the interior", positive);
  const auto& g = *sc.problem.grid;
  detail::write_file(ro, "eigen.csv", [&](std::ostream& o) {
    o << "node,x,y,phi1\n";
    for (int i : g.active()) o << i << ',' << fmt(g.x(i)) << ',' << fmt(g.y(i)) << ',' << fmt(ep.phi1[i]) << '\n';
  });
  write_text(detail::out_path(ro, "eigen.svg"),
             profile_svg({{"phi1", ep.phi1}}, sc.name + ": principal eigenfunction, lambda1 = " + fmt_short(ep.lambda1)));
  return detail::finish(log, ro);
}

/// Primary solve against the semilinear oracle at each [oracle] lambda.
inline int run_oracle_compare(Scenario sc, const RunOptions& ro) {
  detail::apply_tolerance(sc, ro);
  detail::prepare(ro);
  RunLog log("oracle-compare");
  detail::describe(log, sc, ro);
  const auto red = semilinear_reduction(sc.problem);
  log.kv("reduction_exact", red.exact ? "true" : "false");
  std::vector<double> lams = sc.oracle.lambdas;
  if (lams.empty()) lams.push_back(sc.solve.lambda);
  std::vector<std::string> rows;
  for (double lam : lams) {
    ProblemSpec P = sc.problem;
    P.lambda = lam;
    SemilinearReduction R = red;
    R.lambda = lam;
    const SolveReport prim = solve_full(P, GridFunction(P.grid), detail::solve_options(sc));
    const OracleSolution orc = semilinear_solve(R, sc.oracle.refine, 1e-13, prim.solution);
    double diff = std::numeric_limits<double>::quiet_NaN();
    if (prim.converged && orc.converged) diff = (prim.solution - orc.restrict_to(P.grid)).sup_norm();
    rows.push_back(fmt(lam) + ',' + (prim.converged ? "1" : "0") + ',' + (orc.converged ? "1" : "0") + ',' +
                   fmt(prim.converged ? prim.solution.max() : 0.0) + ',' + fmt(diff));
    log.check("lambda " + fmt_short(lam) + " solved by both", prim.converged && orc.converged,
              prim.converged && orc.converged ? "max difference " + fmt_short(diff) : prim.message + orc.message);
  }
  detail::write_file(ro, "oracle.csv", [&](std::ostream& o) {
    o << "lambda,primary_converged,oracle_converged,primary_max,max_difference\n";
    for (const auto& r : rows) o << r << '\n';
  });
  try {
    const TimeMapFold tf = time_map(red).fold();
    log.kv("time_map_lambda_bar", tf.lambda_bar);
    log.kv("time_map_u_max", tf.u_max);
  } catch (const UnsupportedError& e) {
    log.kv("time_map", e.what());
  }
  return detail::finish(log, ro);
}

}  // namespace qgrowth
