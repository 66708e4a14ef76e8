#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qgrowth/barriers.hpp"
#include "qgrowth/bounds.hpp"
#include "qgrowth/continuation.hpp"
#include "qgrowth/fixedpoint.hpp"
#include "qgrowth/oracle.hpp"
#include "qgrowth/parallel.hpp"
#include "qgrowth/principal.hpp"
#include "qgrowth/transforms.hpp"

namespace qgrowth {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
  std::vector<std::pair<std::string, double>> metrics;
  double seconds = 0.0;

  void metric(const std::string& k, double v) { metrics.emplace_back(k, v); }
};

struct VerifyOptions {
  std::uint64_t seed = 20261018;
  int threads = 1;
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
  return out;
}

}  // namespace detail

/// -u'' = lambda c u + mu (u')^2 + h on (0,1), u(0) = u(1) = 0.
inline ProblemSpec model_problem(int n, std::function<double(double)> h, double lambda, double c = 1.0,
                                 double mu = 1.0) {
  auto g = build_interval_grid(0.0, 1.0, n);
  ProblemSpec P;
  P.grid = g;
  P.op = OperatorSpec::laplacian(g);
  P.M = MatrixField::scalar(*g, mu);
  P.c = GridFunction(g, c);
  P.h = GridFunction::sample(g, [&](double x, double) { return h(x); });
  P.c_source = [c](double, double) { return c; };
  P.h_source = [h](double x, double) { return h(x); };
  P.lambda = lambda;
  P.validate();
  return P;
}

/// Random smooth positive-bump seeds on a grid, reproducible from the generator.
inline std::vector<GridFunction> random_seeds(const GridPtr& g, int count, Random& rng, double amp_lo = 0.05,
                                              double amp_hi = 50.0) {
  std::vector<GridFunction> out;
  for (int s = 0; s < count; ++s) {
    const double A = std::exp(rng.uniform(std::log(amp_lo), std::log(amp_hi)));
    const double b3 = rng.uniform(-0.3, 0.3), b5 = rng.uniform(-0.1, 0.1);
    const double sharp = rng.uniform(1.0, 8.0);
    const auto& grid = *g;
    auto base = [&](double x, double y) {
      const double sx = (x - grid.x_lo()) / (grid.x_hi() - grid.x_lo());
      double b = std::sin(M_PI * sx) + b3 * std::sin(3 * M_PI * sx) + b5 * std::sin(5 * M_PI * sx);
      if (grid.dimension() == 2) {
        const double sy = (y - grid.y_lo()) / (grid.y_hi() - grid.y_lo());
        b *= std::sin(M_PI * sy);
      }
      return A * std::min(1.0, sharp * std::max(b, 0.0));
    };
    GridFunction f = GridFunction::sample(g, base);
    f.zero_boundary();
    out.push_back(std::move(f));
  }
  return out;
}

// ---------------------------------------------------------------- operators

namespace detail {

template <int D>
Eigen::Matrix<double, D, D> rotation(const std::array<double, 3>& ang) {
  Eigen::Matrix<double, D, D> R;
  if constexpr (D == 2) {
    R << std::cos(ang[0]), -std::sin(ang[0]), std::sin(ang[0]), std::cos(ang[0]);
  } else {
    Eigen::Matrix3d za, ry, zc;
    za << std::cos(ang[0]), -std::sin(ang[0]), 0, std::sin(ang[0]), std::cos(ang[0]), 0, 0, 0, 1;
    ry << std::cos(ang[1]), 0, std::sin(ang[1]), 0, 1, 0, -std::sin(ang[1]), 0, std::cos(ang[1]);
    zc << std::cos(ang[2]), -std::sin(ang[2]), 0, std::sin(ang[2]), std::cos(ang[2]), 0, 0, 0, 1;
    R = za * ry * zc;
  }
  return R;
}

template <class F>
double golden_max(F&& f, double a, double b, double* xbest, int iters = 40) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < iters; ++it) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    }
  }
  *xbest = 0.5 * (a + b);
  return f(*xbest);
}

template <int D>
double brute_force_pucci_fixed(const Eigen::Matrix<double, D, D>& X, const Ellipticity& e, double s) {
  double best = -std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < (1 << D); ++mask) {
    Eigen::Matrix<double, D, 1> diag;
    for (int k = 0; k < D; ++k) diag[k] = (mask >> k) & 1 ? e.hi : e.lo;
    auto f = [&](const std::array<double, 3>& ang) {
      const auto Q = rotation<D>(ang);
      return s * (Q * diag.asDiagonal() * Q.transpose() * X).trace();
    };
    // coarse orientation grid, then coordinate-wise golden refinement of the best starts
    const int N = D == 2 ? 360 : 10;
    const int nb = D == 2 ? 1 : N;
    std::vector<std::pair<double, std::array<double, 3>>> starts;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < nb; ++j)
        for (int k = 0; k < nb; ++k) {
          std::array<double, 3> a{M_PI * (D == 2 ? 1.0 : 2.0) * i / N, M_PI * j / std::max(1, nb - 1),
                                  2 * M_PI * k / N};
          starts.push_back({f(a), a});
        }
    const int keep = D == 2 ? 1 : 3;
    std::partial_sort(starts.begin(), starts.begin() + keep, starts.end(),
                      [](const auto& p, const auto& q) { return p.first > q.first; });
    for (int sidx = 0; sidx < keep; ++sidx) {
      auto a = starts[sidx].second;
      double v = starts[sidx].first, w = 2 * M_PI / N;
      const int coords = D == 2 ? 1 : 3;
      for (int sweep = 0; sweep < (D == 2 ? 1 : 15); ++sweep) {
        for (int c = 0; c < coords; ++c) {
          double xb;
          const double nv = golden_max(
              [&](double t) {
                auto b = a;
                b[c] = t;
                return f(b);
              },
              a[c] - w, a[c] + w, &xb);
          if (nv > v) {
            v = nv;
            a[c] = xb;
          }
        }
        w *= 0.6;
      }
      best = std::max(best, v);
    }
  }
  return s * best;
}

}  // namespace detail

/// sup (sign > 0) or inf (sign < 0) of tr(AX) over lo I <= A <= hi I, by a
/// search over orientations and extreme spectra.
inline double brute_force_pucci(const Eigen::MatrixXd& X, const Ellipticity& e, int sign) {
  const double s = sign > 0 ? 1.0 : -1.0;
  if (X.rows() == 2 && X.cols() == 2) return detail::brute_force_pucci_fixed<2>(Eigen::Matrix2d(X), e, s);
  if (X.rows() == 3 && X.cols() == 3) return detail::brute_force_pucci_fixed<3>(Eigen::Matrix3d(X), e, s);
  throw DomainError("brute_force_pucci: dimension 2 or 3");
}

inline Check check_pucci_corpus(const VerifyOptions& vo, int count = 200, double tol = 1e-6) {
  detail::Stopwatch sw;
  Check c;
  c.name = "pucci-brute-force";
  Random rng(vo.seed);
  struct Case {
    Eigen::MatrixXd X;
    Ellipticity e;
  };
  std::vector<Case> cases;
  for (int k = 0; k < count; ++k) {
    const int d = k % 2 ? 3 : 2;
    Eigen::MatrixXd X(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) X(i, j) = X(j, i) = rng.uniform(-5, 5);
    const double lo = rng.uniform(0.2, 1.0);
    cases.push_back({X, {lo, lo + rng.uniform(0.0, 2.0)}});
  }
  std::vector<double> err(cases.size());
  parallel_for(cases.size(), vo.threads, [&](std::size_t k) {
    const auto& cs = cases[k];
    err[k] = std::max(std::abs(pucci_plus(cs.X, cs.e) - brute_force_pucci(cs.X, cs.e, +1)),
                      std::abs(pucci_minus(cs.X, cs.e) - brute_force_pucci(cs.X, cs.e, -1)));
  });
  double worst = 0;
  for (double e : err) worst = std::max(worst, e);
  c.metric("matrices", count);
  c.metric("max_abs_difference", worst);
  c.passed = worst <= tol;
  c.detail = "max |closed form - brute force| = " + std::to_string(worst);
  c.seconds = sw.seconds();
  return c;
}

/// lambda = -1 on the h = 1 model: random seeds must all reach one solution.
inline Check check_coercive_uniqueness(const VerifyOptions& vo, int seeds = 10, double tol = 1e-8) {
  detail::Stopwatch sw;
  Check c;
  c.name = "coercive-uniqueness";
  const ProblemSpec P = model_problem(256, [](double) { return 1.0; }, -1.0);
  Random rng(vo.seed ^ 0x51u);
  auto starts = random_seeds(P.grid, seeds, rng, 0.05, 20.0);
  // signed seeds too
  for (std::size_t i = 1; i < starts.size(); i += 2) starts[i] *= -1.0;
  std::vector<SolveReport> rs(starts.size());
  parallel_for(starts.size(), vo.threads, [&](std::size_t i) { rs[i] = solve_full(P, starts[i]); });
  int conv = 0;
  double spread = 0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    conv += rs[i].converged;
    for (std::size_t j = 0; j < i; ++j)
      if (rs[i].converged && rs[j].converged) spread = std::max(spread, (rs[i].solution - rs[j].solution).sup_norm());
  }
  c.metric("seeds", seeds);
  c.metric("converged", conv);
  c.metric("max_pairwise_difference", spread);
  c.passed = conv == seeds && spread < tol;
  c.detail = std::to_string(conv) + "/" + std::to_string(seeds) + " converged, pairwise spread " + std::to_string(spread);
  c.seconds = sw.seconds();
  return c;
}

// ---------------------------------------------------------------- transforms

/// Exponential-change sandwich on random smooth 1D functions: violation order
/// under two halvings, for both directions of the change.
inline Check check_sandwich_order(const VerifyOptions& vo, int count = 50, double min_order = 1.8) {
  detail::Stopwatch sw;
  Check c;
  c.name = "exponential-change-sandwich";
  Random rng(vo.seed ^ 0x2au);
  double worst_order = std::numeric_limits<double>::infinity();
  double worst_fine = 0;
  int exact = 0;
  for (int k = 0; k < count; ++k) {
    double a[4], ph[4];
    for (int j = 0; j < 4; ++j) {
      a[j] = rng.uniform(-1, 1) / (j + 1);
      ph[j] = rng.uniform(0, 2 * M_PI);
    }
    const double m = rng.uniform(0.5, 2.0);
    const double lo = rng.uniform(0.5, 1.0);
    const Ellipticity e{lo, lo + rng.uniform(0.0, 1.0)};
    auto u_of = [&](double x, double) {
      double v = 0;
      for (int j = 0; j < 4; ++j) v += a[j] * std::sin((j + 1) * M_PI * x + ph[j]);
      return v;
    };
    for (auto dir : {ChangeDirection::v_change, ChangeDirection::w_change}) {
      const ExpChange ch(m, dir);
      double v[3];
      double mag = 0;
      for (int l = 0; l < 3; ++l) {
        auto g = build_interval_grid(0.0, 1.0, 64 << l);
        const auto rep = sandwich_check(GridFunction::sample(g, u_of), ch, e);
        v[l] = rep.max_violation;
        mag = std::max(mag, rep.magnitude);
      }
      worst_fine = std::max(worst_fine, v[2]);
      if (v[0] <= 1e-12 * (1 + mag)) {
        ++exact;
        continue;
      }
      const double o = std::min(std::log2(v[0] / v[1]), std::log2(v[1] / v[2]));
      worst_order = std::min(worst_order, o);
    }
  }
  c.metric("functions", count);
  c.metric("min_order", worst_order);
  c.metric("max_violation_finest", worst_fine);
  c.metric("exact_cases", exact);
  c.passed = worst_order >= min_order;
  c.detail = "min empirical order " + std::to_string(worst_order) + " over " + std::to_string(2 * count - exact) +
             " direction/function pairs (" + std::to_string(exact) + " without violation)";
  c.seconds = sw.seconds();
  return c;
}

// ---------------------------------------------------------------- oracle

/// Radial family: residual of u'' + (n-1)u'/r + (u')^2 on [0.1, 1] under refinement.
inline Check check_radial_family(double min_order = 1.8) {
  detail::Stopwatch sw;
  Check c;
  c.name = "radial-family";
  const int n = 3;
  double worst_order = std::numeric_limits<double>::infinity();
  bool boundary_zero = true;
  for (double k : {0.0, 0.3, 0.6}) {
    double res[3];
    for (int l = 0; l < 3; ++l) {
      const int N = 320 << l;
      const double a = 0.1, b = 1.0, h = (b - a) / N;
      std::vector<double> r(N + 1), u(N + 1);
      for (int i = 0; i <= N; ++i) {
        r[i] = i == N ? b : a + i * h;
        u[i] = radial_family(k, n, r[i]);
      }
      double worst = 0;
      for (int i = 1; i < N; ++i) {
        const double up = (u[i + 1] - u[i - 1]) / (2 * h);
        const double upp = (u[i + 1] - 2 * u[i] + u[i - 1]) / (h * h);
        worst = std::max(worst, std::abs(upp + (n - 1) * up / r[i] + up * up));
      }
      res[l] = worst;
      boundary_zero = boundary_zero && u[N] == 0.0;
    }
    const double o = std::min(std::log2(res[0] / res[1]), std::log2(res[1] / res[2]));
    worst_order = std::min(worst_order, o);
    c.metric("residual_k" + std::to_string(k).substr(0, 3), res[2]);
  }
  c.metric("min_order", worst_order);
  c.passed = worst_order >= min_order && boundary_zero;
  c.detail = "min order " + std::to_string(worst_order) + (boundary_zero ? ", u(1) = 0 exactly" : ", u(1) != 0");
  c.seconds = sw.seconds();
  return c;
}

// ---------------------------------------------------------------- fold scenario

struct FoldStudy {
  ProblemSpec problem;
  Branch branch, branch_half, coarse;
  FoldEstimate fold, fold_half, fold_coarse;
  GridFunction u0;
  double seconds = 0.0;
};

inline ContinuationOptions fold_options(double ds) {
  ContinuationOptions o;
  o.p_min = -1.0;
  o.p_max = 8.0;
  o.ds = ds;
  o.ds_max = 2.0;
  o.norm_cap = 1e3;
  return o;
}

/// h = 1 model traced in lambda from -1: at n with ds and ds/2, and at n/2.
inline FoldStudy run_fold_study(int n = 256, double ds = 0.05, int threads = 1) {
  detail::Stopwatch sw;
  FoldStudy fs;
  auto one = [](double) { return 1.0; };
  fs.problem = model_problem(n, one, -1.0);
  const ProblemSpec Pc = model_problem(n / 2, one, -1.0);
  parallel_for(3, threads, [&](std::size_t j) {
    if (j == 0) fs.branch = trace_branch(fs.problem, GridFunction(fs.problem.grid), Parameter::lambda, fold_options(ds));
    if (j == 1)
      fs.branch_half = trace_branch(fs.problem, GridFunction(fs.problem.grid), Parameter::lambda, fold_options(0.5 * ds));
    if (j == 2) fs.coarse = trace_branch(Pc, GridFunction(Pc.grid), Parameter::lambda, fold_options(ds));
  });
  fs.fold = detect_fold(fs.branch);
  fs.fold_half = detect_fold(fs.branch_half);
  fs.fold_coarse = detect_fold(fs.coarse);
  ProblemSpec P0 = fs.problem;
  P0.lambda = 0.0;
  fs.u0 = solve_full(P0, GridFunction(P0.grid)).solution;
  fs.seconds = sw.seconds();
  return fs;
}

inline Check check_fold_scenario(const FoldStudy& fs, const VerifyOptions& vo) {
  detail::Stopwatch sw;
  Check c;
  c.name = "fold-scenario";
  std::vector<std::string> fails;
  const double lb = fs.fold.value;
  c.metric("folds", static_cast<double>(fs.branch.folds.size()));
  c.metric("lambda_bar", lb);
  c.metric("lambda_bar_half_ds", fs.fold_half.value);
  c.metric("bracket_lo", fs.fold.lo);
  c.metric("bracket_hi", fs.fold.hi);
  if (fs.branch.folds.size() != 1 || fs.branch_half.folds.size() != 1)
    fails.push_back("fold count " + std::to_string(fs.branch.folds.size()) + "/" +
                    std::to_string(fs.branch_half.folds.size()));
  if (!fs.fold.present) {
    c.detail = "no fold";
    return c;
  }
  const double rel = std::abs(fs.fold.value - fs.fold_half.value) / lb;
  c.metric("ds_halving_relative_change", rel);
  if (!(rel < 5e-4)) fails.push_back("fold moved by " + std::to_string(rel) + " under ds halving");

  ProblemSpec P = fs.problem;
  P.lambda = 1.1 * lb;
  Random rng(vo.seed ^ 0x55u);
  const auto seeds = random_seeds(P.grid, 8, rng);
  std::vector<int> ok(seeds.size());
  parallel_for(seeds.size(), vo.threads, [&](std::size_t i) { ok[i] = solve_full(P, seeds[i]).converged; });
  int conv = 0;
  for (int v : ok) conv += v;
  c.metric("converged_beyond_fold", conv);
  if (conv != 0) fails.push_back(std::to_string(conv) + " seeds converged at 1.1 lambda_bar");

  const auto sols = solutions_at(fs.branch, fs.problem, 0.5 * lb);
  c.metric("solutions_at_half", static_cast<double>(sols.size()));
  if (sols.size() < 2) {
    fails.push_back("fewer than two solutions at 0.5 lambda_bar");
  } else {
    if (!strictly_below(sols.front(), sols.back())) fails.push_back("u_lambda,1 << u_lambda,2 fails");
    if (!strictly_below(fs.u0, sols.front())) fails.push_back("u_0 << u_lambda,1 fails");
  }
  GridFunction prev = fs.u0;
  for (double f : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const auto s = solutions_at(fs.branch, fs.problem, f * lb);
    if (s.empty() || !strictly_below(prev, s.front())) {
      fails.push_back("lower branch not increasing at " + std::to_string(f) + " lambda_bar");
      break;
    }
    prev = s.front();
  }
  c.passed = fails.empty();
  c.detail = fails.empty() ? "one fold at " + std::to_string(lb) + ", bracket [" + std::to_string(fs.fold.lo) + ", " +
                                 std::to_string(fs.fold.hi) + "]"
                           : detail::join(fails);
  c.seconds = sw.seconds() + fs.seconds;
  return c;
}

inline Check check_blow_up(const FoldStudy& fs) {
  detail::Stopwatch sw;
  Check c;
  c.name = "upper-sheet-blow-up";
  std::vector<std::string> fails;
  const double lb = fs.fold.value;
  double prev = -1;
  double last = 0;
  for (double f : {0.4, 0.2, 0.1, 0.05}) {
    const auto s = solutions_at(fs.branch, fs.problem, f * lb);
    if (s.size() < 2) {
      fails.push_back("no upper solution at " + std::to_string(f) + " lambda_bar");
      break;
    }
    last = s.back().max();
    c.metric("max_u2_at_" + std::to_string(f).substr(0, 4), last);
    if (!(last > prev)) fails.push_back("max u_2 not increasing at " + std::to_string(f));
    prev = last;
  }
  const double u0n = fs.u0.sup_norm();
  c.metric("ratio_to_u0", last / u0n);
  if (!(last > 10 * u0n)) fails.push_back("max u_2 at 0.05 lambda_bar below 10 ||u_0||");
  if (fs.branch.termination != Termination::norm_cap)
    fails.push_back("termination " + to_string(fs.branch.termination));
  c.passed = fails.empty();
  c.detail = fails.empty() ? "max u_2 reaches " + std::to_string(last) + " = " + std::to_string(last / u0n) +
                                 " ||u_0||; norm-cap termination"
                           : detail::join(fails);
  c.seconds = sw.seconds();
  return c;
}

// ---------------------------------------------------------------- h <= 0 scenario

inline Check check_no_fold_scenario(const VerifyOptions& vo) {
  detail::Stopwatch sw;
  Check c;
  c.name = "no-fold-scenario";
  std::vector<std::string> fails;
  const ProblemSpec P = model_problem(256, [](double) { return -1.0; }, 0.0);
  ContinuationOptions o;
  o.p_min = 0.0;
  o.p_max = 2.0;
  o.ds = 0.05;
  const Branch br = trace_branch(P, GridFunction(P.grid), Parameter::lambda, o);
  c.metric("branch_points", static_cast<double>(br.points.size()));
  c.metric("folds", static_cast<double>(br.folds.size()));
  if (!br.folds.empty()) fails.push_back("fold detected");
  if (br.termination != Termination::range_exhausted || br.points.back().parameter < 2.0)
    fails.push_back("branch did not cover (0, 2]");
  const GridFunction u0 = br.points.front().solution;
  std::vector<double> amps;
  for (int i = 0; i < 16; ++i) amps.push_back(std::pow(2.0, i - 4));
  const auto seeds = amplitude_seeds(P.grid, amps);
  GridFunction prev = u0;
  for (double lam : {0.25, 0.5, 1.0, 2.0}) {
    ProblemSpec Q = P;
    Q.lambda = lam;
    const auto sols = seed_sweep(Q, seeds, {}, 1e-3, vo.threads);
    c.metric("solutions_at_" + std::to_string(lam).substr(0, 4), static_cast<double>(sols.size()));
    if (sols.size() < 2) {
      fails.push_back("fewer than two solutions at lambda " + std::to_string(lam));
      continue;
    }
    const auto lower = solutions_at(br, P, lam);
    const GridFunction& u1 = lower.empty() ? sols.front() : lower.front();
    if ((u1 - sols.front()).sup_norm() > 1e-6) fails.push_back("seed sweep and branch disagree at " + std::to_string(lam));
    if (!strictly_below(u1, u0)) fails.push_back("u_lambda,1 << u_0 fails at " + std::to_string(lam));
    if (!strictly_below(u1, prev)) fails.push_back("lower branch not decreasing at " + std::to_string(lam));
    prev = u1;
  }
  c.passed = fails.empty();
  c.detail = fails.empty() ? "no fold on (0, 2]; two ordered solutions at each lambda" : detail::join(fails);
  c.seconds = sw.seconds();
  return c;
}

// ---------------------------------------------------------------- bounds

inline Check check_lower_bound(double max_change = 0.05) {
  detail::Stopwatch sw;
  Check c;
  c.name = "lower-bound-stability";
  auto h = [](double x) { return std::sin(2 * M_PI * x); };
  const ProblemSpec Pc = model_problem(128, h, 0.0), Pf = model_problem(256, h, 0.0);
  ContinuationOptions o;
  o.p_min = 0.0;
  o.p_max = 2.0;
  o.ds = 0.05;
  const Branch bc = trace_branch(Pc, GridFunction(Pc.grid), Parameter::lambda, o);
  const Branch bf = trace_branch(Pf, GridFunction(Pf.grid), Parameter::lambda, o);
  const BoundReport r = verify_lower_bound(bc, bf, 2.0);
  c.metric("sup_negative_n128", r.sup_negative_coarse);
  c.metric("sup_negative_n256", r.sup_negative_fine);
  c.metric("relative_change", r.stability_ratio);
  c.passed = r.covered && r.sup_negative_fine > 0 && r.stability_ratio < max_change;
  c.detail = "sup ||u^-|| " + std::to_string(r.sup_negative_coarse) + " -> " + std::to_string(r.sup_negative_fine) +
             ", change " + std::to_string(r.stability_ratio) + (r.covered ? "" : ", window not covered");
  c.seconds = sw.seconds();
  return c;
}

/// The transformed negative part satisfies its inequality up to O(h^2) and stays below 1/m.
inline Check check_q_lambda(double tol = 1e-9) {
  detail::Stopwatch sw;
  Check c;
  c.name = "negative-part-inequality";
  std::vector<std::string> fails;
  for (int n : {128, 256}) {
    for (double lam : {0.5, 1.0, 2.0}) {
      const ProblemSpec P = model_problem(n, [](double x) { return std::sin(2 * M_PI * x); }, lam);
      const auto r = solve_full(P, GridFunction(P.grid));
      const auto q = q_lambda_residual(r.solution, P);
      c.metric("min_relative_n" + std::to_string(n) + "_lambda" + std::to_string(lam).substr(0, 3), q.min_relative);
      if (!r.converged) fails.push_back("solve failed");
      if (q.saturated) fails.push_back("w reached 1/m");
      if (q.min_relative < -tol) fails.push_back("inequality fails by " + std::to_string(q.min_relative));
    }
  }
  c.passed = fails.empty();
  c.detail = fails.empty() ? "inequality holds to relative tolerance " + std::to_string(tol) : detail::join(fails);
  c.seconds = sw.seconds();
  return c;
}

// ---------------------------------------------------------------- k-homotopy

inline Check check_k_homotopy(const FoldStudy& fs, const VerifyOptions& vo) {
  detail::Stopwatch sw;
  Check c;
  c.name = "k-homotopy-nonexistence";
  std::vector<std::string> fails;
  const double lb = fs.fold.value;
  const double lam = 0.5 * lb;
  const auto sols = solutions_at(fs.branch, fs.problem, lam);
  if (sols.empty()) {
    c.detail = "no solution at 0.5 lambda_bar";
    return c;
  }
  double sup_neg = 0;
  for (const auto& p : fs.branch.points)
    if (p.parameter >= 0 && p.parameter <= lb) sup_neg = std::max(sup_neg, p.solution.negative_part_norm());
  const double C0 = 2.0 * sup_neg;
  const EigenPair ep = principal_eigenpair(fs.problem.op, fs.problem.c);
  const double m = fs.problem.M.mu1 / fs.problem.op.ellipticity().hi;
  ProblemSpec P = fs.problem;
  P.ctilde = build_ctilde(P.c, P.h, lb, C0, ep, m);
  ContinuationOptions o;
  o.ds = 0.01;
  o.norm_cap = 1e3;
  const Branch br = homotopy_in_k(P, lam, 0.0, 1.0, sols.front(), o);
  const FoldEstimate f = detect_fold(br);
  c.metric("k_fold", f.present ? f.value : -1.0);
  c.metric("C0", C0);
  if (!f.present || !(f.value < 1.0)) fails.push_back("no fold in k below 1");
  P.lambda = lam;
  P.k = 1.0;
  Random rng(vo.seed ^ 0x99u);
  const auto seeds = random_seeds(P.grid, 8, rng);
  std::vector<int> ok(seeds.size());
  parallel_for(seeds.size(), vo.threads, [&](std::size_t i) { ok[i] = solve_full(P, seeds[i]).converged; });
  int conv = 0;
  for (int v : ok) conv += v;
  c.metric("converged_at_k1", conv);
  if (conv) fails.push_back(std::to_string(conv) + " seeds converged at k = 1");
  c.passed = fails.empty();
  c.detail = fails.empty() ? "fold at k* = " + std::to_string(f.value) + "; 0/8 seeds converge at k = 1"
                           : detail::join(fails);
  c.seconds = sw.seconds();
  return c;
}

// ---------------------------------------------------------------- eigen

inline Check check_eigenpair(double tol = 1e-3, double rich_tol = 1e-6) {
  detail::Stopwatch sw;
  Check c;
  c.name = "principal-eigenpair";
  std::vector<std::string> fails;
  auto g = build_interval_grid(0, 1, 512), gc = build_interval_grid(0, 1, 256);
  const auto op = OperatorSpec::laplacian(g), opc = OperatorSpec::laplacian(gc);
  const EigenPair e = principal_eigenpair(op, GridFunction(g, 1.0));
  const EigenPair ec = principal_eigenpair(opc, GridFunction(gc, 1.0));
  const EigenPair e2 = principal_eigenpair(op, GridFunction(g, 2.0));
  const double pi2 = M_PI * M_PI;
  const double rich = (4.0 * e.lambda1 - ec.lambda1) / 3.0;
  c.metric("lambda1_n512", e.lambda1);
  c.metric("error_n512", std::abs(e.lambda1 - pi2));
  c.metric("error_richardson", std::abs(rich - pi2));
  c.metric("homogeneity_error", std::abs(e2.lambda1 - 0.5 * e.lambda1));
  if (!e.converged || !ec.converged || !e2.converged) fails.push_back("iteration did not converge");
  if (!(std::abs(e.lambda1 - pi2) < tol)) fails.push_back("|lambda1 - pi^2| too large");
  if (!(std::abs(rich - pi2) < rich_tol)) fails.push_back("extrapolated error too large");
  if (!(e.phi1.interior_min() > 0)) fails.push_back("phi1 not positive inside");
  if (!(std::abs(e2.lambda1 - 0.5 * e.lambda1) <= 1e-9 * e.lambda1)) fails.push_back("weight homogeneity fails");
  c.passed = fails.empty();
  c.detail = fails.empty() ? "lambda1 = " + std::to_string(e.lambda1) + ", extrapolated error " +
                                 std::to_string(std::abs(rich - pi2))
                           : detail::join(fails);
  c.seconds = sw.seconds();
  return c;
}

// ---------------------------------------------------------------- barriers

inline Check check_barrier_corpus() {
  detail::Stopwatch sw;
  Check c;
  c.name = "barrier-corpus";
  auto g = build_planar_grid(PlanarDomain::rectangle(-1, 1, -1, 1), 128);
  double worst = std::numeric_limits<double>::infinity(), worst_disc = worst, max_alpha = 0;
  int cases = 0;
  std::string failed;
  for (double R : {0.5, 1.0})
    for (double gamma : {0.0, 1.0})
      for (double d : {0.0, 1.0})
        for (double a : {0.5, 2.0}) {
          ++cases;
          const double m0 = a / M_E;
          const BarrierSpec B = make_barrier_spec(0, 0, R, 0.1, Ellipticity{1, 1}, gamma, d, a, m0);
          const BarrierField f = build_barrier(B, g);
          max_alpha = std::max(max_alpha, B.alpha);
          worst = std::min(worst, f.min_margin);
          worst_disc = std::min(worst_disc, f.min_discrete_margin);
          if (!(f.min_margin > 0 && f.min_discrete_margin > 0) && failed.empty())
            failed = "R=" + std::to_string(R) + " gamma=" + std::to_string(gamma) + " d=" + std::to_string(d) +
                     " a=" + std::to_string(a);
        }
  c.metric("cases", cases);
  c.metric("max_alpha", max_alpha);
  c.metric("min_radial_margin", worst);
  c.metric("min_discrete_margin", worst_disc);
  c.passed = failed.empty();
  c.detail = failed.empty() ? "all margins positive (min " + std::to_string(std::min(worst, worst_disc)) + ")"
                            : "non-positive margin at " + failed;
  c.seconds = sw.seconds();
  return c;
}

/// ABP on branch solutions with f^- = 0, SMP and Hopf on nonnegative supersolutions.
inline Check check_max_principles() {
  detail::Stopwatch sw;
  Check c;
  c.name = "abp-smp-hopf";
  std::vector<std::string> fails;
  int abp_cases = 0, smp_cases = 0;
  double worst_margin = -std::numeric_limits<double>::infinity(), worst_hopf = std::numeric_limits<double>::infinity();

  auto abp_on = [&](const GridFunction& u, const ProblemSpec& P) {
    GridFunction f(P.grid);
    for (int i : P.grid->interior()) f[i] = -P.lambda * P.c[i] * u[i] - P.h[i];
    for (int i : P.grid->interior())
      if (f[i] < 0) return;
    const double mu = P.M.mu2;
    const ABPReport r = abp_check(u, f, P.op, mu, 1e3, 1e-8, 0.0, P.quad);
    ++abp_cases;
    if (r.gated) fails.push_back("abp precondition: " + r.message);
    worst_margin = std::max(worst_margin, r.margin);
    if (r.margin > 1e-10 * (1 + u.sup_norm())) fails.push_back("interior maximum above the boundary");
  };
  auto smp_on = [&](const GridFunction& u, const OperatorSpec& op, const std::string& what) {
    ++smp_cases;
    const SMPReport r = smp_classify(u, op, 0.5);
    if (r.verdict != SMPClass::strictly_positive) fails.push_back(what + ": " + to_string(r.verdict) + " " + r.message);
    const double hm = hopf_margin(u);
    worst_hopf = std::min(worst_hopf, hm);
    if (!(hm > 0)) fails.push_back(what + ": hopf margin " + std::to_string(hm));
  };

  {  // h = -1 lower branch
    const ProblemSpec P = model_problem(256, [](double) { return -1.0; }, 0.0);
    ContinuationOptions o;
    o.p_min = 0.0;
    o.p_max = 2.0;
    const Branch br = trace_branch(P, GridFunction(P.grid), Parameter::lambda, o);
    for (const auto& p : br.points) {
      ProblemSpec Q = P;
      Q.lambda = p.parameter;
      abp_on(p.solution, Q);
    }
  }
  {  // h = 1 branch, both sheets, lambda in [0, 4]
    const ProblemSpec P = model_problem(256, [](double) { return 1.0; }, 0.0);
    ContinuationOptions o;
    o.p_min = 0.0;
    o.p_max = 8.0;
    o.norm_cap = 50;
    const Branch br = trace_branch(P, GridFunction(P.grid), Parameter::lambda, o);
    for (std::size_t k = 0; k < br.points.size(); k += 4) smp_on(br.points[k].solution, P.op, "h=1 branch point");
    const EigenPair ep = principal_eigenpair(P.op, P.c);
    smp_on(ep.phi1, P.op, "principal eigenfunction");
  }
  {  // 2D Pucci on a disk
    auto g = build_planar_grid(PlanarDomain::disk(0, 0, 1), 32);
    ProblemSpec P;
    P.grid = g;
    P.op = OperatorSpec::pucci(OperatorKind::pucci_plus, g, Ellipticity{1, 2});
    P.M = MatrixField::scalar(*g, 1.0);
    P.c = GridFunction(g, 1.0);
    P.lambda = 1.0;
    P.h = GridFunction(g, -1.0);
    P.validate();
    const auto neg = solve_full(P, GridFunction(g), {1e-8});
    if (neg.converged) abp_on(neg.solution, P);
    else fails.push_back("disk h=-1 solve failed");
    P.h = GridFunction(g, 1.0);
    const auto pos = solve_full(P, GridFunction(g), {1e-8});
    if (pos.converged) smp_on(pos.solution, P.op, "disk h=1 solution");
    else fails.push_back("disk h=1 solve failed");
  }
  c.metric("abp_cases", abp_cases);
  c.metric("smp_cases", smp_cases);
  c.metric("max_interior_excess", worst_margin);
  c.metric("min_hopf_margin", worst_hopf);
  if (abp_cases == 0) fails.push_back("no ABP cases with f^- = 0");
  c.passed = fails.empty();
  c.detail = fails.empty() ? std::to_string(abp_cases) + " ABP cases, " + std::to_string(smp_cases) +
                                 " SMP/Hopf cases, min hopf margin " + std::to_string(worst_hopf)
                           : fails.front() + (fails.size() > 1 ? " (+" + std::to_string(fails.size() - 1) + " more)" : "");
  c.seconds = sw.seconds();
  return c;
}

// ---------------------------------------------------------------- cross-solver

struct CrossCase {
  std::string label;
  double difference = 0.0;
  bool converged = false;
};

/// Richardson-extrapolated primary (n0, 2 n0) against the extrapolated
/// semilinear oracle (4x and 8x finer), compared at the n0 nodes.
inline CrossCase cross_compare(const std::string& label, const std::function<ProblemSpec(int)>& make, int n0,
                               double seed_amplitude) {
  CrossCase cc;
  cc.label = label;
  cc.converged = true;
  GridFunction prim[2], orc[2];
  const GridPtr g0 = make(n0).grid;
  for (int k = 0; k < 2; ++k) {
    const ProblemSpec Q = make(n0 << k);
    const auto seeds = amplitude_seeds(Q.grid, {seed_amplitude});
    const auto r = solve_full(Q, seeds[0], {1e-12});
    const auto red = semilinear_reduction(Q);
    const auto o4 = semilinear_solve(red, 4, 1e-13, r.solution);
    const auto o8 = semilinear_solve(red, 8, 1e-13, r.solution);
    cc.converged = cc.converged && r.converged && o4.converged && o8.converged;
    const auto a4 = o4.restrict_to(Q.grid), a8 = o8.restrict_to(Q.grid);
    prim[k] = GridFunction(g0);
    orc[k] = GridFunction(g0);
    for (std::size_t i = 0; i < g0->size(); ++i) {
      prim[k][static_cast<int>(i)] = r.solution[static_cast<int>(i << k)];
      orc[k][static_cast<int>(i)] = (4.0 * a8[static_cast<int>(i << k)] - a4[static_cast<int>(i << k)]) / 3.0;
    }
  }
  const GridFunction rich = (4.0 * prim[1] - prim[0]) * (1.0 / 3.0);
  cc.difference = (rich - orc[1]).sup_norm();
  return cc;
}

inline Check check_cross_solver(const FoldStudy& fs, const VerifyOptions& vo, double tol = 1e-6) {
  detail::Stopwatch sw;
  Check c;
  c.name = "cross-solver-oracle";
  std::vector<std::string> fails;
  const double lb = fs.fold.value;
  struct Job {
    std::string label;
    std::function<double(double)> h;
    double lambda, amplitude, mu;
  };
  auto one = [](double) { return 1.0; };
  auto minus = [](double) { return -1.0; };
  auto sine = [](double x) { return std::sin(2 * M_PI * x); };
  const std::vector<Job> jobs = {
      {"h=1 lower at 0.5 lambda_bar", one, 0.5 * lb, 0.0, 1.0},
      {"h=1 upper at 0.5 lambda_bar", one, 0.5 * lb, 3.0, 1.0},
      {"h=-1 lower at lambda=1", minus, 1.0, 0.0, 1.0},
      {"h=-1 upper at lambda=2", minus, 2.0, 5.0, 1.0},
      {"h=sin lower at lambda=1", sine, 1.0, 0.0, 1.0},
      {"h=1 mu=2 lower at lambda=1", one, 1.0, 0.0, 2.0},
  };
  std::vector<CrossCase> res(jobs.size());
  parallel_for(jobs.size(), vo.threads, [&](std::size_t j) {
    const auto& jb = jobs[j];
    res[j] = cross_compare(jb.label, [&](int n) { return model_problem(n, jb.h, jb.lambda, 1.0, jb.mu); }, 64,
                           jb.amplitude);
  });
  double worst = 0;
  for (const auto& r : res) {
    worst = std::max(worst, r.difference);
    if (!r.converged) fails.push_back(r.label + ": solve failed");
    if (!(r.difference < tol)) fails.push_back(r.label + ": difference " + std::to_string(r.difference));
  }
  c.metric("cases", static_cast<double>(res.size()));
  c.metric("max_difference", worst);
  // fold: time map against the tracer's bracket
  const TimeMapFold tm = time_map(semilinear_reduction(fs.problem)).fold();
  c.metric("lambda_bar_time_map", tm.lambda_bar);
  c.metric("lambda_bar_tracer", lb);
  const bool inside = tm.lambda_bar >= fs.fold.lo - tm.bracket && tm.lambda_bar <= fs.fold.hi + tm.bracket;
  if (!inside)
    fails.push_back("time-map fold " + std::to_string(tm.lambda_bar) + " outside tracer bracket [" +
                    std::to_string(fs.fold.lo) + ", " + std::to_string(fs.fold.hi) + "]");
  c.passed = fails.empty();
  c.detail = fails.empty() ? "max extrapolated difference " + std::to_string(worst) + "; time-map fold " +
                                 std::to_string(tm.lambda_bar) + " inside tracer bracket"
                           : detail::join(fails);
  c.seconds = sw.seconds();
  return c;
}

// ---------------------------------------------------------------- suites

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"operators", "transforms", "barriers", "bounds",
                                                 "branches",  "eigen",      "oracle"};
  return names;
}

inline std::vector<Check> run_suite(const std::string& name, const VerifyOptions& vo) {
  std::vector<Check> out;
  if (name == "all") {
    for (const auto& n : suite_names()) {
      auto part = run_suite(n, vo);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  if (name == "operators") {
    out.push_back(check_pucci_corpus(vo));
    out.push_back(check_coercive_uniqueness(vo));
  } else if (name == "transforms") {
    out.push_back(check_sandwich_order(vo));
  } else if (name == "barriers") {
    out.push_back(check_barrier_corpus());
    out.push_back(check_max_principles());
  } else if (name == "bounds") {
    out.push_back(check_lower_bound());
    out.push_back(check_q_lambda());
  } else if (name == "branches") {
    const FoldStudy fs = run_fold_study(256, 0.05, vo.threads);
    out.push_back(check_fold_scenario(fs, vo));
    out.push_back(check_blow_up(fs));
    out.push_back(check_no_fold_scenario(vo));
    out.push_back(check_k_homotopy(fs, vo));
  } else if (name == "eigen") {
    out.push_back(check_eigenpair());
  } else if (name == "oracle") {
    out.push_back(check_radial_family());
    const FoldStudy fs = run_fold_study(256, 0.05, vo.threads);
    out.push_back(check_cross_solver(fs, vo));
  } else {
    throw ConfigError("unknown verification suite '" + name + "'");
  }
  return out;
}

}  // namespace qgrowth
