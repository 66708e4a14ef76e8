#pragma once

#include <algorithm>
#include <array>
#include <numeric>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "qgrowth/transforms.hpp"

namespace qgrowth {

/// u_k(r) = ln((r^{2-n} - k) / (1 - k)); e^{u_k} is harmonic in R^n \ {0}.
inline double radial_family(double k, int n, double r) {
  if (!(k >= 0 && k < 1)) throw DomainError("radial_family: k must lie in [0, 1)");
  if (n <= 2) throw DomainError("radial_family: dimension must exceed 2");
  if (!(r > 0)) throw DomainError("radial_family: singular at the origin");
  if (r > 1) throw DomainError("radial_family: |x| must not exceed 1");
  if (r == 1.0) return 0.0;
  return std::log((std::pow(r, 2.0 - n) - k) / (1.0 - k));
}

inline double radial_family(double k, int n, const std::vector<double>& x) {
  double s = 0;
  for (double xi : x) s += xi * xi;
  return radial_family(k, n, std::sqrt(s));
}

/// h such that residual_P(u_exact) vanishes at interior nodes for the
/// problem's own discretization.
inline GridFunction manufactured(const GridFunction& u_exact, const ProblemSpec& P) {
  const auto& g = *P.grid;
  GridFunction h(P.grid);
  const GridFunction F = apply_F(P.op, u_exact);
  const GridFunction Q = quadratic_field(u_exact, P.M, P.quad, P.op.ellipticity().lo);
  for (int i : g.interior()) {
    h[i] = -(F[i] + P.lambda * P.c[i] * u_exact[i] + Q[i]);
    if (!P.ctilde.empty()) h[i] -= P.k * P.ctilde[i];
  }
  return h;
}

namespace detail {

/// Gauss-Legendre nodes and weights on [-1, 1].
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5)), dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = -z;
    x[static_cast<std::size_t>(n - 1 - i)] = z;
    w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(n - 1 - i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

inline double interp_linear(const Grid& g, const GridFunction& f, double x) {
  const double t = (x - g.x_lo()) / g.hx();
  int i = static_cast<int>(std::floor(t));
  i = std::clamp(i, 0, g.nx() - 2);
  const double s = t - i;
  return (1.0 - s) * f[static_cast<std::size_t>(i)] + s * f[static_cast<std::size_t>(i + 1)];
}

}  // namespace detail

struct OracleSolution {
  GridPtr grid;
  GridFunction u;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;

  /// Values at the nodes of a coarser interval grid whose spacing is an integer multiple.
  GridFunction restrict_to(const GridPtr& coarse) const {
    const int ratio = static_cast<int>(std::lround(coarse->hx() / grid->hx()));
    if (std::abs(ratio * grid->hx() - coarse->hx()) > 1e-12 * coarse->hx())
      throw ConfigError("oracle: grids are not nested");
    GridFunction out(coarse);
    for (std::size_t i = 0; i < coarse->size(); ++i) out[i] = u[i * static_cast<std::size_t>(ratio)];
    return out;
  }
};

/// Independent damped Newton solve of the reduced problem
///   -a v'' = (lambda/m) c (1+mv) ln(1+mv) + h (1+mv),  v = 0 at both ends,
/// on an interval grid `refine` times finer than the reduction's grid, with a
/// tridiagonal direct solver. Returns u = ln(1+mv)/m on the fine grid.
inline OracleSolution semilinear_solve(const SemilinearReduction& R, int refine, double tol,
                                       const GridFunction& seed_u = {}) {
  if (R.grid->dimension() != 1) throw UnsupportedError("semilinear_solve: only interval grids are supported");
  if (refine < 4) throw ConfigError("semilinear_solve: oracle grid must be at least 4x finer");
  const auto& cg = *R.grid;
  OracleSolution out;
  out.grid = build_interval_grid(cg.x_lo(), cg.x_hi(), (cg.nx() - 1) * refine);
  const auto& g = *out.grid;
  const int N = g.nx() - 1;
  const double h = g.hx();
  std::vector<double> cc(static_cast<std::size_t>(N + 1)), hh(static_cast<std::size_t>(N + 1)),
      v(static_cast<std::size_t>(N + 1), 0.0);
  for (int i = 0; i <= N; ++i) {
    const double x = g.x(static_cast<std::size_t>(i));
    cc[i] = R.c_source ? R.c_source(x, 0.0) : detail::interp_linear(cg, R.c, x);
    hh[i] = R.h_source ? R.h_source(x, 0.0) : detail::interp_linear(cg, R.h, x);
    if (!seed_u.empty()) {
      const double us = detail::interp_linear(cg, seed_u, x);
      v[i] = std::expm1(R.m * us) / R.m;
    }
  }
  v[0] = v[N] = 0.0;
  const double a = R.diffusion, m = R.m, lam = R.lambda;
  auto g_of = [&](int i, double vi) {
    const double t = 1.0 + m * vi;
    return (lam / m) * cc[i] * t * std::log(t) + hh[i] * t;
  };
  auto dg_of = [&](int i, double vi) { return lam * cc[i] * (std::log1p(m * vi) + 1.0) + hh[i] * m; };
  auto residual = [&](const std::vector<double>& vv, std::vector<double>& r) {
    double worst = 0;
    r.assign(vv.size(), 0.0);
    for (int i = 1; i < N; ++i) {
      if (!(1.0 + m * vv[i] > 0)) return std::numeric_limits<double>::infinity();
      const double lap = a * (vv[i + 1] - 2.0 * vv[i] + vv[i - 1]) / (h * h);
      const double gi = g_of(i, vv[i]);
      r[i] = lap + gi;
      const double scale = 1.0 + a * (std::abs(vv[i + 1]) + 2.0 * std::abs(vv[i]) + std::abs(vv[i - 1])) / (h * h) +
                           std::abs(gi);
      worst = std::max(worst, std::abs(r[i]) / scale);
    }
    return worst;
  };
  std::vector<double> r, lo(static_cast<std::size_t>(N + 1)), di(static_cast<std::size_t>(N + 1)),
      up(static_cast<std::size_t>(N + 1)), rhs(static_cast<std::size_t>(N + 1)), dv(static_cast<std::size_t>(N + 1)),
      trial;
  double err = residual(v, r);
  for (int it = 0; it < 200 && err > tol; ++it) {
    // tridiagonal Jacobian on interior unknowns 1..N-1
    for (int i = 1; i < N; ++i) {
      lo[i] = a / (h * h);
      up[i] = a / (h * h);
      di[i] = -2.0 * a / (h * h) + dg_of(i, v[i]);
      rhs[i] = -r[i];
    }
    for (int i = 2; i < N; ++i) {
      const double f = lo[i] / di[i - 1];
      di[i] -= f * up[i - 1];
      rhs[i] -= f * rhs[i - 1];
    }
    dv[N - 1] = rhs[N - 1] / di[N - 1];
    for (int i = N - 2; i >= 1; --i) dv[i] = (rhs[i] - up[i] * dv[i + 1]) / di[i];
    double t = 1.0;
    const double r0 = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
    bool ok = false;
    std::vector<double> rt;
    while (t > 1e-10) {
      trial = v;
      for (int i = 1; i < N; ++i) trial[i] += t * dv[i];
      const double e = residual(trial, rt);
      if (std::isfinite(e)) {
        const double rn = std::sqrt(std::inner_product(rt.begin(), rt.end(), rt.begin(), 0.0));
        if (rn <= (1.0 - 1e-4 * t) * r0 || e <= tol) {
          ok = true;
          break;
        }
      }
      t *= 0.5;
    }
    ++out.iterations;
    if (!ok) {
      out.message = "line search failed";
      break;
    }
    v = trial;
    r = rt;
    err = residual(v, r);
  }
  out.residual = err;
  out.converged = err <= tol;
  if (!out.converged && out.message.empty()) out.message = "Newton did not converge";
  Eigen::VectorXd u(N + 1);
  for (int i = 0; i <= N; ++i) u[i] = std::log1p(m * v[i]) / m;
  out.u = GridFunction(out.grid, u);
  return out;
}

/// Fold of the constant-coefficient model -a v'' = g(v) on an interval of
/// length L, from the time map of the symmetric positive solution.
struct TimeMapFold {
  double lambda_bar = 0.0;
  /// max v at the fold (reduced variable) and the corresponding max u.
  double v_max = 0.0, u_max = 0.0;
  double bracket = 0.0;
};

class TimeMap {
 public:
  TimeMap(double diffusion, double m, double c, double h, double length)
      : a_(diffusion), m_(m), c_(c), h_(h), L_(length) {
    if (!(h > 0) || !(c >= 0) || !(m > 0) || !(diffusion > 0) || !(length > 0))
      throw UnsupportedError("time map: needs constant c >= 0, h > 0, m > 0");
    detail::gauss_legendre(48, gx_, gw_);
  }

  double G(double lambda, double v) const {
    const double t = 1.0 + m_ * v;
    return (lambda * c_ / (m_ * m_)) * (0.5 * t * t * std::log(t) - 0.25 * (t * t - 1.0)) + h_ * (v + 0.5 * m_ * v * v);
  }

  /// Half-length reached by the symmetric solution with maximum V.
  double half_length(double lambda, double V) const {
    const double GV = G(lambda, V);
    double sum = 0;
    const int panels = 16;
    for (int p = 0; p < panels; ++p) {
      const double s0 = double(p) / panels, s1 = double(p + 1) / panels;
      for (std::size_t q = 0; q < gx_.size(); ++q) {
        const double s = 0.5 * (s0 + s1) + 0.5 * (s1 - s0) * gx_[q];
        const double v = V * (1.0 - s * s);
        const double diff = GV - G(lambda, v);
        if (!(diff > 0)) return std::numeric_limits<double>::infinity();
        sum += 0.5 * (s1 - s0) * gw_[q] * 2.0 * V * s * std::sqrt(0.5 * a_) / std::sqrt(diff);
      }
    }
    return sum;
  }

  /// lambda >= 0 for which the solution with maximum V fits the interval; NaN if none.
  double lambda_for(double V) const {
    const double target = 0.5 * L_;
    if (half_length(0.0, V) < target) return std::numeric_limits<double>::quiet_NaN();
    double lo = 0.0, hi = 1.0;
    while (half_length(hi, V) > target) {
      hi *= 2.0;
      if (hi > 1e8) return std::numeric_limits<double>::quiet_NaN();
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (half_length(mid, V) > target)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }

  TimeMapFold fold() const {
    // scan V on a log grid, then golden-section refine around the maximum
    double best_V = 0, best = -1;
    std::vector<double> Vs;
    for (int i = 0; i <= 160; ++i) Vs.push_back(std::pow(10.0, -2.0 + 4.0 * i / 160.0));
    std::size_t bi = 0;
    for (std::size_t i = 0; i < Vs.size(); ++i) {
      const double l = lambda_for(Vs[i]);
      if (std::isfinite(l) && l > best) {
        best = l;
        best_V = Vs[i];
        bi = i;
      }
    }
    if (best < 0) throw Error("time map: no positive-lambda solutions found");
    double a = Vs[bi > 0 ? bi - 1 : 0], b = Vs[std::min(bi + 1, Vs.size() - 1)];
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = lambda_for(x1), f2 = lambda_for(x2);
    for (int it = 0; it < 100 && b - a > 1e-10 * b; ++it) {
      if (f1 > f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = lambda_for(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = lambda_for(x2);
      }
    }
    best_V = 0.5 * (a + b);
    TimeMapFold f;
    f.lambda_bar = lambda_for(best_V);
    f.v_max = best_V;
    f.u_max = std::log1p(m_ * best_V) / m_;
    f.bracket = 1e-9 * f.lambda_bar;
    return f;
  }

 private:
  double a_, m_, c_, h_, L_;
  std::vector<double> gx_, gw_;
};

/// Time map of a reduction with constant c, h on an interval.
inline TimeMap time_map(const SemilinearReduction& R) {
  const auto& g = *R.grid;
  if (g.dimension() != 1) throw UnsupportedError("time map: interval grids only");
  const int i0 = g.interior()[0];
  for (int i : g.interior())
    if (R.c[i] != R.c[i0] || R.h[i] != R.h[i0]) throw UnsupportedError("time map: c and h must be constant");
  return TimeMap(R.diffusion, R.m, R.c[i0], R.h[i0], g.x_hi() - g.x_lo());
}

}  // namespace qgrowth
