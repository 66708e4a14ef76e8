#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "qgrowth/calculus.hpp"
#include "qgrowth/error.hpp"
#include "qgrowth/mesh.hpp"

namespace qgrowth {

/// Ellipticity constants 0 < lo <= hi of the Pucci operators (lambda_P, Lambda_P).
struct Ellipticity {
  double lo = 1.0;
  double hi = 1.0;

  void validate() const {
    if (!(lo > 0) || !(hi >= lo) || !std::isfinite(hi))
      throw ValidationError("ellipticity: need 0 < lambda_P <= Lambda_P, got " + std::to_string(lo) + ", " +
                            std::to_string(hi));
  }
};

namespace detail {

inline void check_symmetric(const Eigen::MatrixXd& X) {
  if (X.rows() != X.cols() || X.rows() == 0) throw DomainError("pucci: matrix must be square and non-empty");
  const double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
  if ((X - X.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw DomainError("pucci: matrix is not symmetric");
}

}  // namespace detail

/// M^+(X) = sup tr(AX) over lambda_P I <= A <= Lambda_P I.
inline double pucci_plus(const Eigen::MatrixXd& X, const Ellipticity& e) {
  detail::check_symmetric(X);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X, Eigen::EigenvaluesOnly);
  double s = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double ev = es.eigenvalues()[i];
    s += ev > 0 ? e.hi * ev : e.lo * ev;
  }
  return s;
}

/// M^-(X) = inf tr(AX) over lambda_P I <= A <= Lambda_P I.
inline double pucci_minus(const Eigen::MatrixXd& X, const Ellipticity& e) {
  detail::check_symmetric(X);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X, Eigen::EigenvaluesOnly);
  double s = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double ev = es.eigenvalues()[i];
    s += ev > 0 ? e.lo * ev : e.hi * ev;
  }
  return s;
}

namespace detail {

/// Value of a nodal expression together with its derivative with respect to
/// the unknowns in the node's stencil slots.
struct Lin {
  double value = 0.0;
  std::array<double, kSlotCount> d{};

  Lin& add(const Lin& o, double s = 1.0) {
    value += s * o.value;
    for (int k = 0; k < kSlotCount; ++k) d[k] += s * o.d[k];
    return *this;
  }
  Lin scaled(double s) const {
    Lin r;
    r.add(*this, s);
    return r;
  }
};

struct NodeCtx {
  const Eigen::VectorXd& u;
  const Neighbors& nb;
  double hx, hy;
  int dim;
  int node;
  double at(int s) const { return u[nb[s]]; }
};

inline Lin unit(const NodeCtx& c) {
  Lin l;
  l.value = c.at(C);
  l.d[C] = 1.0;
  return l;
}

inline Lin second_axis(const NodeCtx& c, int plus, int minus, double h) {
  Lin l;
  const double h2 = h * h;
  l.value = (c.at(plus) - 2.0 * c.at(C) + c.at(minus)) / h2;
  l.d[plus] = 1.0 / h2;
  l.d[minus] = 1.0 / h2;
  l.d[C] = -2.0 / h2;
  return l;
}
inline Lin dxx(const NodeCtx& c) { return second_axis(c, XP, XM, c.hx); }
inline Lin dyy(const NodeCtx& c) { return second_axis(c, YP, YM, c.hy); }
inline Lin dxy(const NodeCtx& c) {
  Lin l;
  const double w = 1.0 / (4.0 * c.hx * c.hy);
  l.value = (c.at(PP) - c.at(PM) - c.at(MP) + c.at(MM)) * w;
  l.d[PP] = w;
  l.d[PM] = -w;
  l.d[MP] = -w;
  l.d[MM] = w;
  return l;
}
/// Second difference along a grid diagonal (PP-MM when first, PM-MP otherwise).
inline Lin ddiag(const NodeCtx& c, bool main_diagonal) {
  Lin l;
  const double h2 = c.hx * c.hx + c.hy * c.hy;
  const int a = main_diagonal ? PP : PM, b = main_diagonal ? MM : MP;
  l.value = (c.at(a) - 2.0 * c.at(C) + c.at(b)) / h2;
  l.d[a] = l.d[b] = 1.0 / h2;
  l.d[C] = -2.0 / h2;
  return l;
}
inline Lin forward(const NodeCtx& c, int plus, double h) {
  Lin l;
  l.value = (c.at(plus) - c.at(C)) / h;
  l.d[plus] = 1.0 / h;
  l.d[C] = -1.0 / h;
  return l;
}
inline Lin backward(const NodeCtx& c, int minus, double h) {
  Lin l;
  l.value = (c.at(C) - c.at(minus)) / h;
  l.d[C] = 1.0 / h;
  l.d[minus] = -1.0 / h;
  return l;
}
inline Lin centered(const NodeCtx& c, int plus, int minus, double h) {
  Lin l;
  l.value = (c.at(plus) - c.at(minus)) / (2.0 * h);
  l.d[plus] = 1.0 / (2.0 * h);
  l.d[minus] = -1.0 / (2.0 * h);
  return l;
}

/// Upwinded drift b * du/dx_k: forward difference for b > 0, backward for b < 0.
inline Lin upwind_drift(const NodeCtx& c, double b, int axis) {
  const int plus = axis == 0 ? XP : YP, minus = axis == 0 ? XM : YM;
  const double h = axis == 0 ? c.hx : c.hy;
  if (b > 0) return forward(c, plus, h).scaled(b);
  if (b < 0) return backward(c, minus, h).scaled(b);
  return Lin{};
}

/// Monotone upwind |Du| (sign > 0) or -|Du| (sign < 0), with linearization.
/// The policy code records which one-sided difference is active on each axis.
inline Lin upwind_abs_gradient(const NodeCtx& c, int sign, int* policy) {
  std::array<Lin, 2> m{};
  int code = 0;
  for (int axis = 0; axis < c.dim; ++axis) {
    const int plus = axis == 0 ? XP : YP, minus = axis == 0 ? XM : YM;
    const double h = axis == 0 ? c.hx : c.hy;
    Lin fwd = forward(c, plus, h);
    Lin nbwd = backward(c, minus, h).scaled(-1.0);
    int pick = 0;
    if (sign > 0) {
      if (fwd.value >= nbwd.value && fwd.value > 0) {
        m[axis] = fwd;
        pick = 1;
      } else if (nbwd.value > 0) {
        m[axis] = nbwd;
        pick = 2;
      }
    } else {
      if (fwd.value <= nbwd.value && fwd.value < 0) {
        m[axis] = fwd;
        pick = 1;
      } else if (nbwd.value < 0) {
        m[axis] = nbwd;
        pick = 2;
      }
    }
    code = code * 3 + pick;
  }
  if (policy) *policy = code;
  Lin out;
  double s = 0;
  for (int axis = 0; axis < c.dim; ++axis) s += m[axis].value * m[axis].value;
  const double norm = std::sqrt(s);
  if (norm > 0)
    for (int axis = 0; axis < c.dim; ++axis) out.add(m[axis], m[axis].value / norm);
  out.value = norm;
  return sign > 0 ? out : out.scaled(-1.0);
}

/// Coefficient picked by a 1D Pucci operator for curvature x.
inline double pucci_coeff(double x, int sign, const Ellipticity& e) {
  if (sign > 0) return x > 0 ? e.hi : e.lo;
  return x > 0 ? e.lo : e.hi;
}

/// Pointwise Pucci operator of the discrete Hessian by eigen-decomposition.
inline Lin pucci_eigen(const NodeCtx& c, int sign, const Ellipticity& e, int* policy) {
  Lin xx = dxx(c);
  if (c.dim == 1) {
    const double a = pucci_coeff(xx.value, sign, e);
    if (policy) *policy = xx.value > 0;
    return xx.scaled(a);
  }
  Lin yy = dyy(c), xy = dxy(c);
  const double a = xx.value, b = xy.value, d = yy.value;
  const double mean = 0.5 * (a + d);
  const double rad = std::hypot(0.5 * (a - d), b);
  const double e1 = mean + rad, e2 = mean - rad;
  // unit eigenvector for e1
  double q0, q1;
  {
    const double v0 = b, v1 = e1 - a, w0 = e1 - d, w1 = b;
    const double nv = std::hypot(v0, v1), nw = std::hypot(w0, w1);
    if (nv >= nw && nv > 0) {
      q0 = v0 / nv;
      q1 = v1 / nv;
    } else if (nw > 0) {
      q0 = w0 / nw;
      q1 = w1 / nw;
    } else {
      q0 = 1.0;
      q1 = 0.0;
    }
  }
  const double a1 = pucci_coeff(e1, sign, e), a2 = pucci_coeff(e2, sign, e);
  if (policy) *policy = (e1 > 0) * 2 + (e2 > 0);
  // A* = a2 I + (a1 - a2) q q^T
  const double A11 = a2 + (a1 - a2) * q0 * q0;
  const double A22 = a2 + (a1 - a2) * q1 * q1;
  const double A12 = (a1 - a2) * q0 * q1;
  Lin out;
  out.add(xx, A11).add(yy, A22).add(xy, 2.0 * A12);
  return out;
}

/// Two-frame wide-stencil Pucci: extremum over the axis frame and the diagonal
/// frame of the 1D Pucci sums. Monotone by construction.
inline Lin pucci_rotated(const NodeCtx& c, int sign, const Ellipticity& e, int* policy) {
  if (c.dim == 1) return pucci_eigen(c, sign, e, policy);
  std::array<std::array<Lin, 2>, 2> frames = {{{dxx(c), dyy(c)}, {ddiag(c, true), ddiag(c, false)}}};
  Lin best;
  int best_frame = -1;
  for (int f = 0; f < 2; ++f) {
    Lin s;
    for (const Lin& dir : frames[f]) s.add(dir, pucci_coeff(dir.value, sign, e));
    if (best_frame < 0 || (sign > 0 ? s.value > best.value : s.value < best.value)) {
      best = s;
      best_frame = f;
    }
  }
  if (policy) *policy = best_frame;
  return best;
}

/// phi(t) = e^t - 1 - t, accurate for small t.
inline double expm1_minus_id(double t) {
  if (std::abs(t) < 1e-3) return t * t * (0.5 + t * (1.0 / 6.0 + t * (1.0 / 24.0 + t / 120.0)));
  return std::expm1(t) - t;
}

}  // namespace detail

enum class OperatorKind { pucci_plus, pucci_minus, linear, hjb_sup, isaacs };
enum class PucciStencil { eigen, rotated };

inline std::string to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::pucci_plus: return "pucci_plus";
    case OperatorKind::pucci_minus: return "pucci_minus";
    case OperatorKind::linear: return "linear";
    case OperatorKind::hjb_sup: return "hjb_sup";
    case OperatorKind::isaacs: return "isaacs";
  }
  return "?";
}

/// One linear member tr(a D^2u) + b.Du - d0 u with per-node coefficients.
struct LinearMember {
  Eigen::VectorXd a11, a12, a22, b1, b2, d0;

  static LinearMember constant(const Grid& g, double a11, double a12 = 0.0, double a22 = 0.0, double b1 = 0.0,
                               double b2 = 0.0, double d0 = 0.0) {
    const auto n = static_cast<Eigen::Index>(g.size());
    LinearMember m;
    m.a11 = Eigen::VectorXd::Constant(n, a11);
    m.a12 = Eigen::VectorXd::Constant(n, g.dimension() == 2 ? a12 : 0.0);
    m.a22 = Eigen::VectorXd::Constant(n, g.dimension() == 2 ? a22 : 0.0);
    m.b1 = Eigen::VectorXd::Constant(n, b1);
    m.b2 = Eigen::VectorXd::Constant(n, g.dimension() == 2 ? b2 : 0.0);
    m.d0 = Eigen::VectorXd::Constant(n, d0);
    return m;
  }
  /// a = s I (the isotropic Laplacian scaled by s).
  static LinearMember laplacian(const Grid& g, double s = 1.0) {
    return constant(g, s, 0.0, g.dimension() == 2 ? s : 0.0);
  }

  detail::Lin evaluate(const detail::NodeCtx& c) const {
    const int i = c.node;
    detail::Lin out;
    out.add(detail::dxx(c), a11[i]);
    out.add(detail::upwind_drift(c, b1[i], 0));
    if (c.dim == 2) {
      out.add(detail::dyy(c), a22[i]);
      if (a12[i] != 0.0) out.add(detail::dxy(c), 2.0 * a12[i]);
      out.add(detail::upwind_drift(c, b2[i], 1));
    }
    if (d0[i] != 0.0) out.add(detail::unit(c), -d0[i]);
    return out;
  }
};

/// The operator F of the problem: Pucci extremal, a single linear member, an
/// HJB supremum of members, or an Isaacs sup-inf over groups of members.
///
/// Invariants checked at construction: every member is (lambda_P, Lambda_P)
/// elliptic, its drift is bounded by the drift bound b and its zero-order
/// coefficient lies in [0, d]. No member carries a constant term, so
/// F(x, 0, 0, 0) = 0 holds by construction.
class OperatorSpec {
 public:
  OperatorSpec() = default;

  static OperatorSpec pucci(OperatorKind kind, GridPtr grid, Ellipticity e, GridFunction drift_bound = {},
                            GridFunction zero_order_bound = {}, PucciStencil stencil = PucciStencil::eigen) {
    if (kind != OperatorKind::pucci_plus && kind != OperatorKind::pucci_minus)
      throw ConfigError("OperatorSpec::pucci: kind must be pucci_plus or pucci_minus");
    OperatorSpec op(kind, std::move(grid), e);
    op.stencil_ = stencil;
    op.set_bounds(std::move(drift_bound), std::move(zero_order_bound), false);
    op.validate();
    return op;
  }
  static OperatorSpec linear(GridPtr grid, Ellipticity e, LinearMember m, GridFunction drift_bound = {},
                             GridFunction zero_order_bound = {}) {
    OperatorSpec op(OperatorKind::linear, std::move(grid), e);
    op.groups_ = {{std::move(m)}};
    op.set_bounds(std::move(drift_bound), std::move(zero_order_bound), true);
    op.validate();
    return op;
  }
  static OperatorSpec hjb(GridPtr grid, Ellipticity e, std::vector<LinearMember> members,
                          GridFunction drift_bound = {}, GridFunction zero_order_bound = {}) {
    if (members.empty()) throw ConfigError("hjb operator: member family is empty");
    OperatorSpec op(OperatorKind::hjb_sup, std::move(grid), e);
    for (auto& m : members) op.groups_.push_back({std::move(m)});
    op.set_bounds(std::move(drift_bound), std::move(zero_order_bound), true);
    op.validate();
    return op;
  }
  /// F = max over groups of min over the members of each group.
  static OperatorSpec isaacs(GridPtr grid, Ellipticity e, std::vector<std::vector<LinearMember>> groups,
                             GridFunction drift_bound = {}, GridFunction zero_order_bound = {}) {
    if (groups.empty()) throw ConfigError("isaacs operator: family is empty");
    for (const auto& g : groups)
      if (g.empty()) throw ConfigError("isaacs operator: empty inner family");
    OperatorSpec op(OperatorKind::isaacs, std::move(grid), e);
    op.groups_ = std::move(groups);
    op.set_bounds(std::move(drift_bound), std::move(zero_order_bound), true);
    op.validate();
    return op;
  }
  /// The constant-coefficient Laplacian scaled by lambda_P (linear kind).
  static OperatorSpec laplacian(GridPtr grid, Ellipticity e = {}) {
    auto m = LinearMember::laplacian(*grid, e.lo);
    return linear(grid, e, std::move(m));
  }

  OperatorKind kind() const { return kind_; }
  const Ellipticity& ellipticity() const { return ell_; }
  const GridPtr& grid() const { return grid_; }
  const GridFunction& drift_bound() const { return b_; }
  const GridFunction& zero_order_bound() const { return d_; }
  PucciStencil stencil() const { return stencil_; }
  const std::vector<std::vector<LinearMember>>& groups() const { return groups_; }
  bool is_pucci() const { return kind_ == OperatorKind::pucci_plus || kind_ == OperatorKind::pucci_minus; }

  /// True when the discrete operator is piecewise linear and monotone, so that
  /// Howard policy iteration applies with full steps.
  bool policy_iteration_applies() const {
    if (kind_ == OperatorKind::isaacs) return false;
    if (is_pucci()) return grid_->dimension() == 1 || stencil_ == PucciStencil::rotated;
    if (grid_->dimension() == 2)
      for (const auto& g : groups_)
        for (const auto& m : g)
          if (m.a12.cwiseAbs().maxCoeff() > 0) return false;
    return true;
  }

  /// Same operator with a different drift bound (e.g. b + 2 mu_2 |Du_0|).
  OperatorSpec with_drift_bound(GridFunction b) const {
    OperatorSpec op = *this;
    op.b_ = std::move(b);
    op.validate();
    return op;
  }

  void validate() const {
    ell_.validate();
    const auto& g = *grid_;
    for (int i : g.active()) {
      if (!(b_[i] >= 0)) throw ValidationError("operator: drift bound b must be >= 0 (node " + std::to_string(i) + ")");
      if (!(d_[i] >= 0))
        throw ValidationError("operator: zero-order bound d must be >= 0 (node " + std::to_string(i) + ")");
    }
    const double tol = 1e-12 * std::max(1.0, ell_.hi);
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      for (std::size_t mi = 0; mi < groups_[gi].size(); ++mi) {
        const auto& m = groups_[gi][mi];
        const std::string who = "member " + std::to_string(gi) + "." + std::to_string(mi);
        for (int i : g.interior()) {
          double lo, hi;
          if (g.dimension() == 1) {
            lo = hi = m.a11[i];
          } else {
            const double mean = 0.5 * (m.a11[i] + m.a22[i]);
            const double rad = std::hypot(0.5 * (m.a11[i] - m.a22[i]), m.a12[i]);
            lo = mean - rad;
            hi = mean + rad;
          }
          if (lo < ell_.lo - tol || hi > ell_.hi + tol)
            throw ValidationError("operator " + who + ": coefficient matrix leaves [lambda_P, Lambda_P] at node " +
                                  std::to_string(i));
          const double bn = std::hypot(m.b1[i], m.b2[i]);
          if (bn > b_[i] * (1 + 1e-12) + 1e-14)
            throw ValidationError("operator " + who + ": drift exceeds bound b at node " + std::to_string(i));
          if (m.d0[i] < 0 || m.d0[i] > d_[i] * (1 + 1e-12) + 1e-14)
            throw ValidationError("operator " + who + ": zero-order coefficient outside [0, d] at node " +
                                  std::to_string(i));
        }
      }
    }
  }

  /// Discrete F at an interior node with its linearization; `policy` receives
  /// a code identifying the active branch (member index, Pucci sign pattern).
  detail::Lin evaluate(const detail::NodeCtx& c, int* policy = nullptr) const {
    const int i = c.node;
    switch (kind_) {
      case OperatorKind::pucci_plus:
      case OperatorKind::pucci_minus: {
        const int sign = kind_ == OperatorKind::pucci_plus ? 1 : -1;
        int p1 = 0, p2 = 0;
        detail::Lin out = stencil_ == PucciStencil::eigen ? detail::pucci_eigen(c, sign, ell_, &p1)
                                                          : detail::pucci_rotated(c, sign, ell_, &p1);
        if (b_[i] != 0.0) out.add(detail::upwind_abs_gradient(c, sign, &p2), b_[i]);
        if (d_[i] != 0.0) out.add(detail::unit(c), -d_[i]);
        if (policy) *policy = p1 * 16 + p2;
        return out;
      }
      case OperatorKind::linear:
        if (policy) *policy = 0;
        return groups_[0][0].evaluate(c);
      case OperatorKind::hjb_sup:
      case OperatorKind::isaacs: {
        detail::Lin best;
        int best_code = -1;
        int offset = 0;
        for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
          detail::Lin inner;
          int inner_idx = -1;
          for (std::size_t mi = 0; mi < groups_[gi].size(); ++mi) {
            detail::Lin v = groups_[gi][mi].evaluate(c);
            if (inner_idx < 0 || v.value < inner.value) {
              inner = v;
              inner_idx = static_cast<int>(mi);
            }
          }
          if (best_code < 0 || inner.value > best.value) {
            best = inner;
            best_code = offset + inner_idx;
          }
          offset += static_cast<int>(groups_[gi].size());
        }
        if (policy) *policy = best_code;
        return best;
      }
    }
    return {};
  }

 private:
  OperatorSpec(OperatorKind k, GridPtr g, Ellipticity e) : kind_(k), grid_(std::move(g)), ell_(e) {}

  void set_bounds(GridFunction b, GridFunction d, bool infer_from_members) {
    const auto& g = *grid_;
    if (b.empty()) {
      b = GridFunction(grid_, 0.0);
      if (infer_from_members)
        for (const auto& grp : groups_)
          for (const auto& m : grp)
            for (int i : g.active()) b[i] = std::max(b[i], std::hypot(m.b1[i], m.b2[i]));
    }
    if (d.empty()) {
      d = GridFunction(grid_, 0.0);
      if (infer_from_members)
        for (const auto& grp : groups_)
          for (const auto& m : grp)
            for (int i : g.active()) d[i] = std::max(d[i], m.d0[i]);
    }
    b_ = std::move(b);
    d_ = std::move(d);
  }

  OperatorKind kind_ = OperatorKind::linear;
  GridPtr grid_;
  Ellipticity ell_;
  PucciStencil stencil_ = PucciStencil::eigen;
  std::vector<std::vector<LinearMember>> groups_;
  GridFunction b_, d_;
};

namespace detail {
inline NodeCtx ctx_at(const Grid& g, const Eigen::VectorXd& u, int node) {
  return NodeCtx{u, g.neighbors(node), g.hx(), g.hy(), g.dimension(), node};
}
}  // namespace detail

/// L^+[u] = M^+(D^2u) + b|Du| (sign > 0) or L^-[u] = M^-(D^2u) - b|Du| (sign < 0)
/// at interior nodes, with monotone upwinding of |Du|. Zero on the boundary.
inline GridFunction extremal_L(const GridFunction& u, int sign, const Ellipticity& e, const GridFunction& b,
                               PucciStencil stencil = PucciStencil::eigen) {
  const auto& g = *u.grid();
  GridFunction out(u.grid());
  for (int i : g.interior()) {
    auto c = detail::ctx_at(g, u.values(), i);
    detail::Lin v = stencil == PucciStencil::eigen ? detail::pucci_eigen(c, sign, e, nullptr)
                                                   : detail::pucci_rotated(c, sign, e, nullptr);
    if (!b.empty() && b[i] != 0.0) v.add(detail::upwind_abs_gradient(c, sign, nullptr), b[i]);
    out[i] = v.value;
  }
  return out;
}

inline GridFunction extremal_L(const GridFunction& u, int sign, const OperatorSpec& spec) {
  return extremal_L(u, sign, spec.ellipticity(), spec.drift_bound(), spec.stencil());
}

/// Discrete F[u] at interior nodes; zero on boundary nodes.
inline GridFunction apply_F(const OperatorSpec& spec, const GridFunction& u) {
  const auto& g = *u.grid();
  GridFunction out(u.grid());
  for (int i : g.interior()) out[i] = spec.evaluate(detail::ctx_at(g, u.values(), i)).value;
  return out;
}

/// Symmetric matrix field M(x) with mu_1 I <= M(x) <= mu_2 I.
struct MatrixField {
  Eigen::VectorXd m11, m12, m22;
  double mu1 = 1.0, mu2 = 1.0;

  /// M = mu I everywhere.
  static MatrixField scalar(const Grid& g, double mu) {
    MatrixField M;
    const auto n = static_cast<Eigen::Index>(g.size());
    M.m11 = Eigen::VectorXd::Constant(n, mu);
    M.m12 = Eigen::VectorXd::Zero(n);
    M.m22 = Eigen::VectorXd::Constant(n, g.dimension() == 2 ? mu : 0.0);
    M.mu1 = M.mu2 = mu;
    return M;
  }

  void validate(const Grid& g) const {
    if (!(mu1 > 0) || !(mu2 >= mu1)) throw ValidationError("matrix field: need 0 < mu1 <= mu2");
    const double tol = 1e-12 * std::max(1.0, mu2);
    for (int i : g.active()) {
      double lo, hi;
      if (g.dimension() == 1) {
        lo = hi = m11[i];
      } else {
        const double mean = 0.5 * (m11[i] + m22[i]);
        const double rad = std::hypot(0.5 * (m11[i] - m22[i]), m12[i]);
        lo = mean - rad;
        hi = mean + rad;
      }
      if (lo < mu1 - tol || hi > mu2 + tol)
        throw ValidationError("matrix field: M(x) outside [mu1 I, mu2 I] at node " + std::to_string(i));
    }
  }

  /// Whether M = mu I with a single constant mu; writes mu when it is.
  bool is_constant_scalar(const Grid& g, double* mu = nullptr) const {
    const int i0 = g.active()[0];
    const double v = m11[i0];
    for (int i : g.active()) {
      if (m11[i] != v || m12[i] != 0.0) return false;
      if (g.dimension() == 2 && m22[i] != v) return false;
    }
    if (mu) *mu = v;
    return true;
  }
};

/// Discretization of the quadratic gradient term <M Du, Du>.
/// `exponential` uses per-axis [(e^{sa}-1-sa) + (e^{sb}-1-sb)] / (s^2 h^2) with
/// a, b the differences to the two axis neighbours and s = M_kk / lambda_P;
/// `centered` squares centred differences.
enum class QuadraticScheme { exponential, centered };

namespace detail {

inline Lin quadratic_term(const NodeCtx& c, const MatrixField& M, QuadraticScheme scheme, double lambda_p) {
  const int i = c.node;
  Lin out;
  if (scheme == QuadraticScheme::centered) {
    Lin gx = centered(c, XP, XM, c.hx);
    if (c.dim == 1) {
      out.value = M.m11[i] * gx.value * gx.value;
      out.add(Lin{0.0, gx.d}, 2.0 * M.m11[i] * gx.value);
      out.value = M.m11[i] * gx.value * gx.value;
      return out;
    }
    Lin gy = centered(c, YP, YM, c.hy);
    const double px = gx.value, py = gy.value;
    const double qx = M.m11[i] * px + M.m12[i] * py, qy = M.m12[i] * px + M.m22[i] * py;
    out.add(gx, 2.0 * qx).add(gy, 2.0 * qy);
    out.value = px * qx + py * qy;
    return out;
  }
  auto axis_term = [&](int plus, int minus, double h, double mkk) {
    Lin t;
    if (mkk == 0.0) return t;
    const double s = mkk / lambda_p;
    const double a = c.at(plus) - c.at(C), b = c.at(minus) - c.at(C);
    const double w = mkk / (s * s * h * h);
    t.value = w * (expm1_minus_id(s * a) + expm1_minus_id(s * b));
    const double ea = std::expm1(s * a), eb = std::expm1(s * b);
    t.d[plus] = w * s * ea;
    t.d[minus] = w * s * eb;
    t.d[C] = -w * s * (ea + eb);
    return t;
  };
  out.add(axis_term(XP, XM, c.hx, M.m11[i]));
  if (c.dim == 2) {
    out.add(axis_term(YP, YM, c.hy, M.m22[i]));
    if (M.m12[i] != 0.0) {
      Lin gx = centered(c, XP, XM, c.hx), gy = centered(c, YP, YM, c.hy);
      Lin cross;
      cross.value = 2.0 * M.m12[i] * gx.value * gy.value;
      cross.add(Lin{0.0, gx.d}, 2.0 * M.m12[i] * gy.value).add(Lin{0.0, gy.d}, 2.0 * M.m12[i] * gx.value);
      cross.value = 2.0 * M.m12[i] * gx.value * gy.value;
      out.add(cross);
    }
  }
  return out;
}

}  // namespace detail

/// Full coefficient bundle of the Dirichlet problem
///   -F[u] = lambda c u + <M Du, Du> + h + k ctilde  in Omega,  u = 0 on the boundary.
/// The k ctilde forcing is inactive unless ctilde is set.
struct ProblemSpec {
  GridPtr grid;
  OperatorSpec op;
  MatrixField M;
  GridFunction c;
  GridFunction h;
  double lambda = 0.0;
  double k = 0.0;
  GridFunction ctilde;
  QuadraticScheme quad = QuadraticScheme::exponential;
  /// Closed-form sources of c and h, when known; used to resample on other grids.
  std::function<double(double, double)> c_source, h_source;

  void validate() const {
    if (!grid) throw ConfigError("problem: grid missing");
    op.validate();
    M.validate(*grid);
    if (c.empty() || h.empty()) throw ConfigError("problem: c and h are required");
    bool positive = false;
    for (int i : grid->active()) {
      if (c[i] < 0) throw ValidationError("problem: c must be >= 0 (node " + std::to_string(i) + ")");
      positive = positive || (c[i] > 0 && grid->is_interior(i));
    }
    if (!positive) throw ValidationError("problem: c must be positive somewhere in the interior");
    if (!std::isfinite(lambda)) throw ValidationError("problem: lambda must be finite");
  }

  /// h^- = max(-h, 0).
  GridFunction h_negative() const {
    GridFunction r(grid);
    for (int i : grid->active()) r[i] = std::max(-h[i], 0.0);
    return r;
  }
};

namespace detail {

/// Residual of the problem at an interior node with linearization; `scale`
/// receives 1 + the sum of the magnitudes of the individual terms, the
/// operator counted stencil entry by stencil entry.
inline Lin residual_local(const ProblemSpec& P, const NodeCtx& c, double* scale, int* policy) {
  const int i = c.node;
  Lin F = P.op.evaluate(c, policy);
  Lin Q = quadratic_term(c, P.M, P.quad, P.op.ellipticity().lo);
  Lin out = F;
  out.add(Q);
  const double lcu = P.lambda * P.c[i] * c.at(C);
  out.value += lcu + P.h[i];
  out.d[C] += P.lambda * P.c[i];
  double forcing = 0.0;
  if (!P.ctilde.empty()) {
    forcing = P.k * P.ctilde[i];
    out.value += forcing;
  }
  if (scale) {
    double f_abs = 0.0;
    for (int s = 0; s < kSlotCount; ++s)
      if (F.d[s] != 0.0) f_abs += std::abs(F.d[s] * c.at(s));
    *scale = 1.0 + f_abs + std::abs(lcu) + std::abs(Q.value) + std::abs(P.h[i]) + std::abs(forcing);
  }
  return out;
}

}  // namespace detail

/// Residual of the problem: F[u] + lambda c u + <M Du, Du> + h (+ k ctilde) at
/// interior nodes and u itself on boundary nodes.
inline GridFunction residual_P(const GridFunction& u, const ProblemSpec& P) {
  const auto& g = *u.grid();
  GridFunction out(u.grid());
  for (int i : g.interior()) out[i] = detail::residual_local(P, detail::ctx_at(g, u.values(), i), nullptr, nullptr).value;
  for (int i : g.boundary()) out[i] = u[i];
  return out;
}

/// <M Du, Du> as discretized by the problem's quadratic scheme, at interior nodes.
inline GridFunction quadratic_field(const GridFunction& u, const MatrixField& M, QuadraticScheme scheme,
                                    double lambda_p) {
  const auto& g = *u.grid();
  GridFunction out(u.grid());
  for (int i : g.interior())
    out[i] = detail::quadratic_term(detail::ctx_at(g, u.values(), i), M, scheme, lambda_p).value;
  return out;
}

/// Residual vector, its per-node scale and (optionally) the sparse Jacobian of
/// a nodal system. Boundary and masked rows are the identity (u = 0).
struct Linearization {
  Eigen::VectorXd residual;
  Eigen::VectorXd scale;
  Eigen::SparseMatrix<double> jacobian;
  std::vector<int> policy;

  /// max_i |r_i| / scale_i
  double relative_norm() const {
    double m = 0;
    for (Eigen::Index i = 0; i < residual.size(); ++i) m = std::max(m, std::abs(residual[i]) / scale[i]);
    return std::isfinite(m) ? m : std::numeric_limits<double>::infinity();
  }
  double raw_norm() const {
    const double m = residual.cwiseAbs().maxCoeff();
    return std::isfinite(m) ? m : std::numeric_limits<double>::infinity();
  }
};

namespace detail {

/// Assembles a nodal system. `local(ctx, scale*, policy*)` returns the Lin of
/// an interior node.
template <class LocalFn>
Linearization assemble(const Grid& g, const Eigen::VectorXd& u, LocalFn&& local, bool want_jacobian) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Linearization L;
  L.residual = Eigen::VectorXd::Zero(n);
  L.scale = Eigen::VectorXd::Ones(n);
  L.policy.assign(g.size(), 0);
  std::vector<Eigen::Triplet<double>> trips;
  if (want_jacobian) trips.reserve(g.interior().size() * (g.dimension() == 1 ? 3 : 9) + g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.is_interior(i)) {
      L.residual[static_cast<Eigen::Index>(i)] = u[static_cast<Eigen::Index>(i)];
      if (want_jacobian) trips.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
    }
  }
  for (int i : g.interior()) {
    NodeCtx c = ctx_at(g, u, i);
    double scale = 1.0;
    int policy = 0;
    Lin l = local(c, &scale, &policy);
    L.residual[i] = l.value;
    L.scale[i] = scale;
    L.policy[i] = policy;
    if (want_jacobian) {
      const auto& nb = g.neighbors(i);
      for (int s = 0; s < kSlotCount; ++s)
        if (l.d[s] != 0.0 && nb[s] >= 0) trips.emplace_back(i, nb[s], l.d[s]);
    }
  }
  if (want_jacobian) {
    L.jacobian.resize(n, n);
    L.jacobian.setFromTriplets(trips.begin(), trips.end());
  }
  return L;
}

}  // namespace detail

/// Residual and Jacobian of residual_P at u.
inline Linearization linearize_P(const Eigen::VectorXd& u, const ProblemSpec& P, bool want_jacobian = true) {
  return detail::assemble(
      *P.grid, u, [&](const detail::NodeCtx& c, double* s, int* p) { return detail::residual_local(P, c, s, p); },
      want_jacobian);
}

}  // namespace qgrowth
