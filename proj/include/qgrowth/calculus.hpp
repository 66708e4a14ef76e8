#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "qgrowth/mesh.hpp"

namespace qgrowth {

/// Real values on the nodes of a grid. Masked nodes carry 0 and are ignored by
/// every norm and extremum.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(GridPtr grid, double fill = 0.0) : grid_(std::move(grid)) {
    values_ = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid_->size()), fill);
    zero_masked();
  }
  GridFunction(GridPtr grid, Eigen::VectorXd values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != static_cast<Eigen::Index>(grid_->size()))
      throw DomainError("grid function: value count " + std::to_string(values_.size()) + " != node count " +
                        std::to_string(grid_->size()));
    for (Eigen::Index i = 0; i < values_.size(); ++i)
      if (!std::isfinite(values_[i])) throw DomainError("grid function: non-finite value at node " + std::to_string(i));
    zero_masked();
  }

  /// Samples f(x, y) on every active node.
  static GridFunction sample(GridPtr grid, const std::function<double(double, double)>& f) {
    GridFunction g(grid);
    for (int i : grid->active()) g.values_[i] = f(grid->x(i), grid->y(i));
    return g;
  }

  const GridPtr& grid() const { return grid_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  double& operator[](std::size_t i) { return values_[static_cast<Eigen::Index>(i)]; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  bool empty() const { return !grid_; }

  double sup_norm() const {
    double m = 0;
    for (int i : grid_->active()) m = std::max(m, std::abs(values_[i]));
    return m;
  }
  double max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (int i : grid_->active()) m = std::max(m, values_[i]);
    return m;
  }
  double min() const {
    double m = std::numeric_limits<double>::infinity();
    for (int i : grid_->active()) m = std::min(m, values_[i]);
    return m;
  }
  double interior_max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (int i : grid_->interior()) m = std::max(m, values_[i]);
    return m;
  }
  double interior_min() const {
    double m = std::numeric_limits<double>::infinity();
    for (int i : grid_->interior()) m = std::min(m, values_[i]);
    return m;
  }
  double boundary_max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (int i : grid_->boundary()) m = std::max(m, values_[i]);
    return m;
  }
  /// Max-norm of the negative part, ||u^-||.
  double negative_part_norm() const {
    double m = 0;
    for (int i : grid_->active()) m = std::max(m, -values_[i]);
    return m;
  }
  bool all_finite() const { return values_.allFinite(); }

  GridFunction& operator+=(const GridFunction& o) {
    values_ += o.values_;
    return *this;
  }
  GridFunction& operator-=(const GridFunction& o) {
    values_ -= o.values_;
    return *this;
  }
  GridFunction& operator*=(double s) {
    values_ *= s;
    return *this;
  }
  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double s, GridFunction a) { return a *= s; }
  friend GridFunction operator*(GridFunction a, double s) { return a *= s; }

  /// Pointwise product (used for weights such as c*u).
  friend GridFunction pointwise(const GridFunction& a, const GridFunction& b) {
    GridFunction r(a.grid_);
    r.values_ = a.values_.cwiseProduct(b.values_);
    return r;
  }

  /// Sets boundary values to zero (homogeneous Dirichlet data).
  void zero_boundary() {
    for (int i : grid_->boundary()) values_[i] = 0.0;
  }

 private:
  void zero_masked() {
    for (std::size_t i = 0; i < grid_->size(); ++i)
      if (!grid_->is_active(i)) values_[static_cast<Eigen::Index>(i)] = 0.0;
  }

  GridPtr grid_;
  Eigen::VectorXd values_;
};

/// A field defined on the interior nodes only, stored in grid().interior() order.
template <class T>
struct InteriorField {
  std::vector<int> nodes;
  std::vector<T> values;
};

/// Discrete L^p norm with quadrature weight h^dim over active nodes.
inline double lp_norm(const GridFunction& u, double p) {
  const auto& g = *u.grid();
  double s = 0;
  for (int i : g.active()) s += std::pow(std::abs(u[i]), p);
  return std::pow(s * g.cell_measure(), 1.0 / p);
}

/// Centred first differences per axis at interior nodes.
inline InteriorField<Eigen::Vector2d> gradient_centered(const GridFunction& u) {
  const auto& g = *u.grid();
  InteriorField<Eigen::Vector2d> out;
  for (int i : g.interior()) {
    const auto& nb = g.neighbors(i);
    Eigen::Vector2d d = Eigen::Vector2d::Zero();
    d[0] = (u[nb[XP]] - u[nb[XM]]) / (2.0 * g.hx());
    if (g.dimension() == 2) d[1] = (u[nb[YP]] - u[nb[YM]]) / (2.0 * g.hy());
    out.nodes.push_back(i);
    out.values.push_back(d);
  }
  return out;
}

/// Centred second differences; the mixed term uses the four-point cross formula.
/// In 1D only the (0,0) entry is populated.
inline InteriorField<Eigen::Matrix2d> hessian_centered(const GridFunction& u) {
  const auto& g = *u.grid();
  InteriorField<Eigen::Matrix2d> out;
  const double hx2 = g.hx() * g.hx();
  for (int i : g.interior()) {
    const auto& nb = g.neighbors(i);
    Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
    H(0, 0) = (u[nb[XP]] - 2.0 * u[i] + u[nb[XM]]) / hx2;
    if (g.dimension() == 2) {
      const double hy2 = g.hy() * g.hy();
      H(1, 1) = (u[nb[YP]] - 2.0 * u[i] + u[nb[YM]]) / hy2;
      H(0, 1) = H(1, 0) = (u[nb[PP]] - u[nb[PM]] - u[nb[MP]] + u[nb[MM]]) / (4.0 * g.hx() * g.hy());
    }
    out.nodes.push_back(i);
    out.values.push_back(H);
  }
  return out;
}

/// Monotone upwind approximation of |Du| at an interior node.
/// sign > 0 approximates +|Du| (non-decreasing in the neighbours), sign < 0
/// returns the magnitude whose negative approximates -|Du| monotonically.
inline double upwind_gradient_norm(const GridFunction& u, int node, int sign) {
  const auto& g = *u.grid();
  const auto& nb = g.neighbors(node);
  auto axis = [&](int plus, int minus, double h) {
    const double fwd = (u[plus] - u[node]) / h;
    const double bwd = (u[node] - u[minus]) / h;
    return sign > 0 ? std::max({fwd, -bwd, 0.0}) : std::min({fwd, -bwd, 0.0});
  };
  double s = 0;
  const double ax = axis(nb[XP], nb[XM], g.hx());
  s += ax * ax;
  if (g.dimension() == 2) {
    const double ay = axis(nb[YP], nb[YM], g.hy());
    s += ay * ay;
  }
  return std::sqrt(s);
}

/// Spectrum of the Hessian of a radial function u(x) = phi(|x - x0|) in R^n:
/// phi'(r)/r with multiplicity n-1, then phi''(r).
inline std::vector<double> radial_hessian_spectrum(double phi_prime, double phi_second, double r, int n) {
  if (!(r > 0)) throw DomainError("radial_hessian_spectrum: r must be positive");
  if (n < 1) throw DomainError("radial_hessian_spectrum: dimension must be >= 1");
  std::vector<double> spec(static_cast<std::size_t>(n - 1), phi_prime / r);
  spec.push_back(phi_second);
  return spec;
}

}  // namespace qgrowth
