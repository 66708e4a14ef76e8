#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qgrowth/error.hpp"

namespace qgrowth {

enum class Shape { interval, rectangle, disk };

enum class NodeKind : std::uint8_t { interior, boundary, masked };

/// Stencil slots of a node: centre, axis neighbours and the four diagonals.
/// PP is (+x,+y), PM is (+x,-y), MP is (-x,+y), MM is (-x,-y).
enum Slot : int { C = 0, XP, XM, YP, YM, PP, PM, MP, MM, kSlotCount };

using Neighbors = std::array<int, kSlotCount>;

/// Uniform tensor grid on an interval, a rectangle, or a disk (masked square).
///
/// Grids are immutable once built and are passed around as shared pointers,
/// so that grid functions can refer to the grid they live on.
class Grid {
 public:
  int dimension() const { return dim_; }
  Shape shape() const { return shape_; }

  /// Total node count, including masked nodes of a disk.
  std::size_t size() const { return kind_.size(); }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  /// Quadrature weight of one node (h^dim).
  double cell_measure() const { return dim_ == 1 ? hx_ : hx_ * hy_; }

  double x(std::size_t i) const { return x_[i]; }
  double y(std::size_t i) const { return y_[i]; }
  NodeKind kind(std::size_t i) const { return kind_[i]; }
  bool is_interior(std::size_t i) const { return kind_[i] == NodeKind::interior; }
  bool is_boundary(std::size_t i) const { return kind_[i] == NodeKind::boundary; }
  bool is_active(std::size_t i) const { return kind_[i] != NodeKind::masked; }

  std::span<const int> interior() const { return interior_; }
  std::span<const int> boundary() const { return boundary_; }
  std::span<const int> active() const { return active_; }

  /// Euclidean distance to the discrete boundary; 0 exactly on boundary nodes.
  double distance_to_boundary(std::size_t i) const { return dist_[i]; }

  /// Stencil neighbour indices of an interior node (-1 where the slot does not
  /// exist, e.g. the y slots of a 1D grid).
  const Neighbors& neighbors(std::size_t i) const { return nb_[i]; }

  /// Unit inward normal at a boundary node.
  std::array<double, 2> inward_normal(std::size_t i) const { return normal_[i]; }
  /// Active neighbour best aligned with the inward normal, and the distance to it.
  int inward_neighbor(std::size_t i) const { return inward_[i]; }
  double inward_step(std::size_t i) const { return inward_step_[i]; }

  /// Node nearest to the centroid of the domain (the default probe node).
  int centroid_node() const { return centroid_; }

  /// Index of the node closest to (px, py) among active nodes.
  int nearest_node(double px, double py = 0.0) const {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int i : active_) {
      double d = std::hypot(x_[i] - px, y_[i] - py);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    return best;
  }

  /// Description used in diagnostics and output headers.
  std::string describe() const {
    std::string s = shape_ == Shape::interval    ? "interval"
                    : shape_ == Shape::rectangle ? "rectangle"
                                                 : "disk";
    return s + " nx=" + std::to_string(nx_) + (dim_ == 2 ? " ny=" + std::to_string(ny_) : "");
  }

  // Domain extents as given at construction.
  double x_lo() const { return xlo_; }
  double x_hi() const { return xhi_; }
  double y_lo() const { return ylo_; }
  double y_hi() const { return yhi_; }
  double disk_radius() const { return radius_; }

 private:
  friend std::shared_ptr<const Grid> build_interval_grid(double, double, int);
  friend struct PlanarBuilder;

  void finalize();

  int dim_ = 1;
  Shape shape_ = Shape::interval;
  int nx_ = 0, ny_ = 1;
  double hx_ = 0, hy_ = 0;
  double xlo_ = 0, xhi_ = 0, ylo_ = 0, yhi_ = 0, radius_ = 0;
  std::vector<double> x_, y_, dist_;
  std::vector<NodeKind> kind_;
  std::vector<int> interior_, boundary_, active_;
  std::vector<Neighbors> nb_;
  std::vector<std::array<double, 2>> normal_;
  std::vector<int> inward_;
  std::vector<double> inward_step_;
  int centroid_ = 0;
};

using GridPtr = std::shared_ptr<const Grid>;

/// n+1 equally spaced nodes on [a, b]; the two endpoints are boundary nodes.
inline GridPtr build_interval_grid(double a, double b, int n) {
  if (!(a < b)) throw ConfigError("interval grid: need a < b");
  if (n < 3) throw ConfigError("interval grid: need n >= 3, got " + std::to_string(n));
  auto g = std::shared_ptr<Grid>(new Grid());
  g->dim_ = 1;
  g->shape_ = Shape::interval;
  g->nx_ = n + 1;
  g->ny_ = 1;
  g->hx_ = (b - a) / n;
  g->hy_ = 0.0;
  g->xlo_ = a;
  g->xhi_ = b;
  g->x_.resize(n + 1);
  g->y_.assign(n + 1, 0.0);
  g->kind_.assign(n + 1, NodeKind::interior);
  for (int i = 0; i <= n; ++i) g->x_[i] = i == n ? b : a + i * g->hx_;
  g->kind_[0] = g->kind_[n] = NodeKind::boundary;
  g->nb_.assign(n + 1, Neighbors{});
  for (int i = 0; i <= n; ++i) {
    g->nb_[i].fill(-1);
    g->nb_[i][C] = i;
    if (i > 0 && i < n) {
      g->nb_[i][XP] = i + 1;
      g->nb_[i][XM] = i - 1;
    }
  }
  g->dist_.resize(n + 1);
  for (int i = 0; i <= n; ++i) g->dist_[i] = std::min(g->x_[i] - a, b - g->x_[i]);
  g->dist_[0] = g->dist_[n] = 0.0;
  g->normal_.assign(n + 1, {0.0, 0.0});
  g->inward_.assign(n + 1, -1);
  g->inward_step_.assign(n + 1, 0.0);
  g->normal_[0] = {1.0, 0.0};
  g->normal_[n] = {-1.0, 0.0};
  g->inward_[0] = 1;
  g->inward_[n] = n - 1;
  g->inward_step_[0] = g->inward_step_[n] = g->hx_;
  g->finalize();
  return g;
}

/// Planar domain description for build_planar_grid.
struct PlanarDomain {
  Shape shape = Shape::rectangle;
  // rectangle extents
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  // disk centre and radius
  double cx = 0, cy = 0, radius = 1;

  static PlanarDomain rectangle(double x0, double x1, double y0, double y1) {
    PlanarDomain d;
    d.shape = Shape::rectangle;
    d.x0 = x0;
    d.x1 = x1;
    d.y0 = y0;
    d.y1 = y1;
    return d;
  }
  static PlanarDomain disk(double cx, double cy, double radius) {
    PlanarDomain d;
    d.shape = Shape::disk;
    d.cx = cx;
    d.cy = cy;
    d.radius = radius;
    return d;
  }
};

struct PlanarBuilder {
  static GridPtr build(const PlanarDomain& dom, int n);
};

/// Tensor grid with n cells per axis. Disks mask the nodes outside the closed
/// disk; an inside node missing any of its eight neighbours is a boundary node.
inline GridPtr build_planar_grid(const PlanarDomain& dom, int n) { return PlanarBuilder::build(dom, n); }

inline GridPtr PlanarBuilder::build(const PlanarDomain& dom, int n) {
  auto g = std::shared_ptr<Grid>(new Grid());
  g->dim_ = 2;
  g->shape_ = dom.shape;
  if (dom.shape == Shape::rectangle) {
    if (!(dom.x0 < dom.x1) || !(dom.y0 < dom.y1)) throw ConfigError("rectangle grid: degenerate extents");
    if (n < 3) throw ConfigError("rectangle grid: need n >= 3, got " + std::to_string(n));
    g->xlo_ = dom.x0;
    g->xhi_ = dom.x1;
    g->ylo_ = dom.y0;
    g->yhi_ = dom.y1;
  } else if (dom.shape == Shape::disk) {
    if (!(dom.radius > 0) || !std::isfinite(dom.radius)) throw ConfigError("disk grid: radius must be positive");
    if (n < 5) throw ConfigError("disk grid: need n >= 5, got " + std::to_string(n));
    g->xlo_ = dom.cx - dom.radius;
    g->xhi_ = dom.cx + dom.radius;
    g->ylo_ = dom.cy - dom.radius;
    g->yhi_ = dom.cy + dom.radius;
    g->radius_ = dom.radius;
  } else {
    throw ConfigError("planar grid: shape must be rectangle or disk");
  }
  const int m = n + 1;
  g->nx_ = g->ny_ = m;
  g->hx_ = (g->xhi_ - g->xlo_) / n;
  g->hy_ = (g->yhi_ - g->ylo_) / n;
  const std::size_t total = static_cast<std::size_t>(m) * m;
  g->x_.resize(total);
  g->y_.resize(total);
  g->kind_.assign(total, NodeKind::masked);
  auto idx = [m](int i, int j) { return j * m + i; };
  std::vector<char> inside(total, 0);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const int k = idx(i, j);
      g->x_[k] = i == n ? g->xhi_ : g->xlo_ + i * g->hx_;
      g->y_[k] = j == n ? g->yhi_ : g->ylo_ + j * g->hy_;
      if (dom.shape == Shape::rectangle) {
        inside[k] = 1;
      } else {
        inside[k] = std::hypot(g->x_[k] - dom.cx, g->y_[k] - dom.cy) <= dom.radius * (1.0 + 1e-12);
      }
    }
  }
  static constexpr std::array<std::array<int, 2>, kSlotCount> off = {
      {{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
  g->nb_.assign(total, Neighbors{});
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const int k = idx(i, j);
      auto& nb = g->nb_[k];
      nb.fill(-1);
      nb[C] = k;
      if (!inside[k]) continue;
      bool full = true;
      for (int s = 1; s < kSlotCount; ++s) {
        const int ii = i + off[s][0], jj = j + off[s][1];
        if (ii < 0 || jj < 0 || ii >= m || jj >= m || !inside[idx(ii, jj)]) {
          full = false;
          continue;
        }
        nb[s] = idx(ii, jj);
      }
      g->kind_[k] = full ? NodeKind::interior : NodeKind::boundary;
      if (!full) {
        nb.fill(-1);
        nb[C] = k;
      }
    }
  }
  g->normal_.assign(total, {0.0, 0.0});
  g->inward_.assign(total, -1);
  g->inward_step_.assign(total, 0.0);
  const double ccx = 0.5 * (g->xlo_ + g->xhi_), ccy = 0.5 * (g->ylo_ + g->yhi_);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const int k = idx(i, j);
      if (g->kind_[k] != NodeKind::boundary) continue;
      double nx = 0, ny = 0;
      if (dom.shape == Shape::rectangle) {
        nx = (i == 0) - (i == n);
        ny = (j == 0) - (j == n);
      } else {
        nx = ccx - g->x_[k];
        ny = ccy - g->y_[k];
      }
      const double len = std::hypot(nx, ny);
      if (len > 0) {
        nx /= len;
        ny /= len;
      }
      g->normal_[k] = {nx, ny};
      double best = -2.0;
      // interior stencil neighbours first, then the nearest interior node in a
      // 45 degree cone, any active neighbour otherwise
      for (int s = 1; s < kSlotCount; ++s) {
        const int ii = i + off[s][0], jj = j + off[s][1];
        if (ii < 0 || jj < 0 || ii >= m || jj >= m) continue;
        const int q = idx(ii, jj);
        if (!inside[q] || g->kind_[q] != NodeKind::interior) continue;
        const double dx = off[s][0] * g->hx_, dy = off[s][1] * g->hy_;
        const double step = std::hypot(dx, dy);
        const double align = (dx * nx + dy * ny) / step;
        if (align > best + 1e-12) {
          best = align;
          g->inward_[k] = q;
          g->inward_step_[k] = step;
        }
      }
      if (best < 0.5) {
        double near = std::numeric_limits<double>::infinity();
        for (int dj = -4; dj <= 4; ++dj)
          for (int di = -4; di <= 4; ++di) {
            const int ii = i + di, jj = j + dj;
            if (ii < 0 || jj < 0 || ii >= m || jj >= m) continue;
            const int q = idx(ii, jj);
            if (!inside[q] || g->kind_[q] != NodeKind::interior) continue;
            const double dx = di * g->hx_, dy = dj * g->hy_;
            const double step = std::hypot(dx, dy);
            if ((dx * nx + dy * ny) / step < std::sqrt(0.5)) continue;
            if (step < near - 1e-12) {
              near = step;
              best = (dx * nx + dy * ny) / step;
              g->inward_[k] = q;
              g->inward_step_[k] = step;
            }
          }
      }
      if (best < -1.0) {
        for (int s = 1; s < kSlotCount; ++s) {
          const int ii = i + off[s][0], jj = j + off[s][1];
          if (ii < 0 || jj < 0 || ii >= m || jj >= m) continue;
          const int q = idx(ii, jj);
          if (!inside[q]) continue;
          const double dx = off[s][0] * g->hx_, dy = off[s][1] * g->hy_;
          const double step = std::hypot(dx, dy);
          const double align = (dx * nx + dy * ny) / step;
          if (align > best + 1e-12) {
            best = align;
            g->inward_[k] = q;
            g->inward_step_[k] = step;
          }
        }
      }
    }
  }
  g->dist_.assign(total, 0.0);
  g->finalize();
  if (dom.shape == Shape::rectangle) {
    for (int k : g->active_) {
      if (g->kind_[k] == NodeKind::boundary) continue;
      g->dist_[k] = std::min({g->x_[k] - g->xlo_, g->xhi_ - g->x_[k], g->y_[k] - g->ylo_, g->yhi_ - g->y_[k]});
    }
  } else {
    for (int k : g->interior_) {
      double d = std::numeric_limits<double>::infinity();
      for (int b : g->boundary_) d = std::min(d, std::hypot(g->x_[k] - g->x_[b], g->y_[k] - g->y_[b]));
      g->dist_[k] = d;
    }
  }
  return g;
}

inline void Grid::finalize() {
  interior_.clear();
  boundary_.clear();
  active_.clear();
  for (std::size_t i = 0; i < kind_.size(); ++i) {
    if (kind_[i] == NodeKind::interior) interior_.push_back(static_cast<int>(i));
    if (kind_[i] == NodeKind::boundary) boundary_.push_back(static_cast<int>(i));
    if (kind_[i] != NodeKind::masked) active_.push_back(static_cast<int>(i));
  }
  if (interior_.empty()) throw ConfigError("grid has no interior nodes");
  const double cx = 0.5 * (xlo_ + xhi_), cy = dim_ == 2 ? 0.5 * (ylo_ + yhi_) : 0.0;
  double bd = std::numeric_limits<double>::infinity();
  for (int i : interior_) {
    const double d = std::hypot(x_[i] - cx, y_[i] - cy);
    if (d < bd - 1e-14) {
      bd = d;
      centroid_ = i;
    }
  }
}

}  // namespace qgrowth
