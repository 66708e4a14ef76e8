#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qgrowth/bounds.hpp"
#include "qgrowth/continuation.hpp"

namespace qgrowth {

/// Round-trip text for a double.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline const char* kBranchHeader =
    "parameter_kind,parameter_value,arclength,sup_norm,max_u,min_u,probe_value,fold_flag,residual";

inline void write_branch_csv(std::ostream& out, const Branch& br) {
  out << kBranchHeader << "\n";
  const std::string kind = to_string(br.parameter);
  for (const auto& p : br.points)
    out << kind << ',' << fmt(p.parameter) << ',' << fmt(p.arclength) << ',' << fmt(p.sup_norm) << ','
        << fmt(p.max_u) << ',' << fmt(p.min_u) << ',' << fmt(p.probe_value) << ',' << (p.fold ? 1 : 0) << ','
        << fmt(p.residual) << "\n";
}

struct Snapshot {
  double parameter = 0.0;
  GridFunction solution;
};

/// One row per solution: index, parameter, then the nodal values.
inline void write_snapshots_csv(std::ostream& out, const std::vector<Snapshot>& snaps) {
  out << "row,parameter_value";
  if (!snaps.empty())
    for (std::size_t i = 0; i < snaps.front().solution.grid()->size(); ++i) out << ",u" << i;
  out << "\n";
  for (std::size_t r = 0; r < snaps.size(); ++r) {
    const auto& s = snaps[r];
    out << r << ',' << fmt(s.parameter);
    for (Eigen::Index i = 0; i < s.solution.values().size(); ++i) out << ',' << fmt(s.solution[static_cast<int>(i)]);
    out << "\n";
  }
}

inline void write_snapshots_csv(std::ostream& out, const Branch& br) {
  std::vector<Snapshot> snaps;
  snaps.reserve(br.points.size());
  for (const auto& p : br.points) snaps.push_back({p.parameter, p.solution});
  write_snapshots_csv(out, snaps);
}

inline std::vector<Snapshot> read_snapshots_csv(std::istream& in, const GridPtr& grid) {
  std::vector<Snapshot> out;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("snapshot file is empty");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    std::getline(ss, cell, ',');
    while (std::getline(ss, cell, ',')) vals.push_back(std::strtod(cell.c_str(), nullptr));
    if (vals.size() != grid->size() + 1)
      throw ConfigError("snapshot line " + std::to_string(lineno) + ": expected " + std::to_string(grid->size()) +
                        " nodal values");
    Snapshot s;
    s.parameter = vals[0];
    s.solution = GridFunction(grid);
    for (std::size_t i = 0; i < grid->size(); ++i) s.solution[static_cast<int>(i)] = vals[i + 1];
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_bound_csv(std::ostream& out, const std::vector<std::pair<std::string, BoundReport>>& reports) {
  out << "bound,window_lo,window_hi,points_coarse,points_fine,sup_negative_coarse,sup_negative_fine,"
         "sup_norm_coarse,sup_norm_fine,stability_ratio,covered,note\n";
  for (const auto& [name, r] : reports)
    out << name << ',' << fmt(r.window_lo) << ',' << fmt(r.window_hi) << ',' << r.points_coarse << ','
        << r.points_fine << ',' << fmt(r.sup_negative_coarse) << ',' << fmt(r.sup_negative_fine) << ','
        << fmt(r.sup_norm_coarse) << ',' << fmt(r.sup_norm_fine) << ',' << fmt(r.stability_ratio) << ','
        << (r.covered ? 1 : 0) << ",\"" << r.note << "\"\n";
}

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f4e9c";
  bool dashed = false;
};

struct Marker {
  double x = 0.0, y = 0.0;
  std::string label;
};

/// Line plot as a standalone SVG 1.1 document.
inline std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                            const std::vector<Series>& series, const std::vector<Marker>& markers = {}) {
  const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!(x0 < x1)) {
    x0 -= 1;
    x1 += 1;
  }
  if (!(y0 < y1)) {
    y0 -= 1;
    y1 += 1;
  }
  const double py = 0.05 * (y1 - y0);
  y0 -= py;
  y1 += py;
  auto X = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
  auto Y = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };
  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">"
    << title << "</text>\n";
  o << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n"
    << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\"/>\n"
    << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\"/>\n";
  if (x0 < 0 && x1 > 0)
    o << "<line x1=\"" << fmt_short(X(0)) << "\" y1=\"" << T << "\" x2=\"" << fmt_short(X(0)) << "\" y2=\"" << H - B
      << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"3,3\"/>\n";
  if (y0 < 0 && y1 > 0)
    o << "<line x1=\"" << L << "\" y1=\"" << fmt_short(Y(0)) << "\" x2=\"" << W - R << "\" y2=\"" << fmt_short(Y(0))
      << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"3,3\"/>\n";
  o << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + k * (x1 - x0) / 4, yv = y0 + k * (y1 - y0) / 4;
    o << "<text x=\"" << fmt_short(X(xv)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << fmt_short(xv)
      << "</text>\n"
      << "<text x=\"" << L - 6 << "\" y=\"" << fmt_short(Y(yv) + 4) << "\" text-anchor=\"end\">" << fmt_short(yv)
      << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n"
    << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (T + H - B) / 2 << ")\">" << ylabel << "</text>\n</g>\n";
  int li = 0;
  for (const auto& s : series) {
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.6\""
      << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) o << (i ? " " : "") << fmt_short(X(s.x[i])) << ',' << fmt_short(Y(s.y[i]));
    o << "\"/>\n";
    const double ly = T + 14 + 16 * li++;
    o << "<line x1=\"" << W - R - 150 << "\" y1=\"" << ly << "\" x2=\"" << W - R - 126 << "\" y2=\"" << ly
      << "\" stroke=\"" << s.color << "\" stroke-width=\"1.6\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "")
      << "/>\n<text x=\"" << W - R - 120 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << s.label << "</text>\n";
  }
  for (const auto& m : markers)
    o << "<circle cx=\"" << fmt_short(X(m.x)) << "\" cy=\"" << fmt_short(Y(m.y))
      << "\" r=\"4\" fill=\"#c0392b\"/>\n<text x=\"" << fmt_short(X(m.x) + 6) << "\" y=\"" << fmt_short(Y(m.y) - 6)
      << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#c0392b\">" << m.label << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

/// Bifurcation diagram: max u and the probe value against the parameter, folds marked.
inline std::string branch_svg(const Branch& br, const std::string& title) {
  Series mx{"max u", {}, {}, "#1f4e9c", false};
  Series pr{"u(probe)", {}, {}, "#2e8b57", true};
  std::vector<Marker> marks;
  for (const auto& p : br.points) {
    mx.x.push_back(p.parameter);
    mx.y.push_back(p.max_u);
    pr.x.push_back(p.parameter);
    pr.y.push_back(p.probe_value);
    if (p.fold) marks.push_back({p.parameter, p.max_u, "fold"});
  }
  return svg_plot(title, to_string(br.parameter), "u", {mx, pr}, marks);
}

/// Profile of 1D solutions, or the slice through the centroid row of 2D ones.
inline std::string profile_svg(const std::vector<std::pair<std::string, GridFunction>>& fns, const std::string& title) {
  static const char* colors[] = {"#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d35400", "#16a085"};
  std::vector<Series> ss;
  int k = 0;
  for (const auto& [label, u] : fns) {
    const auto& g = *u.grid();
    Series s{label, {}, {}, colors[k++ % 6], false};
    const double yc = g.dimension() == 2 ? g.y(g.centroid_node()) : 0.0;
    for (int i : g.active())
      if (g.dimension() == 1 || std::abs(g.y(i) - yc) < 1e-12) {
        s.x.push_back(g.x(i));
        s.y.push_back(u[i]);
      }
    ss.push_back(std::move(s));
  }
  return svg_plot(title, "x", "u", ss);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  f << text;
}

}  // namespace qgrowth
