#pragma once

#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "qgrowth/config.hpp"
#include "qgrowth/continuation.hpp"

namespace qgrowth {

struct SolveSettings {
  double lambda = 0.0;
  int seeds = 8;
  double amplitude_max = 64.0;
};

struct HomotopySettings {
  bool enabled = false;
  double lambda = 0.0;
  double k_min = 0.0, k_max = 1.0;
  double Lambda2 = 1.0;
  /// negative: twice the largest ||u^-|| seen on the lambda branch over [0, Lambda2]
  double C0 = -1.0;
  double ds = 0.01;
};

struct BoundSettings {
  bool enabled = false;
  double Lambda1 = 0.0, Lambda2 = 1.0;
  int coarse_n = 0;
};

struct OracleSettings {
  int refine = 4;
  std::vector<double> lambdas;
};

/// Everything a run needs, built from a configuration at one resolution.
struct Scenario {
  Config config;
  std::string name;
  int n = 0;
  ProblemSpec problem;
  Parameter parameter = Parameter::lambda;
  ContinuationOptions continuation;
  SolveSettings solve;
  HomotopySettings homotopy;
  BoundSettings bounds;
  OracleSettings oracle;
  double tol = 1e-10;
  int max_iter = 200;
  double eigen_tol = 1e-9;
};

namespace detail {

inline const std::set<std::string> kMemberKeys = {"a11", "a12", "a22", "b1", "b2", "d0", "group"};

inline LinearMember member_from(const ConfigSection& s, const GridPtr& g, double lo) {
  LinearMember m;
  auto field = [&](const char* key, const std::string& fallback) {
    return s.expr(key, fallback).sample(g).values();
  };
  m.a11 = field("a11", std::to_string(lo));
  m.a12 = g->dimension() == 2 ? field("a12", "0") : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g->size()));
  m.a22 = g->dimension() == 2 ? field("a22", std::to_string(lo))
                              : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g->size()));
  m.b1 = field("b1", "0");
  m.b2 = g->dimension() == 2 ? field("b2", "0") : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g->size()));
  m.d0 = field("d0", "0");
  return m;
}

inline GridPtr grid_from(const ConfigSection& s, int n) {
  s.only({"domain", "n", "x_min", "x_max", "y_min", "y_max", "center_x", "center_y", "radius"});
  const std::string dom = s.str("domain");
  if (dom == "interval") return build_interval_grid(s.real("x_min", 0.0), s.real("x_max", 1.0), n);
  if (dom == "rectangle")
    return build_planar_grid(
        PlanarDomain::rectangle(s.real("x_min", 0.0), s.real("x_max", 1.0), s.real("y_min", 0.0), s.real("y_max", 1.0)), n);
  if (dom == "disk")
    return build_planar_grid(PlanarDomain::disk(s.real("center_x", 0.0), s.real("center_y", 0.0), s.real("radius")), n);
  throw ConfigError(s.where("domain") + ": 'grid.domain' must be interval, rectangle or disk");
}

inline OperatorSpec operator_from(const Config& cfg, const GridPtr& g) {
  const auto& s = cfg.section("operator");
  s.only({"family", "ellipticity_min", "ellipticity_max", "drift", "zero_order", "stencil", "a11", "a12", "a22", "b1",
          "b2", "d0"});
  Ellipticity e{s.real("ellipticity_min", 1.0), s.real("ellipticity_max", 1.0)};
  try {
    e.validate();
  } catch (const Error& err) {
    throw ConfigError("line " + std::to_string(s.line()) + ": [operator] " + err.what());
  }
  GridFunction drift = s.has("drift") ? s.expr("drift").sample(g) : GridFunction();
  GridFunction zero = s.has("zero_order") ? s.expr("zero_order").sample(g) : GridFunction();
  const std::string fam = s.str("family");
  if (fam == "pucci_plus" || fam == "pucci_minus") {
    const std::string st = s.str("stencil", "eigen");
    if (st != "eigen" && st != "rotated") throw ConfigError(s.where("stencil") + ": 'operator.stencil' must be eigen or rotated");
    return OperatorSpec::pucci(fam == "pucci_plus" ? OperatorKind::pucci_plus : OperatorKind::pucci_minus, g, e, drift,
                               zero, st == "eigen" ? PucciStencil::eigen : PucciStencil::rotated);
  }
  if (fam == "laplacian") return OperatorSpec::laplacian(g, e);
  if (fam == "linear") return OperatorSpec::linear(g, e, member_from(s, g, e.lo), drift, zero);
  const auto members = cfg.children("operator.member");
  if (members.empty()) throw ConfigError("operator family '" + fam + "' needs at least one [operator.member.<name>] section");
  if (fam == "hjb") {
    std::vector<LinearMember> fam_members;
    for (const auto* m : members) {
      m->only(kMemberKeys);
      fam_members.push_back(member_from(*m, g, e.lo));
    }
    return OperatorSpec::hjb(g, e, std::move(fam_members), drift, zero);
  }
  if (fam == "isaacs") {
    std::map<long long, std::vector<LinearMember>> groups;
    for (const auto* m : members) {
      m->only(kMemberKeys);
      groups[m->integer("group")].push_back(member_from(*m, g, e.lo));
    }
    std::vector<std::vector<LinearMember>> out;
    for (auto& [k, v] : groups) out.push_back(std::move(v));
    return OperatorSpec::isaacs(g, e, std::move(out), drift, zero);
  }
  throw ConfigError(s.where("family") +
                    ": 'operator.family' must be one of laplacian, linear, pucci_plus, pucci_minus, hjb, isaacs");
}

inline std::vector<double> real_list(const ConfigSection& s, const std::string& key) {
  std::vector<double> out;
  if (!s.has(key)) return out;
  std::stringstream ss(s.str(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const Expression e = Expression::parse(item);
    if (e.depends_on_position()) throw ConfigError(s.where(key) + ": list entries must be constants");
    out.push_back(e(0, 0));
  }
  return out;
}

}  // namespace detail

/// Builds the scenario at resolution n (the configured one when n <= 0).
inline Scenario load_scenario(const Config& cfg, int n = 0) {
  Scenario sc;
  sc.config = cfg;
  const auto& top = cfg.optional("");
  top.only({"name"});
  sc.name = top.str("name", "scenario");

  const auto& gs = cfg.section("grid");
  sc.n = n > 0 ? n : static_cast<int>(gs.integer("n"));
  const GridPtr g = detail::grid_from(gs, sc.n);

  const auto& ps = cfg.section("problem");
  ps.only({"c", "h", "mu1", "mu2", "m11", "m12", "m22", "lambda", "k", "quadratic"});
  const double mu1 = ps.real("mu1");
  const double mu2 = ps.real("mu2", mu1);
  ProblemSpec& P = sc.problem;
  P.grid = g;
  P.op = detail::operator_from(cfg, g);
  P.M = MatrixField::scalar(*g, mu1);
  P.M.mu2 = mu2;
  if (ps.has("m11")) P.M.m11 = ps.expr("m11").sample(g).values();
  if (ps.has("m12") && g->dimension() == 2) P.M.m12 = ps.expr("m12").sample(g).values();
  if (ps.has("m22") && g->dimension() == 2) P.M.m22 = ps.expr("m22").sample(g).values();
  const Expression c = ps.expr("c"), h = ps.expr("h");
  P.c = c.sample(g);
  P.h = h.sample(g);
  P.c_source = [c](double x, double y) { return c(x, y); };
  P.h_source = [h](double x, double y) { return h(x, y); };
  P.lambda = ps.real("lambda", 0.0);
  P.k = ps.real("k", 0.0);
  const std::string q = ps.str("quadratic", "exponential");
  if (q != "exponential" && q != "centered")
    throw ConfigError(ps.where("quadratic") + ": 'problem.quadratic' must be exponential or centered");
  P.quad = q == "exponential" ? QuadraticScheme::exponential : QuadraticScheme::centered;
  try {
    P.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("[problem] ") + e.what());
  }

  const auto& ss = cfg.optional("solver");
  ss.only({"tol", "max_iter", "seeds", "amplitude_max", "lambda", "eigen_tol"});
  sc.tol = ss.real("tol", g->dimension() == 1 ? 1e-10 : 1e-8);
  sc.max_iter = static_cast<int>(ss.integer("max_iter", 200));
  sc.solve.lambda = ss.real("lambda", P.lambda);
  sc.solve.seeds = static_cast<int>(ss.integer("seeds", 8));
  sc.solve.amplitude_max = ss.real("amplitude_max", 64.0);
  sc.eigen_tol = ss.real("eigen_tol", 1e-9);
  if (!(sc.tol > 0)) throw ConfigError("'solver.tol' must be positive");
  if (sc.solve.seeds < 1) throw ConfigError("'solver.seeds' must be at least 1");

  const auto& cs = cfg.optional("continuation");
  cs.only({"parameter_min", "parameter_max", "ds", "ds_min", "ds_max", "norm_cap", "fold_ds", "direction", "probe_x",
           "probe_y", "max_points"});
  auto& o = sc.continuation;
  o.p_min = cs.real("parameter_min", P.lambda);
  o.p_max = cs.real("parameter_max", P.lambda + 1.0);
  o.ds = cs.real("ds", 0.05);
  o.ds_min = cs.real("ds_min", 1e-7);
  o.ds_max = cs.real("ds_max", 2.0);
  o.norm_cap = cs.real("norm_cap", 1e3);
  o.fold_ds = cs.real("fold_ds", 1e-3);
  o.direction = static_cast<int>(cs.integer("direction", 1));
  o.max_points = static_cast<int>(cs.integer("max_points", 50000));
  if (o.direction != 1 && o.direction != -1) throw ConfigError("'continuation.direction' must be 1 or -1");
  if (!(o.p_min < o.p_max)) throw ConfigError("'continuation.parameter_min' must be below 'continuation.parameter_max'");
  if (cs.has("probe_x")) o.probe_node = g->nearest_node(cs.real("probe_x"), cs.real("probe_y", 0.0));
  o.tol = sc.tol;

  const auto& hs = cfg.optional("homotopy");
  hs.only({"lambda", "k_min", "k_max", "Lambda2", "C0", "ds"});
  sc.homotopy.enabled = cfg.has("homotopy");
  if (sc.homotopy.enabled) {
    sc.homotopy.lambda = hs.real("lambda");
    sc.homotopy.k_min = hs.real("k_min", 0.0);
    sc.homotopy.k_max = hs.real("k_max", 1.0);
    sc.homotopy.Lambda2 = hs.real("Lambda2");
    sc.homotopy.C0 = hs.real("C0", -1.0);
    sc.homotopy.ds = hs.real("ds", 0.01);
  }

  const auto& bs = cfg.optional("bounds");
  bs.only({"Lambda1", "Lambda2", "coarse_n"});
  sc.bounds.enabled = cfg.has("bounds");
  if (sc.bounds.enabled) {
    sc.bounds.Lambda1 = bs.real("Lambda1", 0.0);
    sc.bounds.Lambda2 = bs.real("Lambda2");
    sc.bounds.coarse_n = static_cast<int>(bs.integer("coarse_n", std::max(3, sc.n / 2)));
  }

  const auto& os = cfg.optional("oracle");
  os.only({"refine", "lambdas"});
  sc.oracle.refine = static_cast<int>(os.integer("refine", 4));
  sc.oracle.lambdas = detail::real_list(os, "lambdas");
  return sc;
}

/// Tolerance and thread overrides from the environment.
struct EnvOverrides {
  std::optional<double> tol;
  std::optional<int> threads;
};

inline EnvOverrides read_env_overrides() {
  EnvOverrides e;
  if (const char* t = std::getenv("QGROWTH_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(t, &end);
    if (end == t || *end != '\0' || !(v > 0)) throw ConfigError("QGROWTH_TOL must be a positive number");
    e.tol = v;
  }
  if (const char* t = std::getenv("QGROWTH_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(t, &end, 10);
    if (end == t || *end != '\0' || v < 1) throw ConfigError("QGROWTH_THREADS must be a positive integer");
    e.threads = static_cast<int>(v);
  }
  return e;
}

}  // namespace qgrowth
