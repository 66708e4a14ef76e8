#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "qgrowth/runner.hpp"

namespace {

using namespace qgrowth;

struct Flags {
  std::string config;
  std::string out = "run";
  std::uint64_t seed = 20261018;
  int threads = 0;
  double tol = 0.0;
  std::string suite = "all";
};

// flag > environment > config
RunOptions resolve(const Flags& f) {
  const EnvOverrides env = read_env_overrides();
  RunOptions ro;
  ro.out_dir = f.out;
  ro.seed = f.seed;
  ro.threads = f.threads > 0 ? f.threads : env.threads.value_or(1);
  if (f.tol > 0) ro.tol = f.tol;
  else if (env.tol) ro.tol = env.tol;
  return ro;
}

Scenario scenario_for(const Flags& f) {
  if (f.config.empty()) throw ConfigError("--config is required for this command");
  return load_scenario(Config::load(f.config));
}

int run_verify(const Flags& f) {
  const RunOptions ro = resolve(f);
  VerifyOptions vo;
  vo.seed = ro.seed;
  vo.threads = ro.threads;
  const auto checks = run_suite(f.suite, vo);
  nlohmann::ordered_json summary;
  summary["suite"] = f.suite;
  summary["seed"] = ro.seed;
  int passed = 0;
  auto& arr = summary["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    nlohmann::ordered_json j;
    j["name"] = c.name;
    j["passed"] = c.passed;
    j["detail"] = c.detail;
    auto& m = j["metrics"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : c.metrics) m[k] = v;
    arr.push_back(std::move(j));
    passed += c.passed;
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << fmt_short(c.seconds) << " s) " << c.detail << '\n';
  }
  summary["total"] = checks.size();
  summary["passed"] = passed;
  summary["failed"] = static_cast<int>(checks.size()) - passed;
  std::filesystem::create_directories(ro.out_dir);
  write_text(detail::out_path(ro, "verify_summary.json"), summary.dump(2) + "\n");
  std::cout << passed << "/" << checks.size() << " checks passed; summary in "
            << detail::out_path(ro, "verify_summary.json") << '\n';
  return passed == static_cast<int>(checks.size()) ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuation, bounds and verification for fully nonlinear problems with quadratic gradient growth"};
  app.require_subcommand(1);
  Flags f;
  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", f.config, "scenario file");
    if (needs_config) c->required();
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--seed", f.seed, "random seed");
    sub->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--tol", f.tol, "solver tolerance")->check(CLI::PositiveNumber);
  };
  auto* solve = app.add_subcommand("solve", "all distinct solutions at solver.lambda");
  auto* branch = app.add_subcommand("branch", "solution branch in lambda, plus bounds");
  auto* homotopy = app.add_subcommand("homotopy-k", "auxiliary branch in k");
  auto* eigen = app.add_subcommand("eigen", "principal weighted eigenpair");
  auto* verify = app.add_subcommand("verify", "property suites");
  auto* oracle = app.add_subcommand("oracle-compare", "primary solver against the semilinear oracle");
  for (auto* s : {solve, branch, homotopy, eigen, oracle}) common(s, true);
  common(verify, false);
  std::string suites = "all";
  for (const auto& n : suite_names()) suites += ", " + n;
  verify->add_option("suite", f.suite, "one of: " + suites);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (verify->parsed()) return run_verify(f);
    const RunOptions ro = resolve(f);
    Scenario sc = scenario_for(f);
    int rc = kExitOk;
    if (solve->parsed()) rc = run_solve(std::move(sc), ro);
    else if (branch->parsed()) rc = run_branch(std::move(sc), ro);
    else if (homotopy->parsed()) rc = run_homotopy(std::move(sc), ro);
    else if (eigen->parsed()) rc = run_eigen(std::move(sc), ro);
    else if (oracle->parsed()) rc = run_oracle_compare(std::move(sc), ro);
    std::cout << (rc == kExitOk ? "pass" : "fail") << "; outputs in " << ro.out_dir << '\n';
    return rc;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UnsupportedError& e) {
    std::cerr << "unsupported: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
