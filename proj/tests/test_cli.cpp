#include <gtest/gtest.h>
#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = QGROWTH_CLI;
const std::string kScenarios = QGROWTH_SCENARIO_DIR;

int run(const std::string& args, const std::string& log) {
  const std::string cmd = "\"" + kCli + "\" " + args + " > \"" + log + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qgrowth_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Cli, MissingMu1ExitsWithConfigStatus) {
  const auto dir = scratch("missing");
  const auto log = (dir / "log.txt").string();
  EXPECT_EQ(run("solve --config " + kScenarios + "/missing-mu1.cfg --out " + (dir / "out").string(), log), 2);
  EXPECT_NE(slurp(log).find("problem.mu1"), std::string::npos) << slurp(log);
}

TEST(Cli, UnknownFlagAndMissingConfigFile) {
  const auto dir = scratch("flags");
  const auto log = (dir / "log.txt").string();
  EXPECT_EQ(run("solve --bogus 1", log), 2);
  EXPECT_EQ(run("branch --config " + (dir / "nope.cfg").string(), log), 2);
}

TEST(Cli, BranchOutputIsDeterministic) {
  const auto dir = scratch("determinism");
  for (const char* run_name : {"a", "b"}) {
    const auto out = (dir / run_name).string();
    ASSERT_EQ(run("branch --config " + kScenarios + "/fig1-h-negative.cfg --seed 7 --out " + out, out + ".log"), 0)
        << slurp(out + ".log");
  }
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    const auto other = dir / "b" / e.path().filename();
    ASSERT_TRUE(fs::exists(other)) << other;
    EXPECT_EQ(slurp(e.path()), slurp(other)) << e.path().filename();
    ++compared;
  }
  EXPECT_GE(compared, 5u);
}

TEST(Cli, SolveIsDeterministicForSeed) {
  const auto dir = scratch("solve");
  for (const char* run_name : {"a", "b"}) {
    const auto out = (dir / run_name).string();
    ASSERT_EQ(run("solve --config " + kScenarios + "/fig2-h-positive.cfg --seed 11 --out " + out, out + ".log"), 0)
        << slurp(out + ".log");
  }
  const auto a = slurp(dir / "a" / "solutions.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir / "b" / "solutions.csv"));
}

TEST(Cli, FoldScenarioHasOneFoldAndBranchHeader) {
  const auto dir = scratch("fig2");
  const auto out = (dir / "out").string();
  ASSERT_EQ(run("branch --config " + kScenarios + "/fig2-h-positive.cfg --out " + out, out + ".log"), 0);
  std::ifstream csv(dir / "out" / "branch.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "parameter_kind,parameter_value,arclength,sup_norm,max_u,min_u,probe_value,fold_flag,residual");
  int folds = 0, rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    ASSERT_EQ(cols.size(), 9u);
    folds += cols[7] == "1";
  }
  EXPECT_GT(rows, 10);
  EXPECT_EQ(folds, 1);
  EXPECT_TRUE(fs::exists(dir / "out" / "branch.svg"));
  EXPECT_NE(slurp(dir / "out" / "verification.log").find("status = pass"), std::string::npos);
}

TEST(Cli, VerifyWritesSummary) {
  const auto dir = scratch("verify");
  const auto out = (dir / "out").string();
  ASSERT_EQ(run("verify barriers --out " + out, out + ".log"), 0) << slurp(out + ".log");
  const auto json = slurp(dir / "out" / "verify_summary.json");
  EXPECT_NE(json.find("\"suite\": \"barriers\""), std::string::npos) << json;
  EXPECT_NE(json.find("\"failed\": 0"), std::string::npos) << json;
  EXPECT_NE(json.find("\"seed\""), std::string::npos);
  EXPECT_NE(run("verify no-such-suite --out " + out, out + ".log"), 0);
}

TEST(Cli, EnvironmentToleranceIsValidated) {
  const auto dir = scratch("env");
  const auto log = (dir / "log.txt").string();
  const std::string cmd = "QGROWTH_TOL=abc \"" + kCli + "\" eigen --config " + kScenarios +
                          "/fig1-h-negative.cfg --out " + (dir / "out").string() + " > " + log + " 2>&1";
  const int raw = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(raw), 2);
  EXPECT_NE(slurp(log).find("QGROWTH_TOL"), std::string::npos);
}
