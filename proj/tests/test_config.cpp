#include <gtest/gtest.h>

#include <cmath>

#include "qgrowth/scenario.hpp"

using namespace qgrowth;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Expression, Arithmetic) {
  EXPECT_DOUBLE_EQ(Expression::parse("1 + 2*3")(0), 7.0);
  EXPECT_DOUBLE_EQ(Expression::parse("-2^2")(0), -4.0);
  EXPECT_DOUBLE_EQ(Expression::parse("2^3^2")(0), 512.0);
  EXPECT_NEAR(Expression::parse("sin(2*pi*x)")(0.25), 1.0, 1e-15);
  EXPECT_NEAR(Expression::parse("exp(x)*cos(y) + abs(-2) + ln(1)")(1.0, 0.0), M_E + 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(Expression::parse("1.5e-1")(0), 0.15);
  EXPECT_FALSE(Expression::parse("0.5*pi").depends_on_position());
  EXPECT_TRUE(Expression::parse("1 + y").depends_on_position());
}

TEST(Expression, Errors) {
  EXPECT_THROW(Expression::parse("1 +"), ConfigError);
  EXPECT_THROW(Expression::parse("(1"), ConfigError);
  EXPECT_THROW(Expression::parse("foo(1)"), ConfigError);
  EXPECT_THROW(Expression::parse("1 2"), ConfigError);
}

TEST(Config, SectionsKeysAndComments) {
  const auto c = Config::parse("name = a  # trailing\n\n[grid]\nn = 2^5\n[op.m1]\na11 = 1\n[op.m2]\na11 = 2\n");
  EXPECT_EQ(c.section("").str("name"), "a");
  EXPECT_EQ(c.section("grid").integer("n"), 32);
  ASSERT_EQ(c.children("op").size(), 2u);
  EXPECT_EQ(c.children("op")[1]->name(), "op.m2");
  EXPECT_TRUE(c.optional("absent").entries().empty());
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_NE(error_of([] { Config::parse("[grid]\nn 3\n"); }).find("line 2"), std::string::npos);
  EXPECT_NE(error_of([] { Config::parse("[grid\n"); }).find("line 1"), std::string::npos);
  EXPECT_NE(error_of([] { Config::parse("[a]\nx = 1\nx = 2\n"); }).find("line 3"), std::string::npos);
  EXPECT_NE(error_of([] { Config::parse("[a]\n[a]\n"); }).find("duplicate section"), std::string::npos);
  const auto c = Config::parse("[a]\n\nx = sin(\n");
  EXPECT_NE(error_of([&] { c.section("a").real("x"); }).find("line 3"), std::string::npos);
  const auto d = Config::parse("[a]\nn = 2.5\nb = maybe\nk = x\n");
  EXPECT_FALSE(error_of([&] { d.section("a").integer("n"); }).empty());
  EXPECT_FALSE(error_of([&] { d.section("a").boolean("b", true); }).empty());
  EXPECT_NE(error_of([&] { d.section("a").real("k"); }).find("constant"), std::string::npos);
  EXPECT_NE(error_of([&] { d.section("a").only({"n"}); }).find("unknown key"), std::string::npos);
}

TEST(Scenario, MissingMu1IsNamed) {
  const std::string msg =
      error_of([] { load_scenario(Config::load(std::string(QGROWTH_SCENARIO_DIR) + "/missing-mu1.cfg")); });
  EXPECT_NE(msg.find("problem.mu1"), std::string::npos) << msg;
}

TEST(Scenario, BundledScenariosLoad) {
  for (const char* name : {"fig2-h-positive", "fig1-h-negative", "lower-bound", "disk-pucci", "hjb-rectangle"}) {
    const auto sc = load_scenario(Config::load(std::string(QGROWTH_SCENARIO_DIR) + "/" + name + ".cfg"));
    EXPECT_EQ(sc.name, name);
    EXPECT_NO_THROW(sc.problem.validate());
  }
}

TEST(Scenario, FieldsAreRead) {
  const auto sc = load_scenario(Config::load(std::string(QGROWTH_SCENARIO_DIR) + "/fig2-h-positive.cfg"));
  EXPECT_EQ(sc.n, 256);
  EXPECT_DOUBLE_EQ(sc.problem.lambda, -1.0);
  EXPECT_DOUBLE_EQ(sc.continuation.p_max, 8.0);
  EXPECT_DOUBLE_EQ(sc.continuation.ds, 0.05);
  EXPECT_DOUBLE_EQ(sc.problem.M.mu1, 1.0);
}

TEST(EnvOverrides, ParsedAndValidated) {
  ::setenv("QGROWTH_TOL", "1e-9", 1);
  ::setenv("QGROWTH_THREADS", "3", 1);
  auto e = read_env_overrides();
  EXPECT_DOUBLE_EQ(*e.tol, 1e-9);
  EXPECT_EQ(*e.threads, 3);
  ::setenv("QGROWTH_THREADS", "zero", 1);
  EXPECT_THROW(read_env_overrides(), ConfigError);
  ::unsetenv("QGROWTH_TOL");
  ::unsetenv("QGROWTH_THREADS");
  e = read_env_overrides();
  EXPECT_FALSE(e.tol.has_value());
  EXPECT_FALSE(e.threads.has_value());
}
