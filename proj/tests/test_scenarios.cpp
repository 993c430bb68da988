#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <tuple>

#include "almostreg/scenario.hpp"

using namespace almostreg;

namespace {

std::filesystem::path scenario_dir() {
  if (const char* d = std::getenv("ALMOSTREG_SCENARIO_DIR")) return d;
  return std::filesystem::path("scenarios");
}

const char* kLinearOpen = R"({
  "id": "t.open",
  "kind": "regularity",
  "payload": {"op": "check", "property": "O",
              "map": {"domain": {"lo": [-1], "hi": [1], "step": 0.05}, "branches": ["2*x"]},
              "U": "all", "V": "all", "gamma": 0.25, "constant": 2},
  "expect": {"passed": true, "violation_count": 0}
})";

}  // namespace

TEST(Scenarios, ParseErrorCarriesLineAndColumn) {
  try {
    parse_scenarios("{\n  \"id\": \"x\",\n  \"kind\": ,\n}", "bad.json");
    FAIL();
  } catch (const ScenarioParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 11u);
    EXPECT_NE(std::string(e.what()).find("bad.json:3:11"), std::string::npos);
  }
}

TEST(Scenarios, SchemaErrorNamesTheField) {
  const std::string bad = R"({"id": "g", "kind": "regularity",
    "payload": {"op": "check", "property": "O", "map": {"pairs": [[0, 0]]},
                "U": "all", "V": "all", "gamma": -1, "constant": 1}})";
  try {
    parse_scenarios(bad);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("payload.gamma"), std::string::npos) << e.what();
  }
  try {
    parse_scenarios(R"({"id": "g", "kind": "nope", "payload": {"op": "x"}})");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("kind"), std::string::npos);
  }
  try {
    parse_scenarios(R"({"id": "g", "kind": "linear", "payload": {"op": "sur"}})");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("payload.A"), std::string::npos) << e.what();
  }
}

TEST(Scenarios, EmptySuitePasses) {
  const SuiteReport s = run_suite({});
  EXPECT_TRUE(s.all_passed());
  EXPECT_NE(emit_report(s, ReportFormat::text).find("summary: 0 scenarios"), std::string::npos);
}

TEST(Scenarios, ExpectationGrammar) {
  const json actual = json::parse(R"({"a": 1.0000000001, "b": [1, 2, {"c": "inf"}], "s": "x", "f": false})");
  EXPECT_TRUE(match_expectation(1.0, actual["a"], 1e-9));
  EXPECT_FALSE(match_expectation(1.1, actual["a"], 1e-9));
  EXPECT_TRUE(match_expectation(json::parse(R"({"value": 1.05, "tol": 0.1})"), actual["a"], 1e-9));
  EXPECT_TRUE(match_expectation(json::parse(R"({"min": 0.5, "max": 2})"), actual["a"], 1e-9));
  EXPECT_FALSE(match_expectation(json::parse(R"({"max": 0.5})"), actual["a"], 1e-9));
  EXPECT_TRUE(match_expectation(json::parse(R"([1, 2, {"c": "inf"}])"), actual["b"], 1e-9));
  EXPECT_FALSE(match_expectation(json::parse(R"([1, 2])"), actual["b"], 1e-9));
  EXPECT_TRUE(match_expectation("x", actual["s"], 1e-9));
  EXPECT_TRUE(match_expectation(false, actual["f"], 1e-9));
  EXPECT_FALSE(match_expectation(json(nullptr), actual["f"], 1e-9));
  ASSERT_NE(detail::resolve(actual, "b.2.c"), nullptr);
  EXPECT_EQ(detail::resolve(actual, "b.7"), nullptr);
}

TEST(Scenarios, PassingScenario) {
  const auto sc = parse_scenarios(kLinearOpen);
  const SuiteReport s = run_suite(sc);
  ASSERT_EQ(s.reports.size(), 1u);
  EXPECT_EQ(s.reports[0].status, RunStatus::pass);
  EXPECT_EQ(s.reports[0].expectations.size(), 2u);
}

TEST(Scenarios, FailingFixtureReportsWitnesses) {
  const auto sc = load_paths({scenario_dir() / "failing"});
  ASSERT_EQ(sc.size(), 1u);
  const SuiteReport s = run_suite(sc);
  EXPECT_FALSE(s.all_passed());
  const RunReport& r = s.reports[0];
  EXPECT_EQ(r.status, RunStatus::fail);
  const json& w = r.result.at("witnesses");
  ASSERT_FALSE(w.empty());
  // witnesses arrive in lexicographic order of (x, y, t, v)
  for (std::size_t k = 1; k < w.size(); ++k) {
    const auto key = [&](std::size_t i) {
      return std::make_tuple(w[i]["x"].get<double>(), w[i]["y"].get<double>(), w[i]["t"].get<double>(),
                             w[i]["v"].get<double>());
    };
    EXPECT_LE(key(k - 1), key(k));
  }
  const std::string text = emit_report(s, ReportFormat::text);
  EXPECT_NE(text.find("FAIL"), std::string::npos);
  EXPECT_NE(text.find("MISS"), std::string::npos);
}

TEST(Scenarios, ExpectErrorMatchesMessage) {
  const auto sc = parse_scenarios(R"({"id": "e", "kind": "ekeland",
    "payload": {"op": "two_constant", "cloud": [0, 1], "phi": [0, 5], "x": 1, "delta": 1, "r": 1},
    "expect_error": "inf phi + delta"})");
  const SuiteReport s = run_suite(sc);
  EXPECT_EQ(s.reports[0].status, RunStatus::pass) << s.reports[0].error;
}

TEST(Scenarios, UnreadableFileBecomesErrorScenario) {
  const auto tmp = std::filesystem::temp_directory_path() / "almostreg_broken.json";
  {
    std::ofstream(tmp) << "[ {";
  }
  const auto sc = load_paths({tmp});
  ASSERT_EQ(sc.size(), 1u);
  EXPECT_TRUE(sc[0].load_error.has_value());
  EXPECT_EQ(run_suite(sc).reports[0].status, RunStatus::error);
  std::filesystem::remove(tmp);
}

TEST(Scenarios, FixtureSuiteIsDeterministicAndRoundTrips) {
  const auto sc = load_paths({scenario_dir()});
  ASSERT_GT(sc.size(), 50u);
  const SuiteReport one = run_suite(sc, {.seed = 7, .jobs = 1, .tolerance_scale = 1.0});
  const SuiteReport many = run_suite(sc, {.seed = 7, .jobs = 4, .tolerance_scale = 1.0});
  EXPECT_TRUE(one.all_passed());
  const std::string a = emit_report(one, ReportFormat::machine);
  EXPECT_EQ(a, emit_report(many, ReportFormat::machine));
  for (std::size_t k = 1; k < one.reports.size(); ++k) EXPECT_LE(one.reports[k - 1].id, one.reports[k].id);
  const SuiteReport back = parse_reports(a);
  EXPECT_EQ(emit_report(back, ReportFormat::machine), a);
}

TEST(Scenarios, SeedsDependOnIdAndSuiteSeed) {
  EXPECT_EQ(scenario_seed(1, "a"), scenario_seed(1, "a"));
  EXPECT_NE(scenario_seed(1, "a"), scenario_seed(1, "b"));
  EXPECT_NE(scenario_seed(1, "a"), scenario_seed(2, "a"));
}

TEST(Scenarios, ToleranceScaleWidensMatches) {
  auto sc = parse_scenarios(R"({"id": "w", "kind": "linear", "payload": {"op": "sur", "A": [[3, 0], [0, 1]]},
    "expect": {"value": {"value": 1.001, "tol": 1e-4}}})");
  EXPECT_FALSE(run_suite(sc).all_passed());
  EXPECT_TRUE(run_suite(sc, {.seed = 0, .jobs = 1, .tolerance_scale = 20.0}).all_passed());
}
