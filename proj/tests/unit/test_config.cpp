#include <gtest/gtest.h>

#include <spikelab/report.hpp>

#include <filesystem>

using namespace spikelab;

namespace {

std::string error_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigurationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, EmptyDocumentGivesDefaults) {
  const RunConfig c = parse_config(json::object());
  EXPECT_EQ(c.n, 4);
  EXPECT_EQ(c.pattern.m(), 1);
  EXPECT_EQ(c.center.size(), 4);
  EXPECT_EQ(c.radius, 1.0);
  EXPECT_TRUE(c.studies.empty());
  EXPECT_EQ(c.lambda_ladder.size(), 6u);
}

TEST(Config, ReadsEverySection) {
  const json j = json::parse(R"({
    "dimension": 5,
    "domain": {"center": [0, 0, 0, 0, 1], "radius": 2},
    "pattern": {"gamma": [1, -1]},
    "epsilon_ladder": [1e-4, 1e-3],
    "lambda_ladder": [10, 20, 40, 80],
    "quadrature": {"rel_tol": 1e-8, "max_level": 4, "backend": "mc", "mc_samples": 5000, "master_seed": 9},
    "search": {"collinear": true, "grid": 8, "seed": 3},
    "thresholds": {"tau": 0.2},
    "studies": ["norm", {"id": "pair", "ratio": 1.5, "thresholds": {"pair_rel_tol": 0.1}}],
    "build": {"eps": 0.001, "grid": 11},
    "landscape": {"spike": 1, "grid": 5},
    "output": "elsewhere"
  })");
  const RunConfig c = parse_config(j);
  EXPECT_EQ(c.n, 5);
  EXPECT_EQ(c.center(4), 1.0);
  EXPECT_EQ(c.radius, 2.0);
  EXPECT_EQ(c.pattern.gamma, (std::vector<int>{1, -1}));
  EXPECT_EQ(c.plan.backend, BackendChoice::monte_carlo);
  EXPECT_EQ(c.plan.mc.n_samples, 5000u);
  EXPECT_EQ(c.plan.mc.master_seed, 9u);
  EXPECT_EQ(c.plan.quad.max_level, 4);
  EXPECT_TRUE(c.search.collinear);
  EXPECT_EQ(c.search.seed, 3u);
  EXPECT_EQ(c.thresholds.tau, 0.2);
  ASSERT_EQ(c.studies.size(), 2u);
  EXPECT_EQ(c.studies[1].ratio, 1.5);
  EXPECT_EQ(c.build.grid, 11);
  EXPECT_EQ(c.landscape.spike, 1);
  EXPECT_EQ(c.output, "elsewhere");
}

TEST(Config, UnknownKeysReportTheirPath) {
  EXPECT_EQ(error_of({{"bogus", 1}}), "bogus: unknown key");
  EXPECT_EQ(error_of({{"quadrature", {{"tolerance", 1}}}}), "quadrature.tolerance: unknown key");
  EXPECT_EQ(error_of({{"studies", {"norm", {{"id", "pair"}, {"spacing", 1}}}}}), "studies[1].spacing: unknown key");
  EXPECT_EQ(error_of({{"studies", {{{"id", "norm"}, {"thresholds", {{"slack", 1}}}}}}}),
            "studies[0].thresholds.slack: unknown key");
}

TEST(Config, TypeAndRangeErrors) {
  EXPECT_EQ(error_of({{"dimension", "four"}}), "dimension: expected an integer");
  EXPECT_EQ(error_of({{"dimension", 2}}), "dimension: must lie in [3, 12]");
  EXPECT_EQ(error_of({{"domain", {{"radius", -1}}}}), "domain.radius: must be positive");
  EXPECT_EQ(error_of({{"domain", {{"center", {0, 0}}}}}), "domain.center: expected 4 coordinates");
  EXPECT_EQ(error_of({{"pattern", {{"gamma", {1, 2}}}}}), "pattern.gamma[1]: expected +1 or -1");
  EXPECT_EQ(error_of({{"epsilon_ladder", {1e-3, 1e-4}}}), "epsilon_ladder: must be strictly increasing");
  EXPECT_EQ(error_of({{"epsilon_ladder", {1e-3, 0.5}}}), "epsilon_ladder: entries must lie in (0, 1/e)");
  EXPECT_EQ(error_of({{"quadrature", {{"backend", "simpson"}}}}), "quadrature.backend: expected auto, axisym or mc");
  EXPECT_EQ(error_of({{"quadrature", {{"master_seed", -1}}}}), "quadrature.master_seed: expected a non-negative integer");
  EXPECT_EQ(error_of({{"studies", {"lemma"}}}), "studies[0].id: unknown study 'lemma'");
  EXPECT_EQ(error_of({{"thresholds", {{"tau", 1.5}}}}), "thresholds.tau: must lie in (0, 1)");
  EXPECT_EQ(error_of({{"landscape", {{"spike", 3}}}}), "landscape.spike: must index a spike of the pattern");
  EXPECT_EQ(error_of(json::array()), "config: expected an object");
}

TEST(Config, Overrides) {
  json doc = json::object();
  apply_override(doc, "quadrature.rel_tol=1e-8");
  apply_override(doc, "output=run7");
  apply_override(doc, "pattern.gamma=[1,-1]");
  EXPECT_EQ(doc["quadrature"]["rel_tol"], 1e-8);
  EXPECT_EQ(doc["output"], "run7");
  const RunConfig c = parse_config(doc);
  EXPECT_EQ(c.plan.quad.rel_tol, 1e-8);
  EXPECT_EQ(c.pattern.m(), 2);
  EXPECT_THROW(apply_override(doc, "novalue"), ConfigurationError);
  EXPECT_THROW(apply_override(doc, "a..b=1"), ConfigurationError);
  EXPECT_THROW(apply_override(doc, "output.x=1"), ConfigurationError);
}

TEST(Config, HashIsCanonical) {
  const json a = json::parse(R"({"dimension": 4, "build": {"eps": 1e-4, "grid": 5}})");
  const json b = json::parse(R"({"build": {"grid": 5, "eps": 1e-4}, "dimension": 4})");
  const json c = json::parse(R"({"build": {"grid": 6, "eps": 1e-4}, "dimension": 4})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(c));
  EXPECT_EQ(config_hash(a).size(), 16u);
  // FNV-1a reference values
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Config, SampleConfigsParse) {
  const std::filesystem::path dir = SPIKELAB_CONFIG_DIR;
  int count = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(parse_config(load_json_file(e.path().string()))) << e.path();
    ++count;
  }
  EXPECT_GE(count, 2);
}

TEST(Report, EmptyStudyList) {
  const RunConfig c = parse_config(json::object());
  const auto recs = run_studies(c);
  EXPECT_TRUE(recs.empty());
  const json r = verify_report(recs, "00");
  EXPECT_TRUE(r["studies"].empty());
  EXPECT_FALSE(r["failed"].get<bool>());
  EXPECT_NE(summary_markdown(recs, "00").find("No studies configured."), std::string::npos);
}

TEST(Report, StudyJsonShape) {
  const RunConfig c = parse_config(json::parse(R"({"studies": [{"id": "loglog", "U": [2]}]})"));
  const auto recs = run_studies(c);
  ASSERT_EQ(recs.size(), 1u);
  const json j = verify_report(recs, "ab")["studies"][0];
  for (const char* k : {"study_id", "config", "points", "fit", "status"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["status"], "pass");
  EXPECT_EQ(j["config"]["U"], 2.0);
  EXPECT_EQ(j["points"].size(), 6u);
}

TEST(Report, FittedStudyCarriesExponent) {
  const RunConfig c = parse_config(json::parse(R"({"studies": ["norm"]})"));
  const auto recs = run_studies(c);
  const json j = verify_report(recs, "ab")["studies"][0];
  EXPECT_NEAR(j["fit"]["exponent"].get<double>(), -4.0, 0.05);
  EXPECT_TRUE(j["fit"].contains("r2"));
  const std::string md = summary_markdown(recs, "ab");
  EXPECT_NE(md.find("| norm | \\|P delta\\|^2 |"), std::string::npos);
}

TEST(Report, PerStudyThresholdOverride) {
  const RunConfig c =
      parse_config(json::parse(R"({"studies": [{"id": "norm", "thresholds": {"coefficient_tol": 1e-9}}, "norm"]})"));
  const auto recs = run_studies(c);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].study.status, StudyStatus::fail);
  EXPECT_EQ(recs[1].study.status, StudyStatus::pass);
  EXPECT_TRUE(any_failed(recs));
}

TEST(Report, MissingCriticalPointFailsGradientStudies) {
  const RunConfig c = parse_config(json::parse(R"({"pattern": {"gamma": [1, 1]}, "search": {"collinear": true},
                                                   "studies": ["gradient"]})"));
  const auto recs = run_studies(c);
  ASSERT_EQ(recs.size(), 3u);
  for (const auto& r : recs) EXPECT_EQ(r.study.status, StudyStatus::fail);
}
