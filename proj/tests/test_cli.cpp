#include <algorithm>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "repgap/cli.hpp"
#include "repgap/error.hpp"
#include "repgap/measure.hpp"
#include "repgap/pipeline.hpp"
#include "repgap/report.hpp"
#include "repgap/synthetic.hpp"
#include "test_support.hpp"

namespace repgap {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::slurp;
using testing::spit;
using testing::TempDir;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    if (value) {
      ::setenv(name, value, 1);
    } else {
      ::unsetenv(name);
    }
  }
  ~ScopedEnv() {
    if (old_) {
      ::setenv(name_.c_str(), old_->c_str(), 1);
    } else {
      ::unsetenv(name_.c_str());
    }
  }

 private:
  std::string name_;
  std::optional<std::string> old_;
};

fs::path small_fixture(const TempDir& dir) {
  synthetic::FixtureOptions options;
  options.images_per_class = 4;
  return synthetic::write_fixture(dir / "fixture", options);
}

TEST(Cli, PrepareWithoutManifestIsUsageError) {
  TempDir dir;
  const auto r = cli({"prepare", "--out", (dir / "crops").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--manifest"), std::string::npos) << r.err;
}

TEST(Cli, RunWithoutManifestIsUsageError) {
  TempDir dir;
  const auto r = cli({"run", "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 2) << r.err;
}

TEST(Cli, UnknownSubcommandIsUsageError) { EXPECT_EQ(cli({"frobnicate"}).code, 2); }

TEST(Cli, MissingManifestFileIsIoError) {
  TempDir dir;
  const auto r = cli({"prepare", "--manifest", (dir / "absent.json").string(), "--out", (dir / "c").string()});
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST(Cli, HelpListsEveryRunFlag) {
  const auto r = cli({"run", "--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"--config", "--manifest", "--out", "--seed", "--size", "--metrics", "--alpha", "--tail",
                           "--region", "--format"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
}

TEST(Cli, TopLevelHelpListsSubcommands) {
  const auto r = cli({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"prepare", "measure", "rmi", "ttest", "report", "export-embeddings", "verify-bounds", "run"}) {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
}

TEST(Cli, SeedPrecedence) {
  TempDir dir;
  const auto manifest = small_fixture(dir);
  const auto seed_of = [&](const std::string& out) {
    return measure::read_json_file(dir / out / "run_config.json").at("seed").get<std::uint64_t>();
  };
  {
    ScopedEnv env(pipeline::kSeedEnvironment, nullptr);
    ASSERT_EQ(cli({"run", "--manifest", manifest.string(), "--out", (dir / "a").string()}).code, 0);
    EXPECT_EQ(seed_of("a"), 42u);
  }
  ScopedEnv env(pipeline::kSeedEnvironment, "7");
  ASSERT_EQ(cli({"run", "--manifest", manifest.string(), "--out", (dir / "b").string()}).code, 0);
  EXPECT_EQ(seed_of("b"), 7u);
  spit(dir / "config.json", R"({"seed": 9, "metrics": ["js"]})");
  ASSERT_EQ(cli({"run", "--config", (dir / "config.json").string(), "--manifest", manifest.string(), "--out",
                 (dir / "c").string()})
                .code,
            0);
  EXPECT_EQ(seed_of("c"), 9u);
  ASSERT_EQ(cli({"run", "--config", (dir / "config.json").string(), "--seed", "11", "--manifest", manifest.string(),
                 "--out", (dir / "d").string()})
                .code,
            0);
  EXPECT_EQ(seed_of("d"), 11u);
}

TEST(Cli, MalformedSeedEnvironment) {
  ScopedEnv env(pipeline::kSeedEnvironment, "forty");
  EXPECT_THROW(pipeline::seed_from_environment(), UsageError);
}

TEST(Cli, UnknownConfigKeyRejected) {
  TempDir dir;
  spit(dir / "config.json", R"({"sede": 9})");
  const auto r = cli({"run", "--config", (dir / "config.json").string(), "--manifest", "m.json", "--out",
                      (dir / "o").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("sede"), std::string::npos) << r.err;
}

TEST(Cli, RmiNotAcceptedAsSetMetric) {
  TempDir dir;
  const auto r = cli({"run", "--manifest", "m.json", "--out", (dir / "o").string(), "--metrics", "js,rmi"});
  EXPECT_EQ(r.code, 2) << r.err;
}

TEST(Pipeline, MetricSubsetOnlyWritesThatMetric) {
  TempDir dir;
  const auto manifest = small_fixture(dir);
  ASSERT_EQ(cli({"run", "--manifest", manifest.string(), "--out", (dir / "o").string(), "--metrics", "js"}).code, 0);
  int files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "o" / "results")) {
    const auto name = entry.path().filename().string();
    if (name.find(".measure.json") == std::string::npos) continue;
    ++files;
    const auto doc = measure::read_measure(entry.path());
    for (const auto& c : doc.comparisons) {
      ASSERT_EQ(c.results.size(), 1u);
      EXPECT_EQ(c.results[0].metric, metrics::MetricKind::js);
    }
  }
  EXPECT_GT(files, 0);
  EXPECT_FALSE(fs::exists(dir / "o" / "groups" / "tile__spot.MH.fg.csv"));
}

TEST(Pipeline, RunIsByteIdentical) {
  TempDir dir;
  const auto manifest = small_fixture(dir);
  ASSERT_EQ(cli({"run", "--manifest", manifest.string(), "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(cli({"run", "--manifest", manifest.string(), "--out", (dir / "b").string()}).code, 0);
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = entry.path().lexically_relative(dir / "a");
    ASSERT_TRUE(fs::exists(dir / "b" / rel)) << rel;
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 50u);
}

TEST(Pipeline, ReportFromRunOutputs) {
  TempDir dir;
  const auto manifest = small_fixture(dir);
  ASSERT_EQ(cli({"run", "--manifest", manifest.string(), "--out", (dir / "o").string()}).code, 0);
  const auto records = report::collect_records(dir / "o" / "results");
  std::map<report::Measure, int> per_metric;
  for (const auto& r : records) ++per_metric[r.metric];
  EXPECT_EQ(per_metric[report::Measure::js], 3);
  EXPECT_EQ(per_metric[report::Measure::mh], 3);
  EXPECT_EQ(per_metric[report::Measure::ws], 3);
  EXPECT_EQ(per_metric[report::Measure::rmi], 3);
  EXPECT_EQ(per_metric[report::Measure::p], 9);

  const auto r = cli({"report", "--in", (dir / "o" / "results").string(), "--out", (dir / "rep").string(),
                      "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto aggs = report::read_aggregates_json(dir / "rep" / "class_aggregates.json");
  bool saw_pct = false;
  for (const auto& a : aggs) {
    if (a.key.metric == report::Measure::mh) saw_pct = saw_pct || a.pct_of_bound.has_value();
  }
  EXPECT_TRUE(saw_pct);
}

TEST(Pipeline, VerifyBoundsExitCodes) {
  TempDir dir;
  const auto manifest = small_fixture(dir);
  ASSERT_EQ(cli({"run", "--manifest", manifest.string(), "--out", (dir / "o").string()}).code, 0);
  const auto measure_file = dir / "o" / "results" / "tile__spot.measure.json";
  const auto ok = cli({"verify-bounds", "--in", measure_file.string()});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_TRUE(json::parse(ok.out).at("passed").get<bool>());

  auto doc = measure::read_json_file(measure_file);
  doc["comparisons"][0]["results"][0]["value"] = 1.5;
  measure::write_json_file(doc, measure_file);
  const auto bad = cli({"verify-bounds", "--in", measure_file.string(), "--out", (dir / "v.json").string()});
  EXPECT_EQ(bad.code, 5);
  EXPECT_FALSE(measure::read_json_file(dir / "v.json").at("passed").get<bool>());
}

TEST(Cli, TTestWritesContext) {
  TempDir dir;
  spit(dir / "fg.csv", "value\n1\n2\n3\n4\n5\n");
  spit(dir / "bg.csv", "value\n3\n4\n5\n6\n7\n");
  const auto r = cli({"ttest", "--group-a", (dir / "fg.csv").string(), "--group-b", (dir / "bg.csv").string(),
                      "--out", (dir / "t.json").string(), "--dataset", "d", "--class", "c", "--metric", "JS"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = measure::read_json_file(dir / "t.json");
  EXPECT_NEAR(doc.at("t").get<double>(), -2.0, 1e-12);
  EXPECT_EQ(doc.at("df").get<int>(), 8);
  EXPECT_EQ(doc.at("context").at("metric"), "JS");
  EXPECT_EQ(doc.at("kind"), "ttest");
}

TEST(Cli, TTestTooFewValues) {
  TempDir dir;
  spit(dir / "fg.csv", "value\n1\n");
  spit(dir / "bg.csv", "value\n3\n4\n");
  const auto r = cli({"ttest", "--group-a", (dir / "fg.csv").string(), "--group-b", (dir / "bg.csv").string(),
                      "--out", (dir / "t.json").string()});
  EXPECT_EQ(r.code, 4) << r.err;
}

TEST(Cli, ExportEmbeddingsFromFeatureFiles) {
  TempDir dir;
  const auto manifest = small_fixture(dir);
  ASSERT_EQ(cli({"run", "--manifest", manifest.string(), "--out", (dir / "o").string()}).code, 0);
  const auto r = cli({"export-embeddings", "--in", (dir / "o/features/tile__spot_defect.fgap").string(),
                      (dir / "o/features/tile__spot_normal_fg.fgap").string(), "--out", (dir / "e.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string text = slurp(dir / "e.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 17);
}

}  // namespace
}  // namespace repgap
