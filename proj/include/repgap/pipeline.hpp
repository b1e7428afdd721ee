#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "repgap/corpus.hpp"
#include "repgap/metrics.hpp"
#include "repgap/stats.hpp"

namespace repgap::pipeline {

inline constexpr const char* kSeedEnvironment = "REPGAP_SEED";

/// Settings of a full run. Paths are kept as given; nothing absolute is
/// written into the artifact tree.
struct RunConfig {
  std::uint64_t seed = corpus::kDefaultSeed;
  int target_size = corpus::kDefaultTargetSize;
  std::set<metrics::MetricKind> metrics{metrics::MetricKind::js, metrics::MetricKind::mh,
                                        metrics::MetricKind::ws};
  double alpha = 0.05;
  stats::Tail tail = stats::Tail::lower;
  int rmi_region = metrics::kDefaultRmiRegion;
  std::string format = "csv";
  std::filesystem::path manifest;
  std::filesystem::path out;

  /// Throws UsageError when an invariant is violated.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Applies the keys present in `j` on top of `config`; unknown keys are rejected.
void apply_config_json(RunConfig& config, const nlohmann::json& j);

/// Seed from REPGAP_SEED, or nullopt when unset. Throws UsageError if malformed.
std::optional<std::uint64_t> seed_from_environment();

corpus::PairsIndex prepare(const std::filesystem::path& manifest, const std::filesystem::path& out_dir,
                           int target_size, std::uint64_t seed);

/// Built-in descriptor features for every pair of `kind`, optionally
/// restricted to one (object_type, anomaly_class) group.
featstore::FeatureMatrix featurize(const std::filesystem::path& pairs_json, featstore::SampleKind kind,
                                   const std::optional<std::string>& object_type,
                                   const std::optional<std::string>& anomaly_class);

/// Measures feature files and writes the measure JSON to `out`.
void measure_files(const std::filesystem::path& defect, const std::filesystem::path& normal,
                   const std::optional<std::filesystem::path>& background,
                   const std::set<metrics::MetricKind>& which, const std::filesystem::path& out);

/// Per-pair RMI against the foreground (and background when present) crop.
void write_rmi_csv(const std::filesystem::path& pairs_json, int region, const std::filesystem::path& out);

/// Context echoed into t-test output so the report can attribute p-values.
struct TestContext {
  std::string dataset;
  std::string object_type;
  std::string anomaly_class;
  std::string backbone_name;
  std::string pretrain_dataset;
  std::string metric;
};

nlohmann::json ttest_to_json(const stats::TTestResult& result, const TestContext& context);

stats::TTestResult ttest_files(const std::filesystem::path& group_a, const std::filesystem::path& group_b,
                               double alpha, stats::Tail tail);

/// Bound diagnostics for every result in a measure file, loading the
/// comparison feature sets for the within-set Mahalanobis check.
nlohmann::json verify_measure_file(const std::filesystem::path& path, bool& all_passed);

/// Aggregates the records under `in_dir` and writes tables and plot data.
std::vector<std::filesystem::path> build_report(const std::filesystem::path& in_dir,
                                                const std::filesystem::path& out_dir,
                                                const std::string& format);

/// Runs prepare, featurize, measure, rmi, ttest, report and verify-bounds.
/// Stage failures are rethrown as StageError.
void run_pipeline(const RunConfig& config, std::ostream& log);

class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, int exit_code, const std::string& what)
      : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)), exit_code_(exit_code) {}

  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

}  // namespace repgap::pipeline
