#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "repgap/featstore.hpp"
#include "repgap/metrics.hpp"

namespace repgap::measure {

inline constexpr const char* kSchemaVersion = "1.0";

/// Metrics of one defect set against one comparison set.
struct Comparison {
  featstore::SampleKind against = featstore::SampleKind::normal_fg;
  featstore::BackboneMeta meta;
  /// Feature file of the comparison set, relative to the output document.
  std::string features_file;
  std::size_t n = 0;
  std::vector<metrics::SetMetricResult> results;
};

struct MeasureOutput {
  featstore::BackboneMeta defect_meta;
  std::string defect_file;
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<Comparison> comparisons;

  const Comparison* find(featstore::SampleKind against) const;
};

/// Computes the requested metrics of `defect` against `normal` and, when
/// given, against `background`. JS and WS need the sets paired by id.
MeasureOutput measure_sets(const featstore::FeatureMatrix& defect,
                           const featstore::FeatureMatrix& normal,
                           const featstore::FeatureMatrix* background,
                           const std::set<metrics::MetricKind>& which,
                           const metrics::WassersteinOptions& ws_options = {});

nlohmann::json to_json(const metrics::SetMetricResult& result);
metrics::SetMetricResult result_from_json(const nlohmann::json& j);
nlohmann::json meta_to_json(const featstore::BackboneMeta& meta);
featstore::BackboneMeta meta_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MeasureOutput& output);
MeasureOutput measure_from_json(const nlohmann::json& j);

void write_measure(const MeasureOutput& output, const std::filesystem::path& path);
MeasureOutput read_measure(const std::filesystem::path& path);

/// Parses "js,mh,ws".
std::set<metrics::MetricKind> parse_metric_list(const std::string& text);

/// Canonical JSON text used for every artifact: 2-space indent, trailing newline.
void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace repgap::measure
