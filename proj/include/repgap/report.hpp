#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "repgap/featstore.hpp"

namespace repgap::report {

/// JS/MH/WS/RMI measurements plus P for t-test p-values.
enum class Measure { js, mh, ws, rmi, p };

std::string to_string(Measure m);
Measure measure_from_string(const std::string& text);

struct MetricRecord {
  std::string dataset;
  std::string object_type;
  std::string anomaly_class;
  std::string backbone_name;
  std::string pretrain_dataset;
  Measure metric = Measure::js;
  /// For P records: the metric whose groups were tested.
  std::string tested_metric;
  double value = 0.0;
  long long n = 0;
  long long p = 0;
  std::vector<std::string> flags;
};

struct AggregateKey {
  std::string dataset;
  std::string anomaly_class;
  Measure metric = Measure::js;
  std::string tested_metric;

  friend auto operator<=>(const AggregateKey&, const AggregateKey&) = default;
};

struct ClassAggregate {
  AggregateKey key;
  double mean_over_backbones = 0.0;
  int backbone_count = 0;
  std::optional<double> bound;
  std::optional<double> pct_of_bound;

  friend bool operator==(const ClassAggregate&, const ClassAggregate&) = default;
};

/// Mean per (dataset, anomaly_class, metric), ordered by key. Throws on
/// duplicate records.
std::vector<ClassAggregate> aggregate_by_class(const std::vector<MetricRecord>& records);

/// Mahalanobis bound per dataset from the largest class sample count and the
/// feature length carried by the MH records.
std::map<std::string, double> mh_bounds_from_records(const std::vector<MetricRecord>& records);

/// Attaches value / bound * 100 to every MH aggregate.
std::vector<ClassAggregate> pct_of_bound_report(std::vector<ClassAggregate> aggregates,
                                                const std::map<std::string, double>& bounds);

enum class TableFormat { csv, json };
TableFormat table_format_from_string(const std::string& text);

/// Writes class_aggregates.{csv,json}; returns the path.
std::filesystem::path emit_tables(const std::vector<ClassAggregate>& aggregates, TableFormat format,
                                  const std::filesystem::path& out_dir);
std::vector<ClassAggregate> read_aggregates_json(const std::filesystem::path& path);

/// One backbone-variation table per metric: rows (dataset, object, class),
/// columns backbone then pretraining dataset.
std::vector<std::filesystem::path> emit_backbone_tables(const std::vector<MetricRecord>& records,
                                                        TableFormat format,
                                                        const std::filesystem::path& out_dir);

enum class PlotKind { class_curves, rmi_scatter, pvalue_bars };
std::string to_string(PlotKind kind);

/// Columnar plot data, one CSV per dataset.
std::vector<std::filesystem::path> emit_plot_data(const std::vector<MetricRecord>& records,
                                                  PlotKind kind,
                                                  const std::filesystem::path& out_dir);

/// Concatenates matrices into one CSV with a label column for external
/// projection tools.
void export_embeddings(const std::vector<featstore::FeatureMatrix>& matrices,
                       const std::filesystem::path& path);

/// Collects records from measure JSON, t-test JSON and RMI CSV files in `dir`
/// (non-recursive, sorted by name).
std::vector<MetricRecord> collect_records(const std::filesystem::path& dir);

/// Shortest round-trip decimal text.
std::string format_number(double v);

}  // namespace repgap::report
