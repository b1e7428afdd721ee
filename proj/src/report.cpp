#include "repgap/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "repgap/error.hpp"
#include "repgap/measure.hpp"
#include "repgap/metrics.hpp"

namespace repgap::report {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Measure m) {
  switch (m) {
    case Measure::js:
      return "JS";
    case Measure::mh:
      return "MH";
    case Measure::ws:
      return "WS";
    case Measure::rmi:
      return "RMI";
    case Measure::p:
      return "P";
  }
  return "JS";
}

Measure measure_from_string(const std::string& text) {
  if (text == "P" || text == "p") return Measure::p;
  switch (metrics::metric_kind_from_string(text)) {
    case metrics::MetricKind::js:
      return Measure::js;
    case metrics::MetricKind::mh:
      return Measure::mh;
    case metrics::MetricKind::ws:
      return Measure::ws;
    case metrics::MetricKind::rmi:
      return Measure::rmi;
  }
  return Measure::js;
}

std::string to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::class_curves:
      return "class_curves";
    case PlotKind::rmi_scatter:
      return "rmi_scatter";
    case PlotKind::pvalue_bars:
      return "pvalue_bars";
  }
  return "class_curves";
}

TableFormat table_format_from_string(const std::string& text) {
  if (text == "csv") return TableFormat::csv;
  if (text == "json") return TableFormat::json;
  throw UsageError("format must be csv or json, got \"" + text + "\"");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string file_token(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.')) c = '_';
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

auto record_identity(const MetricRecord& r) {
  return std::tie(r.dataset, r.object_type, r.anomaly_class, r.backbone_name, r.pretrain_dataset,
                  r.metric, r.tested_metric);
}

std::string describe(const MetricRecord& r) {
  return r.dataset + "/" + r.object_type + "/" + r.anomaly_class + "/" + r.backbone_name + "/" +
         r.pretrain_dataset + "/" + to_string(r.metric) +
         (r.tested_metric.empty() ? "" : "(" + r.tested_metric + ")");
}

// Order-independent mean: values are summed in sorted order.
double stable_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

std::vector<ClassAggregate> aggregate_by_class(const std::vector<MetricRecord>& records) {
  std::vector<const MetricRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const MetricRecord* a, const MetricRecord* b) {
    return record_identity(*a) < record_identity(*b);
  });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (record_identity(*sorted[i - 1]) == record_identity(*sorted[i])) {
      throw ValidationError("duplicate record " + describe(*sorted[i]));
    }
  }

  std::map<AggregateKey, std::pair<std::vector<double>, std::set<std::pair<std::string, std::string>>>> groups;
  for (const MetricRecord* r : sorted) {
    auto& g = groups[AggregateKey{r->dataset, r->anomaly_class, r->metric, r->tested_metric}];
    g.first.push_back(r->value);
    g.second.emplace(r->backbone_name, r->pretrain_dataset);
  }
  std::vector<ClassAggregate> out;
  out.reserve(groups.size());
  for (auto& [key, g] : groups) {
    ClassAggregate a;
    a.key = key;
    a.mean_over_backbones = stable_mean(g.first);
    a.backbone_count = static_cast<int>(g.second.size());
    out.push_back(std::move(a));
  }
  return out;
}

std::map<std::string, double> mh_bounds_from_records(const std::vector<MetricRecord>& records) {
  std::map<std::string, std::pair<long long, long long>> np;
  for (const auto& r : records) {
    if (r.metric != Measure::mh) continue;
    auto& [n, p] = np[r.dataset];
    n = std::max(n, r.n);
    p = std::max(p, r.p);
  }
  std::map<std::string, double> out;
  for (const auto& [dataset, v] : np) {
    if (v.first < 2 || v.second < 1) {
      throw ValidationError("missing bound context (n, p) for dataset " + dataset);
    }
    out[dataset] = metrics::mahalanobis_upper_bound(v.first, v.second);
  }
  return out;
}

std::vector<ClassAggregate> pct_of_bound_report(std::vector<ClassAggregate> aggregates,
                                                const std::map<std::string, double>& bounds) {
  for (auto& a : aggregates) {
    if (a.key.metric != Measure::mh) continue;
    const auto it = bounds.find(a.key.dataset);
    if (it == bounds.end()) throw ValidationError("missing bound context for dataset " + a.key.dataset);
    if (!(it->second > 0.0)) throw ValidationError("bound for dataset " + a.key.dataset + " must be positive");
    a.bound = it->second;
    a.pct_of_bound = a.mean_over_backbones / it->second * 100.0;
  }
  return aggregates;
}

fs::path emit_tables(const std::vector<ClassAggregate>& aggregates, TableFormat format,
                     const fs::path& out_dir) {
  if (aggregates.empty()) throw ValidationError("emit_tables: no aggregates");
  if (format == TableFormat::csv) {
    std::string text = "dataset,anomaly_class,metric,tested_metric,mean_over_backbones,backbone_count,bound,pct_of_bound\n";
    for (const auto& a : aggregates) {
      text += csv_cell(a.key.dataset) + "," + csv_cell(a.key.anomaly_class) + "," + to_string(a.key.metric) +
              "," + csv_cell(a.key.tested_metric) + "," + format_number(a.mean_over_backbones) + "," +
              std::to_string(a.backbone_count) + "," + (a.bound ? format_number(*a.bound) : "") + "," +
              (a.pct_of_bound ? format_number(*a.pct_of_bound) : "") + "\n";
    }
    const fs::path path = out_dir / "class_aggregates.csv";
    write_text(path, text);
    return path;
  }
  json rows = json::array();
  for (const auto& a : aggregates) {
    rows.push_back({{"dataset", a.key.dataset},
                    {"anomaly_class", a.key.anomaly_class},
                    {"metric", to_string(a.key.metric)},
                    {"tested_metric", a.key.tested_metric},
                    {"mean_over_backbones", a.mean_over_backbones},
                    {"backbone_count", a.backbone_count},
                    {"bound", a.bound ? json(*a.bound) : json(nullptr)},
                    {"pct_of_bound", a.pct_of_bound ? json(*a.pct_of_bound) : json(nullptr)}});
  }
  const fs::path path = out_dir / "class_aggregates.json";
  write_text(path, json{{"aggregates", rows}}.dump(2) + "\n");
  return path;
}

std::vector<ClassAggregate> read_aggregates_json(const fs::path& path) {
  const json doc = measure::read_json_file(path);
  std::vector<ClassAggregate> out;
  try {
    for (const auto& j : doc.at("aggregates")) {
      ClassAggregate a;
      a.key.dataset = j.at("dataset").get<std::string>();
      a.key.anomaly_class = j.at("anomaly_class").get<std::string>();
      a.key.metric = measure_from_string(j.at("metric").get<std::string>());
      a.key.tested_metric = j.at("tested_metric").get<std::string>();
      a.mean_over_backbones = j.at("mean_over_backbones").get<double>();
      a.backbone_count = j.at("backbone_count").get<int>();
      if (!j.at("bound").is_null()) a.bound = j.at("bound").get<double>();
      if (!j.at("pct_of_bound").is_null()) a.pct_of_bound = j.at("pct_of_bound").get<double>();
      out.push_back(std::move(a));
    }
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed aggregates: " + e.what());
  }
  return out;
}

std::vector<fs::path> emit_backbone_tables(const std::vector<MetricRecord>& records, TableFormat format,
                                           const fs::path& out_dir) {
  using RowKey = std::tuple<std::string, std::string, std::string>;
  using ColKey = std::pair<std::string, std::string>;
  std::map<Measure, std::map<RowKey, std::map<ColKey, double>>> tables;
  std::map<Measure, std::set<ColKey>> columns;
  for (const auto& r : records) {
    if (r.metric == Measure::p) continue;
    tables[r.metric][RowKey{r.dataset, r.object_type, r.anomaly_class}][ColKey{r.backbone_name, r.pretrain_dataset}] = r.value;
    columns[r.metric].emplace(r.backbone_name, r.pretrain_dataset);
  }
  std::vector<fs::path> written;
  for (const auto& [metric, rows] : tables) {
    const auto& cols = columns[metric];
    const std::string stem = "backbone_table_" + to_string(metric);
    if (format == TableFormat::csv) {
      std::string text = "dataset,object_type,anomaly_class";
      for (const auto& [bb, pre] : cols) text += "," + csv_cell(bb + "/" + pre);
      text += "\n";
      for (const auto& [rk, cells] : rows) {
        text += csv_cell(std::get<0>(rk)) + "," + csv_cell(std::get<1>(rk)) + "," + csv_cell(std::get<2>(rk));
        for (const auto& ck : cols) {
          const auto it = cells.find(ck);
          text += "," + (it == cells.end() ? std::string() : format_number(it->second));
        }
        text += "\n";
      }
      written.push_back(out_dir / (stem + ".csv"));
      write_text(written.back(), text);
    } else {
      json jcols = json::array();
      for (const auto& [bb, pre] : cols) jcols.push_back({{"backbone_name", bb}, {"pretrain_dataset", pre}});
      json jrows = json::array();
      for (const auto& [rk, cells] : rows) {
        json values = json::array();
        for (const auto& ck : cols) {
          const auto it = cells.find(ck);
          values.push_back(it == cells.end() ? json(nullptr) : json(it->second));
        }
        jrows.push_back({{"dataset", std::get<0>(rk)},
                         {"object_type", std::get<1>(rk)},
                         {"anomaly_class", std::get<2>(rk)},
                         {"values", std::move(values)}});
      }
      written.push_back(out_dir / (stem + ".json"));
      write_text(written.back(), json{{"metric", to_string(metric)}, {"columns", jcols}, {"rows", jrows}}.dump(2) + "\n");
    }
  }
  return written;
}

std::vector<fs::path> emit_plot_data(const std::vector<MetricRecord>& records, PlotKind kind,
                                     const fs::path& out_dir) {
  const auto matches = [kind](const MetricRecord& r) {
    switch (kind) {
      case PlotKind::class_curves:
        return r.metric == Measure::js || r.metric == Measure::mh || r.metric == Measure::ws;
      case PlotKind::rmi_scatter:
        return r.metric == Measure::rmi;
      case PlotKind::pvalue_bars:
        return r.metric == Measure::p;
    }
    return false;
  };
  std::map<std::string, std::vector<const MetricRecord*>> by_dataset;
  for (const auto& r : records) {
    if (matches(r)) by_dataset[r.dataset].push_back(&r);
  }
  if (by_dataset.empty()) throw ValidationError("no matching records for " + to_string(kind));

  std::vector<fs::path> written;
  for (auto& [dataset, rows] : by_dataset) {
    std::sort(rows.begin(), rows.end(), [](const MetricRecord* a, const MetricRecord* b) {
      return std::tie(a->anomaly_class, a->metric, a->tested_metric, a->object_type, a->backbone_name,
                      a->pretrain_dataset) < std::tie(b->anomaly_class, b->metric, b->tested_metric,
                                                      b->object_type, b->backbone_name, b->pretrain_dataset);
    });
    std::string text;
    if (kind == PlotKind::class_curves) {
      std::vector<MetricRecord> subset;
      for (const auto* r : rows) subset.push_back(*r);
      text = "anomaly_class,metric,value,backbone_count\n";
      for (const auto& a : aggregate_by_class(subset)) {
        text += csv_cell(a.key.anomaly_class) + "," + to_string(a.key.metric) + "," +
                format_number(a.mean_over_backbones) + "," + std::to_string(a.backbone_count) + "\n";
      }
    } else if (kind == PlotKind::rmi_scatter) {
      text = "anomaly_class,object_type,value\n";
      for (const auto* r : rows) {
        text += csv_cell(r->anomaly_class) + "," + csv_cell(r->object_type) + "," + format_number(r->value) + "\n";
      }
    } else {
      text = "anomaly_class,tested_metric,object_type,backbone_name,p_value\n";
      for (const auto* r : rows) {
        text += csv_cell(r->anomaly_class) + "," + csv_cell(r->tested_metric) + "," + csv_cell(r->object_type) +
                "," + csv_cell(r->backbone_name) + "," + format_number(r->value) + "\n";
      }
    }
    written.push_back(out_dir / (to_string(kind) + "_" + file_token(dataset) + ".csv"));
    write_text(written.back(), text);
  }
  return written;
}

void export_embeddings(const std::vector<featstore::FeatureMatrix>& matrices, const fs::path& path) {
  if (matrices.empty()) throw ValidationError("export_embeddings: no matrices");
  const std::size_t p = matrices.front().p();
  for (const auto& m : matrices) {
    if (m.p() != p) {
      throw ValidationError("export_embeddings: feature length mismatch " + std::to_string(m.p()) + " vs " +
                            std::to_string(p));
    }
  }
  std::string text = "label,sample_id";
  for (std::size_t c = 0; c < p; ++c) text += ",f" + std::to_string(c);
  text += "\n";
  for (const auto& m : matrices) {
    const std::string label = featstore::to_string(m.meta.kind);
    for (std::size_t r = 0; r < m.n(); ++r) {
      text += label + "," + csv_cell(m.sample_ids[r]);
      for (std::size_t c = 0; c < p; ++c) {
        text += "," + format_number(static_cast<double>(m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))));
      }
      text += "\n";
    }
  }
  write_text(path, text);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

void records_from_measure(const measure::MeasureOutput& m, std::vector<MetricRecord>& out) {
  const auto* fg = m.find(featstore::SampleKind::normal_fg);
  if (fg == nullptr) return;
  for (const auto& r : fg->results) {
    MetricRecord rec;
    rec.dataset = m.defect_meta.dataset;
    rec.object_type = m.defect_meta.object_type;
    rec.anomaly_class = m.defect_meta.anomaly_class;
    rec.backbone_name = m.defect_meta.backbone_name;
    rec.pretrain_dataset = m.defect_meta.pretrain_dataset;
    rec.metric = measure_from_string(metrics::to_string(r.metric));
    rec.value = r.value;
    rec.n = static_cast<long long>(fg->n);
    rec.p = static_cast<long long>(m.p);
    rec.flags = r.flags;
    if (r.approx) rec.flags.push_back("approx");
    out.push_back(std::move(rec));
  }
}

void records_from_ttest(const json& j, std::vector<MetricRecord>& out) {
  const json& ctx = j.at("context");
  MetricRecord rec;
  rec.dataset = ctx.at("dataset").get<std::string>();
  rec.object_type = ctx.at("object_type").get<std::string>();
  rec.anomaly_class = ctx.at("anomaly_class").get<std::string>();
  rec.backbone_name = ctx.at("backbone_name").get<std::string>();
  rec.pretrain_dataset = ctx.at("pretrain_dataset").get<std::string>();
  rec.metric = Measure::p;
  rec.tested_metric = ctx.at("metric").get<std::string>();
  rec.value = j.at("p_one_tailed").get<double>();
  rec.n = j.at("n_a").get<long long>();
  rec.flags = j.at("flags").get<std::vector<std::string>>();
  out.push_back(std::move(rec));
}

void records_from_rmi_csv(const fs::path& path, std::vector<MetricRecord>& out) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) return;
  const auto header = split_csv_line(line);
  const auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError(path.string() + ": missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_dataset = col("dataset"), c_object = col("object_type"), c_class = col("anomaly_class"),
                    c_fg = col("rmi_fg");
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> groups;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw ValidationError(path.string() + ": ragged row");
    groups[{cells[c_dataset], cells[c_object], cells[c_class]}].push_back(std::stod(cells[c_fg]));
  }
  for (auto& [key, values] : groups) {
    MetricRecord rec;
    rec.dataset = std::get<0>(key);
    rec.object_type = std::get<1>(key);
    rec.anomaly_class = std::get<2>(key);
    rec.backbone_name = "pixel";
    rec.pretrain_dataset = "none";
    rec.metric = Measure::rmi;
    rec.n = static_cast<long long>(values.size());
    rec.value = stable_mean(std::move(values));
    out.push_back(std::move(rec));
  }
}

}  // namespace

std::vector<MetricRecord> collect_records(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<MetricRecord> out;
  for (const auto& f : files) {
    if (f.extension() == ".json") {
      const json doc = measure::read_json_file(f);
      const std::string kind = doc.contains("kind") && doc.at("kind").is_string() ? doc.at("kind").get<std::string>() : "";
      try {
        if (kind == "measure") {
          records_from_measure(measure::measure_from_json(doc), out);
        } else if (kind == "ttest") {
          records_from_ttest(doc, out);
        }
      } catch (const json::exception& e) {
        throw ValidationError(f.string() + ": " + e.what());
      }
    } else if (f.extension() == ".csv" && f.filename().string().rfind("rmi", 0) == 0) {
      records_from_rmi_csv(f, out);
    }
  }
  return out;
}

}  // namespace repgap::report
