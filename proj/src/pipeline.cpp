#include "repgap/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>

#include "repgap/descriptor.hpp"
#include "repgap/error.hpp"
#include "repgap/measure.hpp"
#include "repgap/report.hpp"

namespace repgap::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using featstore::SampleKind;

void RunConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
  if (target_size < 8) throw UsageError("target size must be >= 8");
  if (metrics.empty()) throw UsageError("metric set must be non-empty");
  if (metrics.contains(metrics::MetricKind::rmi)) {
    throw UsageError("rmi is always computed in pixel space; list only js, mh, ws");
  }
  if (rmi_region < 3 || rmi_region % 2 == 0) throw UsageError("rmi region must be odd and >= 3");
  if (format != "csv" && format != "json") throw UsageError("format must be csv or json");
  if (manifest.empty()) throw UsageError("a manifest is required");
  if (out.empty()) throw UsageError("an output directory is required");
}

json RunConfig::to_json() const {
  std::vector<std::string> names;
  for (auto m : metrics) names.push_back(metrics::to_string(m));
  return {{"seed", seed},      {"target_size", target_size},   {"metrics", names},
          {"alpha", alpha},    {"tail", stats::to_string(tail)}, {"rmi_region", rmi_region},
          {"format", format},  {"manifest", manifest.generic_string()}};
}

void apply_config_json(RunConfig& config, const json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "seed") {
        config.seed = value.get<std::uint64_t>();
      } else if (key == "target_size") {
        config.target_size = value.get<int>();
      } else if (key == "metrics") {
        std::string joined;
        for (const auto& m : value) joined += m.get<std::string>() + ",";
        config.metrics = measure::parse_metric_list(joined);
      } else if (key == "alpha") {
        config.alpha = value.get<double>();
      } else if (key == "tail") {
        config.tail = stats::tail_from_string(value.get<std::string>());
      } else if (key == "rmi_region") {
        config.rmi_region = value.get<int>();
      } else if (key == "format") {
        config.format = value.get<std::string>();
      } else if (key == "manifest") {
        config.manifest = value.get<std::string>();
      } else if (key == "out") {
        config.out = value.get<std::string>();
      } else {
        throw UsageError("unknown config key \"" + key + "\"");
      }
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed config: ") + e.what());
  }
}

std::optional<std::uint64_t> seed_from_environment() {
  const char* raw = std::getenv(kSeedEnvironment);
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (errno != 0 || end == raw || *end != '\0' || raw[0] == '-') {
    throw UsageError(std::string(kSeedEnvironment) + " is not a non-negative integer: \"" + raw + "\"");
  }
  return static_cast<std::uint64_t>(v);
}

corpus::PairsIndex prepare(const fs::path& manifest, const fs::path& out_dir, int target_size, std::uint64_t seed) {
  const corpus::AnnotationManifest m = corpus::load_manifest(manifest);
  const corpus::CropSet set = corpus::build_crop_sets(m, target_size, seed);
  return corpus::write_crop_set(set, out_dir);
}

featstore::FeatureMatrix featurize(const fs::path& pairs_json, SampleKind kind,
                                   const std::optional<std::string>& object_type,
                                   const std::optional<std::string>& anomaly_class) {
  const corpus::PairsIndex index = corpus::read_pairs_index(pairs_json);
  std::vector<const corpus::PairEntry*> selected;
  for (const auto& e : index.pairs) {
    if (object_type && e.object_type != *object_type) continue;
    if (anomaly_class && e.anomaly_class != *anomaly_class) continue;
    selected.push_back(&e);
  }
  if (selected.empty()) throw ValidationError("no pairs match the requested group");
  featstore::FeatureMatrix m = descriptor::describe_crops(index, pairs_json.parent_path(), kind, selected);
  if (!object_type) m.meta.object_type = "*";
  if (!anomaly_class) m.meta.anomaly_class = "*";
  return m;
}

namespace {

std::string relative_to(const fs::path& target, const fs::path& base_dir) {
  return fs::absolute(target).lexically_normal().lexically_relative(fs::absolute(base_dir).lexically_normal()).generic_string();
}

std::string token(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-')) c = '-';
  }
  return out;
}

void write_values_csv(const std::vector<double>& values, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "value\n";
  for (double v : values) out << report::format_number(v) << '\n';
}

}  // namespace

void measure_files(const fs::path& defect, const fs::path& normal, const std::optional<fs::path>& background,
                   const std::set<metrics::MetricKind>& which, const fs::path& out) {
  const auto d = featstore::read_features(defect);
  const auto n = featstore::read_features(normal);
  std::optional<featstore::FeatureMatrix> b;
  if (background) b = featstore::read_features(*background);
  measure::MeasureOutput result = measure::measure_sets(d, n, b ? &*b : nullptr, which);
  const fs::path out_dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
  result.defect_file = relative_to(defect, out_dir);
  result.comparisons[0].features_file = relative_to(normal, out_dir);
  if (background) result.comparisons[1].features_file = relative_to(*background, out_dir);
  measure::write_measure(result, out);
}

void write_rmi_csv(const fs::path& pairs_json, int region, const fs::path& out) {
  const corpus::PairsIndex index = corpus::read_pairs_index(pairs_json);
  const fs::path crop_dir = pairs_json.parent_path();
  const auto load = [&](const std::string& file) {
    corpus::PixelPatch patch;
    patch.pixels = read_png(crop_dir / file);
    patch.original_size = patch.pixels.size();
    return patch;
  };
  std::string text = "pair_id,dataset,object_type,anomaly_class,rmi_fg,rmi_bg\n";
  for (const auto& e : index.pairs) {
    const auto defect = load(e.defect_file);
    const double fg = metrics::rmi(defect, load(e.fg_file), region);
    std::string bg;
    if (e.bg_file) bg = report::format_number(metrics::rmi(defect, load(*e.bg_file), region));
    text += e.id + "," + index.dataset_name + "," + e.object_type + "," + e.anomaly_class + "," +
            report::format_number(fg) + "," + bg + "\n";
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream f(out, std::ios::binary);
  if (!f) throw IoError("cannot write " + out.string());
  f << text;
  if (!f) throw IoError("write failed for " + out.string());
}

json ttest_to_json(const stats::TTestResult& r, const TestContext& c) {
  return {{"kind", "ttest"},
          {"t", r.t},
          {"df", r.df},
          {"p_one_tailed", r.p_one_tailed},
          {"pooled_std", r.pooled_std},
          {"decision", stats::to_string(r.decision)},
          {"tail", stats::to_string(r.tail)},
          {"alpha", r.alpha},
          {"mean_a", r.mean_a},
          {"mean_b", r.mean_b},
          {"n_a", r.n_a},
          {"n_b", r.n_b},
          {"group_a", stats::to_string(stats::GroupLabel::anomaly_fg)},
          {"group_b", stats::to_string(stats::GroupLabel::anomaly_bg)},
          {"flags", r.flags},
          {"context",
           {{"dataset", c.dataset},
            {"object_type", c.object_type},
            {"anomaly_class", c.anomaly_class},
            {"backbone_name", c.backbone_name},
            {"pretrain_dataset", c.pretrain_dataset},
            {"metric", c.metric}}}};
}

stats::TTestResult ttest_files(const fs::path& group_a, const fs::path& group_b, double alpha, stats::Tail tail) {
  const stats::MeasurementGroup a(stats::GroupLabel::anomaly_fg, stats::read_values_csv(group_a));
  const stats::MeasurementGroup b(stats::GroupLabel::anomaly_bg, stats::read_values_csv(group_b));
  return stats::hypothesis_test(a, b, alpha, tail);
}

json verify_measure_file(const fs::path& path, bool& all_passed) {
  const measure::MeasureOutput m = measure::read_measure(path);
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  json comps = json::array();
  for (const auto& c : m.comparisons) {
    std::optional<Eigen::MatrixXd> normal;
    const fs::path features = base / c.features_file;
    if (!c.features_file.empty() && fs::exists(features)) {
      std::vector<std::string> warnings;
      normal = featstore::read_features(features, &warnings).as_double();
    }
    json diags = json::array();
    for (const auto& r : c.results) {
      const metrics::BoundDiagnostic d = metrics::verify_bounds(r, normal ? &*normal : nullptr);
      all_passed = all_passed && d.passed();
      json checks = json::array();
      for (const auto& check : d.checks) {
        checks.push_back({{"name", check.name}, {"passed", check.passed}, {"skipped", check.skipped}, {"detail", check.detail}});
      }
      diags.push_back({{"metric", metrics::to_string(r.metric)}, {"passed", d.passed()}, {"checks", std::move(checks)}});
    }
    comps.push_back({{"against", featstore::to_string(c.against)}, {"diagnostics", std::move(diags)}});
  }
  return {{"file", path.filename().generic_string()}, {"comparisons", std::move(comps)}};
}

std::vector<fs::path> build_report(const fs::path& in_dir, const fs::path& out_dir, const std::string& format) {
  const auto fmt = report::table_format_from_string(format);
  const std::vector<report::MetricRecord> records = report::collect_records(in_dir);
  if (records.empty()) throw ValidationError("no records found in " + in_dir.string());
  std::vector<report::ClassAggregate> aggregates = report::aggregate_by_class(records);
  aggregates = report::pct_of_bound_report(std::move(aggregates), report::mh_bounds_from_records(records));

  std::vector<fs::path> written;
  written.push_back(report::emit_tables(aggregates, fmt, out_dir));
  for (auto& p : report::emit_backbone_tables(records, fmt, out_dir)) written.push_back(std::move(p));
  for (const auto kind : {report::PlotKind::class_curves, report::PlotKind::rmi_scatter, report::PlotKind::pvalue_bars}) {
    try {
      for (auto& p : report::emit_plot_data(records, kind, out_dir)) written.push_back(std::move(p));
    } catch (const ValidationError&) {
      // no records of that kind in this run
    }
  }
  return written;
}

namespace {

template <typename F>
auto stage(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, static_cast<int>(e.category()), e.what());
  } catch (const std::exception& e) {
    throw StageError(name, 1, e.what());
  }
}

}  // namespace

void run_pipeline(const RunConfig& config, std::ostream& log) {
  stage("config", [&] { config.validate(); });
  const fs::path out = config.out;
  const fs::path crops = out / "crops";
  const fs::path features = out / "features";
  const fs::path results = out / "results";
  const fs::path groups = out / "groups";
  stage("config", [&] {
    for (const auto& d : {crops, features, results, groups}) fs::create_directories(d);
    measure::write_json_file(config.to_json(), out / "run_config.json");
  });

  const corpus::PairsIndex index = stage("prepare", [&] {
    auto idx = prepare(config.manifest, crops, config.target_size, config.seed);
    log << "[prepare] " << idx.pairs.size() << " pairs, " << idx.skipped.size() << " skipped\n";
    return idx;
  });

  std::map<std::pair<std::string, std::string>, std::vector<const corpus::PairEntry*>> by_group;
  for (const auto& e : index.pairs) by_group[{e.object_type, e.anomaly_class}].push_back(&e);

  struct GroupFiles {
    std::string name;
    std::string object_type;
    std::string anomaly_class;
    bool has_background = false;
  };
  std::vector<GroupFiles> measured;

  stage("measure", [&] {
    for (const auto& [key, entries] : by_group) {
      GroupFiles g{token(key.first) + "__" + token(key.second), key.first, key.second, true};
      if (entries.size() < 2) {
        log << "[measure] skipping " << g.name << ": needs at least 2 pairs\n";
        continue;
      }
      for (const auto* e : entries) g.has_background = g.has_background && e->bg_file.has_value();
      const auto write = [&](SampleKind kind) {
        featstore::FeatureMatrix m = descriptor::describe_crops(index, crops, kind, entries);
        const fs::path path = features / (g.name + "_" + featstore::to_string(kind) + ".fgap");
        featstore::write_features(m, path);
        return path;
      };
      const fs::path d = write(SampleKind::defect);
      const fs::path n = write(SampleKind::normal_fg);
      std::optional<fs::path> b;
      if (g.has_background) b = write(SampleKind::background);
      measure_files(d, n, b, config.metrics, results / (g.name + ".measure.json"));
      measured.push_back(g);
    }
    log << "[measure] " << measured.size() << " groups\n";
  });

  stage("rmi", [&] { write_rmi_csv(crops / "pairs.json", config.rmi_region, results / "rmi.csv"); });

  stage("ttest", [&] {
    int tests = 0;
    for (const auto& g : measured) {
      if (!g.has_background) {
        log << "[ttest] skipping " << g.name << ": no background crops\n";
        continue;
      }
      const measure::MeasureOutput m = measure::read_measure(results / (g.name + ".measure.json"));
      const auto* fg = m.find(SampleKind::normal_fg);
      const auto* bg = m.find(SampleKind::background);
      for (std::size_t i = 0; i < fg->results.size(); ++i) {
        const std::string metric = metrics::to_string(fg->results[i].metric);
        const fs::path a = groups / (g.name + "." + metric + ".fg.csv");
        const fs::path b = groups / (g.name + "." + metric + ".bg.csv");
        write_values_csv(*fg->results[i].per_pair_values, a);
        write_values_csv(*bg->results[i].per_pair_values, b);
        const stats::TTestResult r = ttest_files(a, b, config.alpha, config.tail);
        const TestContext ctx{m.defect_meta.dataset, g.object_type, g.anomaly_class, m.defect_meta.backbone_name,
                              m.defect_meta.pretrain_dataset, metric};
        measure::write_json_file(ttest_to_json(r, ctx), results / (g.name + "." + metric + ".ttest.json"));
        ++tests;
      }
    }
    log << "[ttest] " << tests << " tests\n";
  });

  stage("report", [&] {
    const auto files = build_report(results, out / "report", config.format);
    log << "[report] " << files.size() << " files\n";
  });

  stage("verify-bounds", [&] {
    bool all_passed = true;
    json files = json::array();
    for (const auto& g : measured) files.push_back(verify_measure_file(results / (g.name + ".measure.json"), all_passed));
    measure::write_json_file({{"passed", all_passed}, {"files", files}}, out / "verify" / "bounds.json");
    if (!all_passed) throw NumericalError("bound violation; see verify/bounds.json");
    log << "[verify-bounds] all bounds hold\n";
  });
}

}  // namespace repgap::pipeline
