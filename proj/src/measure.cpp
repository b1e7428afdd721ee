#include "repgap/measure.hpp"

#include <cmath>
#include <fstream>

#include "repgap/error.hpp"

namespace repgap::measure {

using nlohmann::json;
using featstore::SampleKind;
using metrics::MetricKind;

const Comparison* MeasureOutput::find(SampleKind against) const {
  for (const auto& c : comparisons) {
    if (c.against == against) return &c;
  }
  return nullptr;
}

namespace {

Comparison compare(const featstore::FeatureMatrix& defect, const featstore::FeatureMatrix& other,
                   SampleKind against, const std::set<MetricKind>& which,
                   const metrics::WassersteinOptions& ws_options) {
  Comparison c;
  c.against = against;
  c.meta = other.meta;
  c.n = other.n();
  const bool needs_pairs = which.contains(MetricKind::js) || which.contains(MetricKind::ws);
  std::optional<featstore::PairedFeatures> paired;
  if (needs_pairs) paired = featstore::pair_matrices(defect, other);
  for (const MetricKind kind : which) {
    switch (kind) {
      case MetricKind::js:
        c.results.push_back(metrics::js_set(*paired));
        break;
      case MetricKind::mh:
        c.results.push_back(metrics::mahalanobis_set(defect, other));
        break;
      case MetricKind::ws:
        c.results.push_back(metrics::wasserstein2_set(paired->defect, paired->normal, ws_options));
        break;
      case MetricKind::rmi:
        throw UsageError("RMI is computed in pixel space by the rmi command, not from features");
    }
  }
  return c;
}

json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return v;
}

double number_from(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "+inf") return metrics::kInfinity;
    if (s == "-inf") return -metrics::kInfinity;
    throw ValidationError("expected a number, got \"" + s + "\"");
  }
  return j.get<double>();
}

}  // namespace

MeasureOutput measure_sets(const featstore::FeatureMatrix& defect,
                           const featstore::FeatureMatrix& normal,
                           const featstore::FeatureMatrix* background,
                           const std::set<MetricKind>& which,
                           const metrics::WassersteinOptions& ws_options) {
  if (which.empty()) throw UsageError("no metrics requested");
  MeasureOutput out;
  out.defect_meta = defect.meta;
  out.n = defect.n();
  out.p = defect.p();
  out.comparisons.push_back(compare(defect, normal, SampleKind::normal_fg, which, ws_options));
  if (background != nullptr) {
    out.comparisons.push_back(compare(defect, *background, SampleKind::background, which, ws_options));
  }
  return out;
}

json to_json(const metrics::SetMetricResult& r) {
  json j = {{"metric", metrics::to_string(r.metric)},
            {"value", number_or_inf(r.value)},
            {"bound_low", number_or_inf(r.bound_low)},
            {"bound_high", number_or_inf(r.bound_high)},
            {"pct_of_bound", r.pct_of_bound ? json(*r.pct_of_bound) : json(nullptr)},
            {"lambda_used", r.lambda_used ? json(*r.lambda_used) : json(nullptr)},
            {"normalization", r.normalization},
            {"solver", r.solver},
            {"approx", r.approx},
            {"n", r.n},
            {"p", r.p},
            {"flags", r.flags}};
  j["per_pair_values"] = r.per_pair_values ? json(*r.per_pair_values) : json(nullptr);
  return j;
}

metrics::SetMetricResult result_from_json(const json& j) {
  metrics::SetMetricResult r;
  r.metric = metrics::metric_kind_from_string(j.at("metric").get<std::string>());
  r.value = number_from(j.at("value"));
  r.bound_low = number_from(j.at("bound_low"));
  r.bound_high = number_from(j.at("bound_high"));
  if (!j.at("pct_of_bound").is_null()) r.pct_of_bound = j.at("pct_of_bound").get<double>();
  if (!j.at("lambda_used").is_null()) r.lambda_used = j.at("lambda_used").get<double>();
  r.normalization = j.at("normalization").get<std::string>();
  r.solver = j.at("solver").get<std::string>();
  r.approx = j.at("approx").get<bool>();
  r.n = j.at("n").get<std::size_t>();
  r.p = j.at("p").get<std::size_t>();
  r.flags = j.at("flags").get<std::vector<std::string>>();
  if (!j.at("per_pair_values").is_null()) r.per_pair_values = j.at("per_pair_values").get<std::vector<double>>();
  return r;
}

json meta_to_json(const featstore::BackboneMeta& m) {
  return {{"backbone_name", m.backbone_name}, {"pretrain_dataset", m.pretrain_dataset},
          {"dataset", m.dataset},             {"object_type", m.object_type},
          {"anomaly_class", m.anomaly_class}, {"kind", featstore::to_string(m.kind)},
          {"layer_tag", m.layer_tag}};
}

featstore::BackboneMeta meta_from_json(const json& j) {
  featstore::BackboneMeta m;
  m.backbone_name = j.at("backbone_name").get<std::string>();
  m.pretrain_dataset = j.at("pretrain_dataset").get<std::string>();
  m.dataset = j.at("dataset").get<std::string>();
  m.object_type = j.at("object_type").get<std::string>();
  m.anomaly_class = j.at("anomaly_class").get<std::string>();
  m.kind = featstore::sample_kind_from_string(j.at("kind").get<std::string>());
  m.layer_tag = j.at("layer_tag").get<std::string>();
  return m;
}

json to_json(const MeasureOutput& o) {
  json comps = json::array();
  for (const auto& c : o.comparisons) {
    json results = json::array();
    for (const auto& r : c.results) results.push_back(to_json(r));
    comps.push_back({{"against", featstore::to_string(c.against)},
                     {"provenance", meta_to_json(c.meta)},
                     {"features_file", c.features_file},
                     {"n", c.n},
                     {"results", std::move(results)}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "measure"},
          {"provenance", meta_to_json(o.defect_meta)},
          {"defect_file", o.defect_file},
          {"n", o.n},
          {"p", o.p},
          {"comparisons", std::move(comps)}};
}

MeasureOutput measure_from_json(const json& j) {
  try {
    if (j.at("kind").get<std::string>() != "measure") throw ValidationError("not a measure document");
    MeasureOutput o;
    o.defect_meta = meta_from_json(j.at("provenance"));
    o.defect_file = j.at("defect_file").get<std::string>();
    o.n = j.at("n").get<std::size_t>();
    o.p = j.at("p").get<std::size_t>();
    for (const auto& cj : j.at("comparisons")) {
      Comparison c;
      c.against = featstore::sample_kind_from_string(cj.at("against").get<std::string>());
      c.meta = meta_from_json(cj.at("provenance"));
      c.features_file = cj.at("features_file").get<std::string>();
      c.n = cj.at("n").get<std::size_t>();
      for (const auto& rj : cj.at("results")) c.results.push_back(result_from_json(rj));
      o.comparisons.push_back(std::move(c));
    }
    return o;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed measure document: ") + e.what());
  }
}

void write_json_file(const json& doc, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_measure(const MeasureOutput& output, const std::filesystem::path& path) {
  write_json_file(to_json(output), path);
}

MeasureOutput read_measure(const std::filesystem::path& path) {
  return measure_from_json(read_json_file(path));
}

std::set<MetricKind> parse_metric_list(const std::string& text) {
  std::set<MetricKind> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) {
      try {
        out.insert(metrics::metric_kind_from_string(item));
      } catch (const ValidationError& e) {
        throw UsageError(e.what());
      }
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw UsageError("metric list is empty");
  return out;
}

}  // namespace repgap::measure
