#include "repgap/cli.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "repgap/error.hpp"
#include "repgap/measure.hpp"
#include "repgap/pipeline.hpp"
#include "repgap/report.hpp"
#include "repgap/synthetic.hpp"

namespace repgap::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (auto env = pipeline::seed_from_environment()) return *env;
  return corpus::kDefaultSeed;
}

json summarize_ttest(const stats::TTestResult& r) {
  return {{"t", r.t}, {"df", r.df}, {"p_one_tailed", r.p_one_tailed}, {"decision", stats::to_string(r.decision)}};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"repgap: closeness of anomalous and anomaly-free image domains"};
  app.require_subcommand(1);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "Cut paired defect / foreground / background crops");
  fs::path prep_manifest, prep_out;
  int prep_size = corpus::kDefaultTargetSize;
  std::optional<std::uint64_t> prep_seed;
  prepare->add_option("--manifest", prep_manifest, "Annotation manifest (JSON)")->required();
  prepare->add_option("--out", prep_out, "Output crop directory")->required();
  prepare->add_option("--size", prep_size, "Target crop size")->capture_default_str();
  prepare->add_option("--seed", prep_seed, "Placement seed (default 42, or REPGAP_SEED)");

  // measure
  auto* measure = app.add_subcommand("measure", "Set metrics between defect and comparison features");
  fs::path m_defect, m_normal, m_out;
  std::optional<fs::path> m_background;
  std::string m_metrics = "js,mh,ws";
  measure->add_option("--defect", m_defect, "Defect feature file (FGAP)")->required();
  measure->add_option("--normal", m_normal, "Foreground feature file (FGAP)")->required();
  measure->add_option("--background", m_background, "Background feature file (FGAP)");
  measure->add_option("--metrics", m_metrics, "Comma-separated subset of js,mh,ws")->capture_default_str();
  measure->add_option("--out", m_out, "Output JSON")->required();

  // rmi
  auto* rmi = app.add_subcommand("rmi", "Regional mutual information between paired crops");
  fs::path r_pairs, r_out;
  int r_region = metrics::kDefaultRmiRegion;
  rmi->add_option("--pairs", r_pairs, "pairs.json of a crop set")->required();
  rmi->add_option("--region", r_region, "Neighbourhood size (odd)")->capture_default_str();
  rmi->add_option("--out", r_out, "Output CSV")->required();

  // ttest
  auto* ttest = app.add_subcommand("ttest", "One-tailed two-sample t-test of foreground vs background values");
  fs::path t_a, t_b, t_out;
  double t_alpha = 0.05;
  std::string t_tail = "lower";
  pipeline::TestContext t_ctx;
  ttest->add_option("--group-a", t_a, "Foreground values (CSV)")->required();
  ttest->add_option("--group-b", t_b, "Background values (CSV)")->required();
  ttest->add_option("--alpha", t_alpha, "Significance level")->capture_default_str();
  ttest->add_option("--tail", t_tail, "lower or upper")->check(CLI::IsMember({"lower", "upper"}))->capture_default_str();
  ttest->add_option("--out", t_out, "Output JSON")->required();
  ttest->add_option("--dataset", t_ctx.dataset, "Context: dataset name");
  ttest->add_option("--object", t_ctx.object_type, "Context: object type");
  ttest->add_option("--class", t_ctx.anomaly_class, "Context: anomaly class");
  ttest->add_option("--backbone", t_ctx.backbone_name, "Context: backbone name");
  ttest->add_option("--pretrain", t_ctx.pretrain_dataset, "Context: pretraining dataset");
  ttest->add_option("--metric", t_ctx.metric, "Context: metric tested (JS, MH, WS, RMI)");

  // report
  auto* rep = app.add_subcommand("report", "Aggregate measure, t-test and RMI outputs into tables");
  fs::path rep_in, rep_out;
  std::string rep_format = "csv";
  rep->add_option("--in", rep_in, "Directory of measure / ttest JSON and RMI CSV")->required();
  rep->add_option("--out", rep_out, "Output directory")->required();
  rep->add_option("--format", rep_format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  // export-embeddings
  auto* emb = app.add_subcommand("export-embeddings", "Concatenate feature files into one labelled CSV");
  std::vector<fs::path> emb_in;
  fs::path emb_out;
  emb->add_option("--in", emb_in, "Feature files (FGAP)")->required()->expected(1, -1);
  emb->add_option("--out", emb_out, "Output CSV")->required();

  // verify-bounds
  auto* verify = app.add_subcommand("verify-bounds", "Check metric values against their theoretical ranges");
  fs::path v_in;
  std::optional<fs::path> v_out;
  verify->add_option("--in", v_in, "Measure JSON")->required();
  verify->add_option("--out", v_out, "Diagnostics JSON (default: stdout)");

  // run
  auto* run = app.add_subcommand("run", "Full pipeline: prepare, measure, rmi, ttest, report, verify-bounds");
  std::optional<fs::path> run_config;
  std::optional<fs::path> run_manifest, run_out;
  std::optional<std::uint64_t> run_seed;
  std::optional<int> run_size, run_region;
  std::optional<std::string> run_metrics, run_tail, run_format;
  std::optional<double> run_alpha;
  run->add_option("--config", run_config, "Run configuration (JSON); flags override it");
  run->add_option("--manifest", run_manifest, "Annotation manifest (JSON)");
  run->add_option("--out", run_out, "Output directory");
  run->add_option("--seed", run_seed, "Placement seed (default 42, or REPGAP_SEED)");
  run->add_option("--size", run_size, "Target crop size (default 64)");
  run->add_option("--metrics", run_metrics, "Comma-separated subset of js,mh,ws (default all)");
  run->add_option("--alpha", run_alpha, "Significance level (default 0.05)");
  run->add_option("--tail", run_tail, "lower or upper (default lower)")->check(CLI::IsMember({"lower", "upper"}));
  run->add_option("--region", run_region, "RMI neighbourhood size (default 3)");
  run->add_option("--format", run_format, "Report table format, csv or json (default csv)")
      ->check(CLI::IsMember({"csv", "json"}));

  // helpers
  auto* adapt = app.add_subcommand("adapt-mvtec", "Write a manifest for an MVTec-AD style directory tree");
  fs::path a_root, a_out;
  std::string a_object;
  adapt->add_option("--root", a_root, "Dataset root")->required();
  adapt->add_option("--object", a_object, "Object category, e.g. bottle")->required();
  adapt->add_option("--out", a_out, "Output manifest path")->required();

  auto* featurize = app.add_subcommand("featurize", "Built-in histogram descriptor features for a crop set");
  fs::path f_pairs, f_out;
  std::string f_kind;
  std::optional<std::string> f_object, f_class;
  featurize->add_option("--pairs", f_pairs, "pairs.json of a crop set")->required();
  featurize->add_option("--kind", f_kind, "defect, normal_fg or background")
      ->required()
      ->check(CLI::IsMember({"defect", "normal_fg", "background"}));
  featurize->add_option("--object", f_object, "Restrict to one object type");
  featurize->add_option("--class", f_class, "Restrict to one anomaly class");
  featurize->add_option("--out", f_out, "Output FGAP file")->required();

  auto* fixture = app.add_subcommand("make-fixture", "Generate a small synthetic inspection corpus");
  fs::path fx_out;
  synthetic::FixtureOptions fx;
  fixture->add_option("--out", fx_out, "Output directory")->required();
  fixture->add_option("--images-per-class", fx.images_per_class, "Images per defect class")->capture_default_str();
  fixture->add_option("--fixture-seed", fx.seed, "Generator seed")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    if (app.get_subcommands().empty()) {
      out << app.help("", CLI::AppFormatMode::All);
    } else {
      out << app.get_subcommands().front()->help();
    }
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorCategory::usage);
  }

  try {
    if (prepare->parsed()) {
      const auto index = pipeline::prepare(prep_manifest, prep_out, prep_size, resolve_seed(prep_seed));
      out << index.pairs.size() << " pairs written, " << index.skipped.size() << " regions skipped\n";
    } else if (measure->parsed()) {
      pipeline::measure_files(m_defect, m_normal, m_background, measure::parse_metric_list(m_metrics), m_out);
    } else if (rmi->parsed()) {
      pipeline::write_rmi_csv(r_pairs, r_region, r_out);
    } else if (ttest->parsed()) {
      const auto r = pipeline::ttest_files(t_a, t_b, t_alpha, stats::tail_from_string(t_tail));
      measure::write_json_file(pipeline::ttest_to_json(r, t_ctx), t_out);
      out << summarize_ttest(r).dump() << "\n";
    } else if (rep->parsed()) {
      for (const auto& p : pipeline::build_report(rep_in, rep_out, rep_format)) {
        out << p.lexically_relative(rep_out).generic_string() << "\n";
      }
    } else if (emb->parsed()) {
      std::vector<featstore::FeatureMatrix> matrices;
      for (const auto& p : emb_in) matrices.push_back(featstore::read_features(p));
      report::export_embeddings(matrices, emb_out);
    } else if (verify->parsed()) {
      bool all_passed = true;
      json doc = pipeline::verify_measure_file(v_in, all_passed);
      doc["passed"] = all_passed;
      if (v_out) {
        measure::write_json_file(doc, *v_out);
      } else {
        out << doc.dump(2) << "\n";
      }
      if (!all_passed) {
        err << "error: bound violation in " << v_in.string() << "\n";
        return static_cast<int>(ErrorCategory::numerical);
      }
    } else if (run->parsed()) {
      pipeline::RunConfig config;
      if (auto env = pipeline::seed_from_environment()) config.seed = *env;
      if (run_config) pipeline::apply_config_json(config, measure::read_json_file(*run_config));
      if (run_manifest) config.manifest = *run_manifest;
      if (run_out) config.out = *run_out;
      if (run_seed) config.seed = *run_seed;
      if (run_size) config.target_size = *run_size;
      if (run_metrics) config.metrics = measure::parse_metric_list(*run_metrics);
      if (run_alpha) config.alpha = *run_alpha;
      if (run_tail) config.tail = stats::tail_from_string(*run_tail);
      if (run_region) config.rmi_region = *run_region;
      if (run_format) config.format = *run_format;
      pipeline::run_pipeline(config, out);
    } else if (adapt->parsed()) {
      corpus::save_manifest(corpus::adapt_mvtec(a_root, a_object), a_out);
    } else if (featurize->parsed()) {
      featstore::write_features(
          pipeline::featurize(f_pairs, featstore::sample_kind_from_string(f_kind), f_object, f_class), f_out);
    } else if (fixture->parsed()) {
      out << synthetic::write_fixture(fx_out, fx).generic_string() << "\n";
    }
  } catch (const pipeline::StageError& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace repgap::cli
