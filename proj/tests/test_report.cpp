#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "repgap/error.hpp"
#include "repgap/report.hpp"
#include "test_support.hpp"

namespace repgap::report {
namespace {

using repgap::testing::slurp;
using repgap::testing::TempDir;

MetricRecord rec(const std::string& cls, const std::string& backbone, Measure m, double v,
                 const std::string& dataset = "steel", const std::string& pretrain = "IN1K") {
  MetricRecord r;
  r.dataset = dataset;
  r.object_type = "surface";
  r.anomaly_class = cls;
  r.backbone_name = backbone;
  r.pretrain_dataset = pretrain;
  r.metric = m;
  r.value = v;
  r.n = 10;
  r.p = 4;
  return r;
}

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

TEST(AggregateByClass, SingleRecord) {
  const auto a = aggregate_by_class({rec("patches", "bit", Measure::js, 0.25)});
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].mean_over_backbones, 0.25);
  EXPECT_EQ(a[0].backbone_count, 1);
}

TEST(AggregateByClass, ThreeBackbones) {
  const auto a = aggregate_by_class({rec("c", "a", Measure::mh, 10), rec("c", "b", Measure::mh, 20),
                                     rec("c", "c", Measure::mh, 30)});
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].mean_over_backbones, 20.0);
  EXPECT_EQ(a[0].backbone_count, 3);
}

TEST(AggregateByClass, SixBackboneMean) {
  std::vector<MetricRecord> records;
  const std::vector<std::pair<std::string, double>> cells{
      {"bit-s-r50x1", 24}, {"bit-s-r101x1", 11}, {"bit-m-r50x1", 7},
      {"bit-m-r101x1", 2}, {"bit-s-r50x3", 11}, {"bit-m-r50x3", 9}};
  for (const auto& [bb, v] : cells) records.push_back(rec("patches", bb, Measure::js, v * 1e-4, "NEU"));
  const auto a = aggregate_by_class(records);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_NEAR(a[0].mean_over_backbones, 10.67e-4, 0.005e-4);
  EXPECT_EQ(a[0].backbone_count, 6);
}

TEST(AggregateByClass, DuplicateNamed) {
  try {
    aggregate_by_class({rec("crack", "vit", Measure::js, 1), rec("crack", "vit", Measure::js, 2)});
    FAIL();
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("crack"), std::string::npos) << what;
    EXPECT_NE(what.find("vit"), std::string::npos) << what;
  }
}

TEST(AggregateByClass, FuzzBruteForceAndPermutation) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int t = 0; t < 100; ++t) {
    std::vector<MetricRecord> records;
    std::map<std::pair<std::string, Measure>, std::vector<double>> brute;
    for (int c = 0; c < 3; ++c) {
      for (int b = 0; b < 1 + static_cast<int>(rng() % 6); ++b) {
        for (Measure m : {Measure::js, Measure::ws}) {
          const double v = u(rng);
          records.push_back(rec("class" + std::to_string(c), "bb" + std::to_string(b), m, v));
          brute[{"class" + std::to_string(c), m}].push_back(v);
        }
      }
    }
    const auto a = aggregate_by_class(records);
    ASSERT_EQ(a.size(), brute.size());
    for (const auto& agg : a) {
      const auto& vals = brute.at({agg.key.anomaly_class, agg.key.metric});
      double s = 0;
      for (double v : vals) s += v;
      EXPECT_NEAR(agg.mean_over_backbones, s / static_cast<double>(vals.size()), 1e-12);
      EXPECT_EQ(agg.backbone_count, static_cast<int>(vals.size()));
    }
    std::shuffle(records.begin(), records.end(), rng);
    EXPECT_EQ(aggregate_by_class(records), a);
  }
}

TEST(PctOfBound, Examples) {
  auto mk = [](const std::string& dataset, double mean) {
    ClassAggregate a;
    a.key = {dataset, "x", Measure::mh, ""};
    a.mean_over_backbones = mean;
    a.backbone_count = 1;
    return a;
  };
  const auto out = pct_of_bound_report({mk("BTAD", 37.2), mk("NEU", 102.7), mk("zero", 0.0)},
                                       {{"BTAD", 495.1}, {"NEU", 882.1}, {"zero", 10.0}});
  EXPECT_NEAR(*out[0].pct_of_bound, 7.5, 0.05);
  EXPECT_NEAR(*out[1].pct_of_bound, 11.6, 0.05);
  EXPECT_EQ(*out[2].pct_of_bound, 0.0);
  EXPECT_EQ(*out[0].bound, 495.1);
  EXPECT_THROW(pct_of_bound_report({mk("other", 1.0)}, {{"BTAD", 495.1}}), ValidationError);
}

TEST(PctOfBound, BoundsFromRecordMetadata) {
  auto a = rec("x", "b1", Measure::mh, 1.0, "BTAD");
  a.n = 497;
  a.p = 1000;
  auto b = rec("y", "b1", Measure::mh, 1.0, "BTAD");
  b.n = 120;
  b.p = 1000;
  const auto bounds = mh_bounds_from_records({a, b, rec("x", "b1", Measure::js, 0.1, "BTAD")});
  ASSERT_EQ(bounds.size(), 1u);
  EXPECT_NEAR(bounds.at("BTAD"), 495.1, 0.5);
}

std::vector<ClassAggregate> two_aggregates() {
  return aggregate_by_class({rec("crack", "a", Measure::js, 0.001), rec("crack", "a", Measure::ws, 0.9)});
}

TEST(EmitTables, CsvShapeAndDeterminism) {
  TempDir dir;
  const auto path = emit_tables(two_aggregates(), TableFormat::csv, dir / "a");
  const std::string first = slurp(path);
  EXPECT_EQ(line_count(first), 3u);
  EXPECT_EQ(first.substr(0, first.find('\n')),
            "dataset,anomaly_class,metric,tested_metric,mean_over_backbones,backbone_count,bound,pct_of_bound");
  emit_tables(two_aggregates(), TableFormat::csv, dir / "b");
  EXPECT_EQ(first, slurp(dir / "b" / "class_aggregates.csv"));
  EXPECT_THROW(emit_tables({}, TableFormat::csv, dir / "c"), ValidationError);
}

TEST(EmitTables, JsonRoundTrip) {
  TempDir dir;
  auto aggs = two_aggregates();
  aggs[0].bound = 12.5;
  aggs[0].pct_of_bound = 0.1 / 3.0;
  const auto path = emit_tables(aggs, TableFormat::json, dir.path());
  EXPECT_EQ(read_aggregates_json(path), aggs);
}

TEST(EmitBackboneTables, ColumnsBackboneThenPretrain) {
  TempDir dir;
  const auto files = emit_backbone_tables(
      {rec("crack", "vit-b", Measure::js, 1, "d", "IN21K"), rec("crack", "vit-b", Measure::js, 2, "d", "IN1K"),
       rec("crack", "beit", Measure::js, 3, "d", "IN22K")},
      TableFormat::csv, dir.path());
  ASSERT_EQ(files.size(), 1u);
  EXPECT_EQ(slurp(files[0]),
            "dataset,object_type,anomaly_class,beit/IN22K,vit-b/IN1K,vit-b/IN21K\n"
            "d,surface,crack,3,2,1\n");
}

TEST(EmitPlotData, ClassCurvesOneRowPerClass) {
  TempDir dir;
  std::vector<MetricRecord> records;
  for (const char* c : {"a", "b", "c", "d"}) records.push_back(rec(c, "bb", Measure::js, 0.5));
  const auto files = emit_plot_data(records, PlotKind::class_curves, dir.path());
  ASSERT_EQ(files.size(), 1u);
  EXPECT_EQ(files[0].filename(), "class_curves_steel.csv");
  EXPECT_EQ(line_count(slurp(files[0])), 5u);
}

TEST(EmitPlotData, NoMatchingRecords) {
  TempDir dir;
  try {
    emit_plot_data({rec("a", "pixel", Measure::rmi, 3.0)}, PlotKind::pvalue_bars, dir.path());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("no matching records"), std::string::npos);
  }
}

TEST(EmitPlotData, ScatterColumnsEqualInput) {
  TempDir dir;
  const auto files = emit_plot_data({rec("b", "pixel", Measure::rmi, 2.5), rec("a", "pixel", Measure::rmi, -1.25)},
                                    PlotKind::rmi_scatter, dir.path());
  EXPECT_EQ(slurp(files[0]), "anomaly_class,object_type,value\na,surface,-1.25\nb,surface,2.5\n");
}

featstore::FeatureMatrix matrix(int n, int p, featstore::SampleKind kind, const std::string& prefix) {
  featstore::FeatureMatrix m;
  m.values = featstore::RowMatrixF::Constant(n, p, 0.5f);
  m.meta.kind = kind;
  for (int i = 0; i < n; ++i) m.sample_ids.push_back(prefix + std::to_string(i));
  return m;
}

TEST(ExportEmbeddings, LabelledRows) {
  TempDir dir;
  export_embeddings({matrix(3, 8, featstore::SampleKind::defect, "d"), matrix(3, 8, featstore::SampleKind::normal_fg, "n")},
                    dir / "e.csv");
  const std::string text = slurp(dir / "e.csv");
  EXPECT_EQ(line_count(text), 7u);
  EXPECT_EQ(text.substr(0, text.find('\n')), "label,sample_id,f0,f1,f2,f3,f4,f5,f6,f7");
  EXPECT_NE(text.find("\ndefect,d0,0.5,"), std::string::npos);
  EXPECT_NE(text.find("\nnormal_fg,n2,0.5,"), std::string::npos);
  EXPECT_THROW(export_embeddings({matrix(3, 8, featstore::SampleKind::defect, "d"),
                                  matrix(3, 4, featstore::SampleKind::normal_fg, "n")},
                                 dir / "bad.csv"),
               ValidationError);
}

TEST(ExportEmbeddings, ShuffledInputKeepsRowCount) {
  TempDir dir;
  std::vector<featstore::FeatureMatrix> ms{matrix(2, 3, featstore::SampleKind::defect, "d"),
                                           matrix(5, 3, featstore::SampleKind::normal_fg, "n"),
                                           matrix(4, 3, featstore::SampleKind::background, "b")};
  export_embeddings(ms, dir / "a.csv");
  std::reverse(ms.begin(), ms.end());
  export_embeddings(ms, dir / "b.csv");
  EXPECT_EQ(line_count(slurp(dir / "a.csv")), 12u);
  EXPECT_EQ(line_count(slurp(dir / "b.csv")), 12u);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}

}  // namespace
}  // namespace repgap::report
