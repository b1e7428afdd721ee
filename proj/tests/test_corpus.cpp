#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "json.hpp"
#include "repgap/corpus.hpp"
#include "repgap/error.hpp"
#include "test_support.hpp"

namespace repgap::corpus {
namespace {

using nlohmann::json;
using repgap::testing::slurp;
using repgap::testing::spit;
using repgap::testing::TempDir;

// Even-odd point-in-polygon test at a pixel center.
bool inside_oracle(const Polygon& poly, double x, double y) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

Polygon random_star(std::mt19937_64& rng, ImageSize size) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double cx = 10 + unit(rng) * (size.width - 20);
  const double cy = 10 + unit(rng) * (size.height - 20);
  const int k = 3 + static_cast<int>(unit(rng) * 8);
  std::vector<double> angles(k);
  for (auto& a : angles) a = unit(rng) * 2 * std::numbers::pi;
  std::sort(angles.begin(), angles.end());
  Polygon poly;
  for (double a : angles) {
    const double r = 2 + unit(rng) * 14;
    poly.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
  }
  return poly;
}

TEST(BestFitBBox, TwoPixelMask) {
  BinaryMask mask({10, 10});
  mask.set(2, 3);
  mask.set(5, 7);
  const BBox box = best_fit_bbox(mask);
  EXPECT_EQ(box.top, 2);
  EXPECT_EQ(box.bottom(), 5);
  EXPECT_EQ(box.left, 3);
  EXPECT_EQ(box.right(), 7);
}

TEST(BestFitBBox, BoxIsIdentity) {
  const BBox box{4, 9, 3, 11};
  EXPECT_EQ(best_fit_bbox(box), box);
  RegionAnnotation ann{box, "dent"};
  EXPECT_EQ(best_fit_bbox(ann, ".", {40, 40}), box);
}

TEST(BestFitBBox, EmptyMaskThrows) {
  try {
    best_fit_bbox(BinaryMask({5, 5}));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "empty annotation");
  }
}

TEST(BestFitBBox, RandomPolygonsMatchPixelScan) {
  std::mt19937_64 rng(2024);
  const ImageSize size{60, 80};
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Polygon poly = random_star(rng, size);
    BinaryMask mask;
    try {
      mask = rasterize(poly, size);
    } catch (const ValidationError&) {
      continue;  // collinear draws
    }
    BinaryMask oracle(size);
    for (int r = 0; r < size.height; ++r) {
      for (int c = 0; c < size.width; ++c) {
        if (inside_oracle(poly, c + 0.5, r + 0.5)) oracle.set(r, c);
      }
    }
    for (int r = 0; r < size.height; ++r) {
      for (int c = 0; c < size.width; ++c) ASSERT_EQ(mask.test(r, c), oracle.test(r, c)) << trial;
    }
    if (oracle.count() == 0) continue;
    EXPECT_EQ(best_fit_bbox(poly, size), best_fit_bbox(oracle));
    ++checked;
  }
  EXPECT_GT(checked, 250);
}

TEST(Polygon, RejectsInvalidShapes) {
  EXPECT_THROW(validate_polygon({{0, 0}, {1, 1}}), ValidationError);
  EXPECT_THROW(validate_polygon({{0, 0}, {1, 1}, {2, 2}}), ValidationError);
  // bow tie
  EXPECT_THROW(validate_polygon({{0, 0}, {10, 10}, {10, 0}, {0, 10}}), ValidationError);
  EXPECT_NO_THROW(validate_polygon({{0, 0}, {10, 0}, {10, 10}, {0, 10}}));
}

TEST(Geometry, OverlapAndIou) {
  const BBox a{0, 0, 10, 10};
  const BBox b{5, 5, 10, 10};
  EXPECT_EQ(overlap_area(a, b), 25);
  EXPECT_DOUBLE_EQ(iou(a, b), 25.0 / 175.0);
  EXPECT_EQ(overlap_area(a, BBox{10, 0, 3, 3}), 0);
  EXPECT_EQ(clip_to(BBox{-3, 60, 10, 10}, {64, 64}), (BBox{0, 60, 7, 4}));
}

TEST(Geometry, MaskIntegralMatchesBruteForce) {
  std::mt19937_64 rng(5);
  BinaryMask mask({17, 23});
  for (int r = 0; r < 17; ++r) {
    for (int c = 0; c < 23; ++c) {
      if (rng() % 3 == 0) mask.set(r, c);
    }
  }
  const MaskIntegral integral(mask);
  EXPECT_EQ(integral.total(), mask.count());
  for (int t = 0; t < 200; ++t) {
    const int top = static_cast<int>(rng() % 17), left = static_cast<int>(rng() % 23);
    const BBox box{top, left, 1 + static_cast<int>(rng() % (17 - top)), 1 + static_cast<int>(rng() % (23 - left))};
    long long brute = 0;
    for (int r = box.top; r <= box.bottom(); ++r) {
      for (int c = box.left; c <= box.right(); ++c) brute += mask.test(r, c);
    }
    EXPECT_EQ(integral.count(box), brute);
  }
}

// --- manifest ---------------------------------------------------------------

void write_gray(const std::filesystem::path& path, int h, int w, std::uint8_t v) {
  std::filesystem::create_directories(path.parent_path());
  write_png(Image(h, w, 1, v), path);
}

json two_record_manifest() {
  return {{"schema_version", "1.0"},
          {"dataset_name", "toy"},
          {"classes", {"crack", "hole"}},
          {"records",
           {{{"image_path", "img/a.png"},
             {"object_type", "plate"},
             {"defect_regions",
              {{{"kind", "bbox"}, {"bbox", {{"x", 2}, {"y", 3}, {"width", 5}, {"height", 4}}}, {"anomaly_class", "crack"}}}}},
            {{"image_path", "img/b.png"},
             {"object_type", "plate"},
             {"defect_regions",
              {{{"kind", "polygon"}, {"points", {{1, 1}, {9, 1}, {9, 6}}}, {"anomaly_class", "hole"}}}}}}}};
}

TEST(Manifest, LoadsTwoRecords) {
  TempDir dir;
  write_gray(dir / "img/a.png", 20, 20, 100);
  write_gray(dir / "img/b.png", 20, 20, 100);
  spit(dir / "m.json", two_record_manifest().dump());
  const auto m = load_manifest(dir / "m.json");
  ASSERT_EQ(m.records.size(), 2u);
  EXPECT_EQ(m.dataset_name, "toy");
  EXPECT_EQ(m.records[0].defect_regions[0].kind(), "bbox");
  EXPECT_EQ(m.records[1].defect_regions[0].kind(), "polygon");
  EXPECT_EQ(m.records[0].image_id(), "img-a");
}

TEST(Manifest, DegenerateBboxRejected) {
  TempDir dir;
  write_gray(dir / "img/a.png", 20, 20, 100);
  write_gray(dir / "img/b.png", 20, 20, 100);
  json j = two_record_manifest();
  j["records"][0]["defect_regions"][0]["bbox"]["width"] = 0;
  spit(dir / "m.json", j.dump());
  try {
    load_manifest(dir / "m.json");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate bbox"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("record[0]"), std::string::npos) << e.what();
  }
}

TEST(Manifest, SchemaViolations) {
  TempDir dir;
  write_gray(dir / "img/a.png", 20, 20, 100);
  write_gray(dir / "img/b.png", 20, 20, 100);

  json unknown = two_record_manifest();
  unknown["records"][1]["extra"] = 1;
  spit(dir / "m.json", unknown.dump());
  EXPECT_THROW(load_manifest(dir / "m.json"), ValidationError);

  json bad_class = two_record_manifest();
  bad_class["records"][1]["defect_regions"][0]["anomaly_class"] = "scratch";
  spit(dir / "m.json", bad_class.dump());
  EXPECT_THROW(load_manifest(dir / "m.json"), ValidationError);

  json missing = two_record_manifest();
  missing["records"][1]["image_path"] = "img/nope.png";
  spit(dir / "m.json", missing.dump());
  try {
    load_manifest(dir / "m.json");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("nope.png"), std::string::npos);
  }
}

TEST(Manifest, SaveLoadRoundTrip) {
  TempDir dir;
  write_gray(dir / "img/a.png", 20, 20, 100);
  write_gray(dir / "img/b.png", 20, 20, 100);
  spit(dir / "m.json", two_record_manifest().dump());
  const auto m = load_manifest(dir / "m.json");
  save_manifest(m, dir / "copy" / "m2.json");
  const auto again = load_manifest(dir / "copy" / "m2.json");
  save_manifest(again, dir / "copy" / "m3.json");
  EXPECT_EQ(slurp(dir / "copy" / "m2.json"), slurp(dir / "copy" / "m3.json"));
  EXPECT_EQ(again.records.size(), 2u);
}

// --- MVTec adapter ----------------------------------------------------------

void mvtec_tree(const std::filesystem::path& root, bool with_masks, int mask_width = 16) {
  write_gray(root / "widget/test/good/000.png", 16, 16, 90);
  write_gray(root / "widget/test/hole/000.png", 16, 16, 90);
  write_gray(root / "widget/test/hole/001.png", 16, 16, 90);
  std::filesystem::create_directories(root / "widget/ground_truth/hole");
  if (with_masks) {
    Image mask(16, mask_width, 1, 0);
    mask.at(4, 4) = 255;
    mask.at(6, 7) = 255;
    write_png(mask, root / "widget/ground_truth/hole/000_mask.png");
    write_png(mask, root / "widget/ground_truth/hole/001_mask.png");
  }
}

TEST(MvtecAdapter, MaskedClass) {
  TempDir dir;
  mvtec_tree(dir.path(), true);
  const auto m = adapt_mvtec(dir.path(), "widget");
  EXPECT_EQ(m.classes, std::vector<std::string>{"hole"});
  std::size_t defect_records = 0;
  for (const auto& r : m.records) {
    ASSERT_TRUE(r.foreground_region.has_value());
    if (r.defect_regions.empty()) continue;
    ++defect_records;
    EXPECT_EQ(*r.defect_regions[0].anomaly_class, "hole");
    EXPECT_EQ(best_fit_bbox(r.defect_regions[0], dir.path(), {16, 16}), (BBox{4, 4, 3, 4}));
  }
  EXPECT_EQ(defect_records, 2u);

  save_manifest(m, dir / "manifest.json");
  const auto loaded = load_manifest(dir / "manifest.json");
  ASSERT_EQ(loaded.records.size(), m.records.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    EXPECT_EQ(loaded.records[i].image_path, m.records[i].image_path);
    EXPECT_EQ(loaded.records[i].defect_regions.size(), m.records[i].defect_regions.size());
  }
  EXPECT_EQ(std::filesystem::weakly_canonical(loaded.root), std::filesystem::weakly_canonical(dir.path()));
}

TEST(MvtecAdapter, EmptyGroundTruth) {
  TempDir dir;
  mvtec_tree(dir.path(), false);
  const auto m = adapt_mvtec(dir.path(), "widget");
  for (const auto& r : m.records) EXPECT_TRUE(r.defect_regions.empty());
}

TEST(MvtecAdapter, MaskSizeMismatch) {
  TempDir dir;
  mvtec_tree(dir.path(), true, 12);
  EXPECT_THROW(adapt_mvtec(dir.path(), "widget"), ValidationError);
}

TEST(MvtecAdapter, LayoutMismatchListsPaths) {
  TempDir dir;
  write_gray(dir / "widget/train/good/000.png", 8, 8, 1);
  try {
    adapt_mvtec(dir.path(), "widget");
    FAIL();
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("ground_truth"), std::string::npos);
    EXPECT_NE(what.find("train"), std::string::npos);
  }
}

// --- placement --------------------------------------------------------------

ResolvedRecord full_foreground(ImageSize size, std::vector<BBox> defects) {
  ResolvedRecord r;
  r.size = size;
  r.foreground = BinaryMask(size, true);
  r.foreground_integral = MaskIntegral(r.foreground);
  for (const auto& d : defects) {
    r.defect_masks.push_back(BinaryMask::from_box(d, size));
    r.defect_boxes.push_back(d);
  }
  return r;
}

TEST(PairedFgCrop, CornerDefectGolden) {
  const BBox defect{0, 0, 10, 10};
  const auto record = full_foreground({64, 64}, {defect});
  const Placement a = paired_fg_crop(record, defect, 42);
  const Placement b = paired_fg_crop(record, defect, 42);
  EXPECT_EQ(a.box, b.box);
  EXPECT_FALSE(a.relaxed);
  EXPECT_EQ(a.box.size(), defect.size());
  EXPECT_EQ(iou(a.box, defect), 0.0);
  EXPECT_EQ(a.box, (BBox{46, 44, 10, 10}));
}

TEST(PairedFgCrop, DefectCoveringForeground) {
  ResolvedRecord r;
  r.size = {32, 32};
  r.foreground = BinaryMask::from_box({4, 4, 10, 10}, r.size);
  r.foreground_integral = MaskIntegral(r.foreground);
  r.defect_boxes = {{4, 4, 10, 10}};
  r.defect_masks = {r.foreground};
  try {
    paired_fg_crop(r, r.defect_boxes[0], 1);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("no anomaly-free placement"), std::string::npos);
  }
}

TEST(PairedFgCrop, RelaxedPhaseFlagsOverlap) {
  // A 12x12 foreground with a 2x2 defect in its middle cannot hold a disjoint
  // 10x10 box, but some placements overlap by IoU <= 0.10.
  ResolvedRecord r;
  r.size = {40, 40};
  r.foreground = BinaryMask::from_box({10, 10, 12, 12}, r.size);
  r.foreground_integral = MaskIntegral(r.foreground);
  const BBox defect{15, 15, 2, 2};
  r.defect_boxes = {defect};
  r.defect_masks = {BinaryMask::from_box(defect, r.size)};
  const BBox request{0, 0, 10, 10};
  const Placement p = paired_fg_crop(r, request, 3);
  EXPECT_TRUE(p.relaxed);
  EXPECT_LE(p.max_iou, kRelaxedMaxIou);
  EXPECT_GT(p.max_iou, 0.0);
}

TEST(PairedBgCrop, LeftHalfForegroundGolden) {
  ResolvedRecord r;
  r.size = {64, 64};
  r.foreground = BinaryMask::from_box({0, 0, 64, 32}, r.size);
  r.foreground_integral = MaskIntegral(r.foreground);
  const BBox defect{20, 10, 8, 8};
  r.defect_boxes = {defect};
  r.defect_masks = {BinaryMask::from_box(defect, r.size)};
  const Placement a = paired_bg_crop(r, defect, 42);
  EXPECT_GE(a.box.left, 32);
  EXPECT_EQ(a.box.size(), defect.size());
  EXPECT_EQ(a.box, paired_bg_crop(r, defect, 42).box);
  EXPECT_EQ(a.box, (BBox{49, 51, 8, 8}));
}

TEST(PairedBgCrop, FullForegroundHasNoBackground) {
  const BBox defect{0, 0, 8, 8};
  const auto record = full_foreground({32, 32}, {defect});
  try {
    paired_bg_crop(record, defect, 42);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "no background available");
  }
}

// --- patches ----------------------------------------------------------------

TEST(NormalizePatch, ThirtyByTwenty) {
  PixelPatch p{Image(30, 20, 1, 200), {30, 20}};
  const PixelPatch out = normalize_patch(p, 64);
  ASSERT_EQ(out.pixels.size(), (ImageSize{64, 64}));
  EXPECT_EQ(out.original_size, (ImageSize{30, 20}));
  // 20 * 64 / 30 = 42.67 -> 43 columns, left pad (64 - 43) / 2 = 10
  for (int r = 0; r < 64; ++r) {
    for (int c = 0; c < 64; ++c) {
      const bool content = c >= 10 && c < 53;
      EXPECT_EQ(out.pixels.at(r, c), content ? 200 : 0) << r << "," << c;
    }
  }
}

TEST(NormalizePatch, IdentityAtTargetSize) {
  std::mt19937_64 rng(9);
  PixelPatch p{Image(64, 64, 3), {64, 64}};
  for (auto& v : p.pixels.data()) v = static_cast<std::uint8_t>(rng());
  EXPECT_EQ(normalize_patch(p, 64), p);
}

TEST(NormalizePatch, WhiteStripPadsExactlyZero) {
  PixelPatch p{Image(10, 30, 1, 255), {10, 30}};
  const PixelPatch out = normalize_patch(p, 60);
  // content 20 x 60, rows 20..39
  for (int r = 0; r < 60; ++r) {
    for (int c = 0; c < 60; ++c) EXPECT_EQ(out.pixels.at(r, c), (r >= 20 && r < 40) ? 255 : 0);
  }
}

TEST(NormalizePatch, Idempotent) {
  std::mt19937_64 rng(11);
  PixelPatch p{Image(13, 29, 3), {13, 29}};
  for (auto& v : p.pixels.data()) v = static_cast<std::uint8_t>(rng());
  const PixelPatch once = normalize_patch(p, 32);
  EXPECT_EQ(normalize_patch(once, 32), once);
}

TEST(NormalizePatch, SinglePixelUpscales) {
  PixelPatch p{Image(1, 1, 1, 77), {1, 1}};
  const PixelPatch out = normalize_patch(p, 8);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) EXPECT_EQ(out.pixels.at(r, c), 77);
  }
  EXPECT_THROW(normalize_patch(p, 7), ValidationError);
}

TEST(ExtractPatch, OutsidePixelsAreZero) {
  Image img(4, 4, 1, 9);
  const PixelPatch p = extract_patch(img, {-1, 2, 3, 4});
  EXPECT_EQ(p.pixels.at(0, 0), 0);
  EXPECT_EQ(p.pixels.at(1, 0), 9);
  EXPECT_EQ(p.pixels.at(1, 1), 9);
  EXPECT_EQ(p.pixels.at(1, 2), 0);
}

// --- crop sets --------------------------------------------------------------

// Two 48x64 images, left 40 columns foreground; three bbox defects.
AnnotationManifest crop_fixture(const std::filesystem::path& root, bool impossible_third) {
  for (const char* name : {"a.png", "b.png"}) {
    Image img(48, 64, 3);
    for (int r = 0; r < 48; ++r) {
      for (int c = 0; c < 64; ++c) {
        for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = static_cast<std::uint8_t>((r * 7 + c * 3 + ch * 50) % 256);
      }
    }
    write_png(img, root / name);
  }
  AnnotationManifest m;
  m.dataset_name = "toy";
  m.classes = {"crack", "hole"};
  m.root = root;
  RegionAnnotation fg{BBox{0, 0, 48, 40}, std::nullopt};
  ImageRecord a{"a.png", "plate", {{BBox{2, 2, 6, 8}, "crack"}, {BBox{30, 20, 5, 5}, "hole"}}, fg};
  const BBox third = impossible_third ? BBox{0, 0, 46, 38} : BBox{10, 10, 7, 7};
  ImageRecord b{"b.png", "plate", {{third, "crack"}}, fg};
  m.records = {a, b};
  return m;
}

TEST(BuildCropSets, OnePairPerRegion) {
  TempDir dir;
  const auto m = crop_fixture(dir.path(), false);
  const CropSet set = build_crop_sets(m, 32, 42);
  ASSERT_EQ(set.pairs.size(), 3u);
  EXPECT_TRUE(set.skipped.empty());
  // grouped by (object_type, anomaly_class)
  EXPECT_EQ(set.pairs[0].anomaly_class, "crack");
  EXPECT_EQ(set.pairs[1].anomaly_class, "crack");
  EXPECT_EQ(set.pairs[2].anomaly_class, "hole");
  for (const auto& p : set.pairs) {
    EXPECT_EQ(p.defect_crop.pixels.size(), (ImageSize{32, 32}));
    EXPECT_EQ(p.normal_fg_crop.pixels.size(), p.defect_crop.pixels.size());
    ASSERT_TRUE(p.background_crop.has_value());
    EXPECT_EQ(p.background_crop->pixels.size(), p.defect_crop.pixels.size());
    EXPECT_EQ(p.fg_box.size(), p.box_size);
    EXPECT_EQ(p.bg_box->size(), p.box_size);
    EXPECT_GE(p.bg_box->left, 40);
    EXPECT_LE(p.fg_box.right(), 39);
    const auto& rec = p.source_image_id == "a" ? m.records[0] : m.records[1];
    for (const auto& region : rec.defect_regions) {
      EXPECT_EQ(iou(p.fg_box, std::get<BBox>(region.geometry)), 0.0);
    }
  }
  EXPECT_EQ(set.pairs[0].pair_id(), "a_crack_0");
}

TEST(BuildCropSets, ImpossiblePlacementIsSkipped) {
  TempDir dir;
  const CropSet set = build_crop_sets(crop_fixture(dir.path(), true), 32, 42);
  EXPECT_EQ(set.pairs.size(), 2u);
  ASSERT_EQ(set.skipped.size(), 1u);
  EXPECT_EQ(set.skipped[0].image_id, "b");
  EXPECT_EQ(set.skipped[0].region_index, 0);
}

TEST(BuildCropSets, PurityBlacksOutOtherDefects) {
  TempDir dir;
  auto m = crop_fixture(dir.path(), false);
  // square crack box so an 8 px target leaves pixels unscaled; the hole
  // overlaps its lower-right corner
  m.records[0].defect_regions[0].geometry = BBox{2, 2, 8, 8};
  m.records[0].defect_regions[1].geometry = BBox{4, 6, 6, 6};
  const CropSet set = build_crop_sets(m, 8, 42);
  const CropPair* crack = nullptr;
  for (const auto& p : set.pairs) {
    if (p.pair_id() == "a_crack_0") crack = &p;
  }
  ASSERT_NE(crack, nullptr);
  const Image image = read_png(dir / "a.png");
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      const bool in_hole = r + 2 >= 4 && c + 2 >= 6;
      for (int ch = 0; ch < 3; ++ch) {
        EXPECT_EQ(crack->defect_crop.pixels.at(r, c, ch), in_hole ? 0 : image.at(r + 2, c + 2, ch)) << r << "," << c;
      }
    }
  }
}

TEST(BuildCropSets, SeededRunsAreByteIdentical) {
  TempDir dir;
  const auto m = crop_fixture(dir.path(), false);
  write_crop_set(build_crop_sets(m, 32, 42), dir / "run1");
  write_crop_set(build_crop_sets(m, 32, 42), dir / "run2");
  write_crop_set(build_crop_sets(m, 32, 43), dir / "run3");
  std::size_t files = 0;
  bool any_seed_difference = false;
  for (const auto& entry : std::filesystem::directory_iterator(dir / "run1")) {
    const auto name = entry.path().filename();
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "run2" / name)) << name;
    if (slurp(entry.path()) != slurp(dir / "run3" / name)) any_seed_difference = true;
    ++files;
  }
  EXPECT_EQ(files, 3u * 3u + 1u);
  EXPECT_TRUE(any_seed_difference);
  const auto index = read_pairs_index(dir / "run1" / "pairs.json");
  EXPECT_EQ(index.pairs.size(), 3u);
  EXPECT_EQ(index.pairs[0].defect_file, "a_crack_0_defect.png");
  EXPECT_EQ(*index.pairs[0].bg_file, "a_crack_0_bg.png");
}

TEST(BuildCropSets, ZeroPairsIsAnError) {
  TempDir dir;
  auto m = crop_fixture(dir.path(), true);
  m.records.erase(m.records.begin());
  EXPECT_THROW(build_crop_sets(m, 32, 42), ValidationError);
}

TEST(BuildCropSets, NoDeclaredForegroundMeansWholeImageAndNoBackground) {
  TempDir dir;
  auto m = crop_fixture(dir.path(), false);
  for (auto& r : m.records) r.foreground_region.reset();
  const CropSet set = build_crop_sets(m, 32, 42);
  ASSERT_EQ(set.pairs.size(), 3u);
  for (const auto& p : set.pairs) EXPECT_FALSE(p.background_crop.has_value());
}

}  // namespace
}  // namespace repgap::corpus
