#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "json.hpp"
#include "repgap/corpus.hpp"
#include "repgap/error.hpp"

namespace repgap::corpus {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform integer in [0, bound). std::uniform_int_distribution is not
// specified bit-for-bit across standard libraries, so seeded placements would
// not be portable with it.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return draw % bound;
}

struct SearchWindow {
  int top_min, top_max, left_min, left_max;
  bool empty() const noexcept { return top_max < top_min || left_max < left_min; }
};

template <typename Accept>
std::optional<Placement> rejection_sample(const SearchWindow& window, ImageSize box_size,
                                          const std::vector<BBox>& defects, std::uint64_t seed,
                                          Accept&& accept) {
  if (window.empty()) return std::nullopt;
  std::mt19937_64 rng(seed);
  const auto rows = static_cast<std::uint64_t>(window.top_max - window.top_min + 1);
  const auto cols = static_cast<std::uint64_t>(window.left_max - window.left_min + 1);
  const auto draw = [&]() {
    const int top = window.top_min + static_cast<int>(uniform_below(rng, rows));
    const int left = window.left_min + static_cast<int>(uniform_below(rng, cols));
    return BBox{top, left, box_size.height, box_size.width};
  };
  for (int attempt = 0; attempt < kStrictAttempts; ++attempt) {
    const BBox box = draw();
    if (!accept(box)) continue;
    const bool disjoint = std::all_of(defects.begin(), defects.end(),
                                      [&](const BBox& d) { return overlap_area(box, d) == 0; });
    if (disjoint) return Placement{box, false, 0.0};
  }
  for (int attempt = 0; attempt < kRelaxedAttempts; ++attempt) {
    const BBox box = draw();
    if (!accept(box)) continue;
    double worst = 0.0;
    for (const auto& d : defects) worst = std::max(worst, iou(box, d));
    if (worst <= kRelaxedMaxIou) return Placement{box, true, worst};
  }
  return std::nullopt;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::size_t record_index, std::size_t region_index) {
  return splitmix64(seed ^ splitmix64((static_cast<std::uint64_t>(record_index) << 20) ^
                                      static_cast<std::uint64_t>(region_index)));
}

Placement paired_fg_crop(const ResolvedRecord& record, const BBox& defect_box,
                         std::uint64_t seed) {
  const ImageSize box_size = defect_box.size();
  const auto box_area = defect_box.area();
  if (record.foreground_integral.total() < box_area) {
    throw ValidationError("no anomaly-free placement: foreground smaller than the defect box");
  }
  const BBox fg_extent = best_fit_bbox(record.foreground);
  const SearchWindow window{fg_extent.top, fg_extent.bottom() - box_size.height + 1,
                            fg_extent.left, fg_extent.right() - box_size.width + 1};
  auto placement = rejection_sample(window, box_size, record.defect_boxes, seed,
                                    [&](const BBox& box) {
                                      return record.foreground_integral.count(box) == box_area;
                                    });
  if (!placement) throw ValidationError("no anomaly-free placement");
  return *placement;
}

Placement paired_bg_crop(const ResolvedRecord& record, const BBox& defect_box,
                         std::uint64_t seed) {
  const ImageSize box_size = defect_box.size();
  const auto box_area = defect_box.area();
  const long long image_area = static_cast<long long>(record.size.height) * record.size.width;
  const long long background = image_area - record.foreground_integral.total();
  if (background == 0) throw ValidationError("no background available");
  if (background < box_area) {
    throw ValidationError("no background placement: background smaller than the defect box");
  }
  const SearchWindow window{0, record.size.height - box_size.height, 0,
                            record.size.width - box_size.width};
  auto placement = rejection_sample(
      window, box_size, record.defect_boxes, seed,
      [&](const BBox& box) { return record.foreground_integral.count(box) == 0; });
  if (!placement) throw ValidationError("no background placement");
  return *placement;
}

PixelPatch extract_patch(const Image& image, const BBox& box) {
  PixelPatch patch{Image(box.height, box.width, image.channels()), box.size()};
  for (int r = 0; r < box.height; ++r) {
    const int sr = box.top + r;
    if (sr < 0 || sr >= image.height()) continue;
    for (int c = 0; c < box.width; ++c) {
      const int sc = box.left + c;
      if (sc < 0 || sc >= image.width()) continue;
      for (int ch = 0; ch < image.channels(); ++ch) patch.pixels.at(r, c, ch) = image.at(sr, sc, ch);
    }
  }
  return patch;
}

PixelPatch normalize_patch(const PixelPatch& patch, int target) {
  if (target < 8) throw ValidationError("normalize_patch: target must be >= 8");
  const Image& src = patch.pixels;
  const int h = src.height();
  const int w = src.width();
  if (h < 1 || w < 1) throw ValidationError("normalize_patch: empty patch");
  const int longer = std::max(h, w);
  const int new_h = std::max(1, static_cast<int>(std::lround(static_cast<double>(h) * target / longer)));
  const int new_w = std::max(1, static_cast<int>(std::lround(static_cast<double>(w) * target / longer)));
  const int top = (target - new_h) / 2;
  const int left = (target - new_w) / 2;
  const double sy = static_cast<double>(h) / new_h;
  const double sx = static_cast<double>(w) / new_w;

  PixelPatch out{Image(target, target, src.channels()), patch.original_size};
  for (int y = 0; y < new_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < new_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < src.channels(); ++ch) {
        const double v = (1 - wy) * ((1 - wx) * src.at(y0, x0, ch) + wx * src.at(y0, x1, ch)) +
                         wy * ((1 - wx) * src.at(y1, x0, ch) + wx * src.at(y1, x1, ch));
        out.pixels.at(top + y, left + x, ch) =
            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

std::string CropPair::pair_id() const {
  return source_image_id + "_" + anomaly_class + "_" + std::to_string(region_index);
}

namespace {

// Zeroes every pixel of `patch` (cut from `box`) that belongs to one of `masks`.
void blackout(PixelPatch& patch, const BBox& box, const std::vector<const BinaryMask*>& masks) {
  for (const BinaryMask* mask : masks) {
    const ImageSize size = mask->size();
    for (int r = 0; r < box.height; ++r) {
      const int sr = box.top + r;
      if (sr < 0 || sr >= size.height) continue;
      for (int c = 0; c < box.width; ++c) {
        const int sc = box.left + c;
        if (sc < 0 || sc >= size.width || !mask->test(sr, sc)) continue;
        for (int ch = 0; ch < patch.pixels.channels(); ++ch) patch.pixels.at(r, c, ch) = 0;
      }
    }
  }
}

}  // namespace

CropSet build_crop_sets(const AnnotationManifest& manifest, int target, std::uint64_t seed) {
  if (target < 8) throw ValidationError("target size must be >= 8");
  CropSet set;
  set.dataset_name = manifest.dataset_name;
  set.target_size = target;
  set.seed = seed;

  for (std::size_t ri = 0; ri < manifest.records.size(); ++ri) {
    const ImageRecord& record = manifest.records[ri];
    if (record.defect_regions.empty()) continue;
    const std::string image_id = record.image_id();
    Image image;
    ResolvedRecord resolved;
    try {
      image = read_png(manifest.root / record.image_path);
      resolved = resolve_record(record, manifest.root, image.size());
    } catch (const Error& e) {
      set.skipped.push_back({image_id, -1, e.what()});
      continue;
    }

    for (std::size_t k = 0; k < record.defect_regions.size(); ++k) {
      const BBox defect_box = resolved.defect_boxes[k];
      const std::uint64_t pair_seed = derive_seed(seed, ri, k);
      Placement fg;
      try {
        fg = paired_fg_crop(resolved, defect_box, pair_seed);
      } catch (const ValidationError& e) {
        set.skipped.push_back({image_id, static_cast<int>(k), e.what()});
        continue;
      }

      CropPair pair;
      pair.source_image_id = image_id;
      pair.anomaly_class = *record.defect_regions[k].anomaly_class;
      pair.object_type = record.object_type;
      pair.box_size = defect_box.size();
      pair.seed_used = pair_seed;
      pair.region_index = static_cast<int>(k);
      pair.defect_box = defect_box;
      pair.fg_box = fg.box;
      if (fg.relaxed) pair.flags.push_back("relaxed_overlap");

      std::vector<const BinaryMask*> others;
      std::vector<const BinaryMask*> all;
      for (std::size_t j = 0; j < resolved.defect_masks.size(); ++j) {
        all.push_back(&resolved.defect_masks[j]);
        if (j != k) others.push_back(&resolved.defect_masks[j]);
      }

      PixelPatch defect = extract_patch(image, defect_box);
      blackout(defect, defect_box, others);
      PixelPatch normal = extract_patch(image, fg.box);
      blackout(normal, fg.box, all);
      pair.defect_crop = normalize_patch(defect, target);
      pair.normal_fg_crop = normalize_patch(normal, target);

      if (record.foreground_region) {
        try {
          const Placement bg = paired_bg_crop(resolved, defect_box, splitmix64(pair_seed));
          PixelPatch background = extract_patch(image, bg.box);
          blackout(background, bg.box, all);
          pair.background_crop = normalize_patch(background, target);
          pair.bg_box = bg.box;
          if (bg.relaxed) pair.flags.push_back("relaxed_overlap_bg");
        } catch (const ValidationError& e) {
          pair.flags.push_back(std::string("no_background: ") + e.what());
        }
      }
      set.pairs.push_back(std::move(pair));
    }
  }

  std::stable_sort(set.pairs.begin(), set.pairs.end(), [](const CropPair& a, const CropPair& b) {
    return std::tie(a.object_type, a.anomaly_class) < std::tie(b.object_type, b.anomaly_class);
  });
  if (set.pairs.empty()) {
    std::string reasons;
    for (const auto& s : set.skipped) reasons += "\n  " + s.image_id + ": " + s.reason;
    throw ValidationError("no crop pairs produced" + reasons);
  }
  return set;
}

namespace {

json box_json(const BBox& b) {
  return {{"x", b.left}, {"y", b.top}, {"width", b.width}, {"height", b.height}};
}

json skip_json(const SkipEntry& s) {
  return {{"image_id", s.image_id}, {"region_index", s.region_index}, {"reason", s.reason}};
}

}  // namespace

PairsIndex write_crop_set(const CropSet& set, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  PairsIndex index;
  index.dataset_name = set.dataset_name;
  index.target_size = set.target_size;
  index.seed = set.seed;
  index.skipped = set.skipped;

  json pairs = json::array();
  for (const auto& pair : set.pairs) {
    PairEntry entry;
    entry.id = pair.pair_id();
    entry.image_id = pair.source_image_id;
    entry.object_type = pair.object_type;
    entry.anomaly_class = pair.anomaly_class;
    entry.seed_used = pair.seed_used;
    entry.flags = pair.flags;
    entry.defect_file = entry.id + "_defect.png";
    entry.fg_file = entry.id + "_fg.png";
    write_png(pair.defect_crop.pixels, out_dir / entry.defect_file);
    write_png(pair.normal_fg_crop.pixels, out_dir / entry.fg_file);
    if (pair.background_crop) {
      entry.bg_file = entry.id + "_bg.png";
      write_png(pair.background_crop->pixels, out_dir / *entry.bg_file);
    }

    json j = {{"id", entry.id},
              {"image_id", entry.image_id},
              {"object_type", entry.object_type},
              {"anomaly_class", entry.anomaly_class},
              {"defect", entry.defect_file},
              {"fg", entry.fg_file},
              {"bg", entry.bg_file ? json(*entry.bg_file) : json(nullptr)},
              {"box_size", {{"height", pair.box_size.height}, {"width", pair.box_size.width}}},
              {"defect_bbox", box_json(pair.defect_box)},
              {"fg_bbox", box_json(pair.fg_box)},
              {"bg_bbox", pair.bg_box ? box_json(*pair.bg_box) : json(nullptr)},
              {"seed_used", entry.seed_used},
              {"flags", entry.flags}};
    pairs.push_back(std::move(j));
    index.pairs.push_back(std::move(entry));
  }
  json skipped = json::array();
  for (const auto& s : set.skipped) skipped.push_back(skip_json(s));

  const json doc = {{"dataset_name", set.dataset_name},
                    {"target_size", set.target_size},
                    {"seed", set.seed},
                    {"pairs", std::move(pairs)},
                    {"skipped", std::move(skipped)}};
  const auto path = out_dir / "pairs.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
  return index;
}

PairsIndex read_pairs_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pairs index " + path.string());
  PairsIndex index;
  try {
    const json doc = json::parse(in);
    index.dataset_name = doc.at("dataset_name").get<std::string>();
    index.target_size = doc.at("target_size").get<int>();
    index.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& j : doc.at("pairs")) {
      PairEntry e;
      e.id = j.at("id").get<std::string>();
      e.image_id = j.at("image_id").get<std::string>();
      e.object_type = j.at("object_type").get<std::string>();
      e.anomaly_class = j.at("anomaly_class").get<std::string>();
      e.defect_file = j.at("defect").get<std::string>();
      e.fg_file = j.at("fg").get<std::string>();
      if (!j.at("bg").is_null()) e.bg_file = j.at("bg").get<std::string>();
      e.seed_used = j.at("seed_used").get<std::uint64_t>();
      e.flags = j.at("flags").get<std::vector<std::string>>();
      index.pairs.push_back(std::move(e));
    }
    for (const auto& j : doc.at("skipped")) {
      index.skipped.push_back({j.at("image_id").get<std::string>(), j.at("region_index").get<int>(),
                               j.at("reason").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed pairs index " + path.string() + ": " + e.what());
  }
  return index;
}

}  // namespace repgap::corpus
