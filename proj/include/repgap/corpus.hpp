#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "repgap/image.hpp"

namespace repgap::corpus {

inline constexpr int kDefaultTargetSize = 64;
inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr const char* kManifestSchemaVersion = "1.0";

/// Axis-aligned box in integer pixel coordinates; `top`/`left` inclusive.
struct BBox {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  int bottom() const noexcept { return top + height - 1; }
  int right() const noexcept { return left + width - 1; }
  long long area() const noexcept { return static_cast<long long>(height) * width; }
  ImageSize size() const noexcept { return {height, width}; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

long long overlap_area(const BBox& a, const BBox& b) noexcept;
double iou(const BBox& a, const BBox& b) noexcept;
/// Intersection with the image rectangle; height/width 0 when disjoint.
BBox clip_to(const BBox& box, ImageSize size) noexcept;

struct Point {
  double x = 0.0;  // column axis
  double y = 0.0;  // row axis
};
using Polygon = std::vector<Point>;

struct MaskRef {
  std::string path;
};

struct RegionAnnotation {
  std::variant<MaskRef, BBox, Polygon> geometry;
  std::optional<std::string> anomaly_class;

  std::string kind() const;
};

struct ImageRecord {
  std::string image_path;
  std::string object_type;
  std::vector<RegionAnnotation> defect_regions;
  std::optional<RegionAnnotation> foreground_region;

  /// File-system safe identifier derived from the relative image path.
  std::string image_id() const;
};

struct AnnotationManifest {
  std::string schema_version = kManifestSchemaVersion;
  std::string dataset_name;
  std::vector<std::string> classes;
  /// Directory that every image and mask path is relative to.
  std::filesystem::path root;
  std::vector<ImageRecord> records;
};

/// Dense 0/1 pixel set.
class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(ImageSize size, bool value = false);

  ImageSize size() const noexcept { return size_; }
  bool test(int row, int col) const noexcept {
    return bits_[static_cast<std::size_t>(row) * static_cast<std::size_t>(size_.width) +
                 static_cast<std::size_t>(col)] != 0;
  }
  void set(int row, int col, bool value = true) noexcept {
    bits_[static_cast<std::size_t>(row) * static_cast<std::size_t>(size_.width) +
          static_cast<std::size_t>(col)] = value ? 1 : 0;
  }
  long long count() const noexcept;

  static BinaryMask from_box(const BBox& box, ImageSize size);

 private:
  ImageSize size_;
  std::vector<std::uint8_t> bits_;
};

/// Summed-area table answering "how many set pixels inside this box" in O(1).
class MaskIntegral {
 public:
  MaskIntegral() = default;
  explicit MaskIntegral(const BinaryMask& mask);

  long long count(const BBox& box) const noexcept;
  long long total() const noexcept;

 private:
  ImageSize size_;
  std::vector<long long> sums_;  // (h+1) x (w+1)
};

// ---------------------------------------------------------------------------
// Manifest handling

AnnotationManifest load_manifest(const std::filesystem::path& path);
/// Writes the manifest with `root` stored relative to the manifest location.
void save_manifest(const AnnotationManifest& manifest, const std::filesystem::path& path);

/// Builds a manifest from an MVTec-AD style tree:
///   <root>/<object_type>/test/<class>/*.png
///   <root>/<object_type>/ground_truth/<class>/<stem>_mask.png
AnnotationManifest adapt_mvtec(const std::filesystem::path& root, const std::string& object_type);

// ---------------------------------------------------------------------------
// Geometry

/// Rasterizes a simple polygon by pixel-center sampling. Throws on
/// self-intersecting or degenerate polygons.
BinaryMask rasterize(const Polygon& polygon, ImageSize size);
void validate_polygon(const Polygon& polygon);

BBox best_fit_bbox(const BinaryMask& mask);
BBox best_fit_bbox(const Polygon& polygon, ImageSize size);
inline BBox best_fit_bbox(const BBox& box) { return box; }
BBox best_fit_bbox(const RegionAnnotation& annotation, const std::filesystem::path& root,
                   ImageSize size);

BinaryMask region_mask(const RegionAnnotation& annotation, const std::filesystem::path& root,
                       ImageSize size);

/// An image record with its regions loaded into pixel space.
struct ResolvedRecord {
  ImageSize size;
  BinaryMask foreground;
  MaskIntegral foreground_integral;
  std::vector<BinaryMask> defect_masks;
  std::vector<BBox> defect_boxes;  // best-fit, clipped to the image
};

ResolvedRecord resolve_record(const ImageRecord& record, const std::filesystem::path& root,
                              ImageSize size);

// ---------------------------------------------------------------------------
// Placement

inline constexpr int kStrictAttempts = 1000;
inline constexpr int kRelaxedAttempts = 1000;
inline constexpr double kRelaxedMaxIou = 0.10;

struct Placement {
  BBox box;
  /// True when the zero-overlap phase failed and the IoU <= 0.10 phase was used.
  bool relaxed = false;
  double max_iou = 0.0;
};

/// Same-size box fully inside the foreground, disjoint from every defect box.
Placement paired_fg_crop(const ResolvedRecord& record, const BBox& defect_box,
                         std::uint64_t seed);
/// Same-size box fully outside the foreground.
Placement paired_bg_crop(const ResolvedRecord& record, const BBox& defect_box,
                         std::uint64_t seed);

// ---------------------------------------------------------------------------
// Patches

struct PixelPatch {
  Image pixels;
  ImageSize original_size;

  friend bool operator==(const PixelPatch&, const PixelPatch&) = default;
};

/// Copies `box` out of `image`; pixels outside the image are zero.
PixelPatch extract_patch(const Image& image, const BBox& box);

/// Aspect-preserving bilinear resize of the longer side to `target`, centered
/// on a zero-valued target x target canvas.
PixelPatch normalize_patch(const PixelPatch& patch, int target);

struct CropPair {
  PixelPatch defect_crop;
  PixelPatch normal_fg_crop;
  std::optional<PixelPatch> background_crop;
  std::string source_image_id;
  std::string anomaly_class;
  std::string object_type;
  ImageSize box_size;
  std::uint64_t seed_used = 0;
  int region_index = 0;
  BBox defect_box;
  BBox fg_box;
  std::optional<BBox> bg_box;
  std::vector<std::string> flags;

  /// `{image_id}_{class}_{index}`; also the feature-matrix sample id.
  std::string pair_id() const;
};

struct SkipEntry {
  std::string image_id;
  int region_index = -1;
  std::string reason;
};

struct CropSet {
  std::string dataset_name;
  int target_size = kDefaultTargetSize;
  std::uint64_t seed = kDefaultSeed;
  std::vector<CropPair> pairs;
  std::vector<SkipEntry> skipped;
};

/// Per-instance seed derived from the run seed and the region's position.
std::uint64_t derive_seed(std::uint64_t seed, std::size_t record_index, std::size_t region_index);

/// One pair per defect region instance. Placement failures become skip
/// entries; throws only when no pair could be produced.
CropSet build_crop_sets(const AnnotationManifest& manifest, int target, std::uint64_t seed);

/// One row of `pairs.json`.
struct PairEntry {
  std::string id;
  std::string image_id;
  std::string object_type;
  std::string anomaly_class;
  std::string defect_file;
  std::string fg_file;
  std::optional<std::string> bg_file;
  std::uint64_t seed_used = 0;
  std::vector<std::string> flags;
};

struct PairsIndex {
  std::string dataset_name;
  int target_size = kDefaultTargetSize;
  std::uint64_t seed = kDefaultSeed;
  std::vector<PairEntry> pairs;
  std::vector<SkipEntry> skipped;
};

/// Writes one PNG per crop plus `pairs.json`; returns the index written.
PairsIndex write_crop_set(const CropSet& set, const std::filesystem::path& out_dir);
PairsIndex read_pairs_index(const std::filesystem::path& path);

}  // namespace repgap::corpus
