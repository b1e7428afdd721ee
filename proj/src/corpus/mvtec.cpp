#include <algorithm>
#include <string>
#include <vector>

#include "repgap/corpus.hpp"
#include "repgap/error.hpp"

namespace repgap::corpus {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> list_entries(const fs::path& dir) {
  std::vector<std::string> names;
  if (!fs::is_directory(dir)) return names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out.empty() ? "<nothing>" : out;
}

}  // namespace

AnnotationManifest adapt_mvtec(const fs::path& root, const std::string& object_type) {
  const fs::path object_dir = root / object_type;
  const fs::path test_dir = object_dir / "test";
  const fs::path gt_dir = object_dir / "ground_truth";
  if (!fs::is_directory(test_dir) || !fs::is_directory(gt_dir)) {
    throw ValidationError("MVTec layout mismatch: expected " + test_dir.string() + " and " +
                          gt_dir.string() + "; found in " + object_dir.string() + ": " +
                          join(list_entries(object_dir)));
  }

  AnnotationManifest manifest;
  manifest.dataset_name = "MVTec-AD";
  manifest.root = root;

  for (const auto& class_name : list_entries(test_dir)) {
    const fs::path class_dir = test_dir / class_name;
    if (!fs::is_directory(class_dir)) continue;
    const bool normal_class = class_name == "good";
    if (!normal_class) manifest.classes.push_back(class_name);

    for (const auto& file : list_entries(class_dir)) {
      const fs::path image_path = class_dir / file;
      if (image_path.extension() != ".png") continue;
      ImageRecord record;
      record.image_path = image_path.lexically_relative(root).generic_string();
      record.object_type = object_type;
      const fs::path mask_path =
          gt_dir / class_name / (image_path.stem().string() + "_mask.png");
      const ImageSize image_size = probe_png_size(image_path);
      RegionAnnotation full;
      full.geometry = BBox{0, 0, image_size.height, image_size.width};
      record.foreground_region = std::move(full);
      if (!normal_class && fs::exists(mask_path)) {
        const ImageSize mask_size = probe_png_size(mask_path);
        if (image_size != mask_size) {
          throw ValidationError("mask " + mask_path.string() + " is " +
                                std::to_string(mask_size.height) + "x" +
                                std::to_string(mask_size.width) + " but image is " +
                                std::to_string(image_size.height) + "x" +
                                std::to_string(image_size.width));
        }
        RegionAnnotation region;
        region.geometry = MaskRef{mask_path.lexically_relative(root).generic_string()};
        region.anomaly_class = class_name;
        record.defect_regions.push_back(std::move(region));
      }
      manifest.records.push_back(std::move(record));
    }
  }
  if (manifest.records.empty()) {
    throw ValidationError("MVTec layout mismatch: no PNG images under " + test_dir.string() +
                          "; found: " + join(list_entries(test_dir)));
  }
  return manifest;
}

}  // namespace repgap::corpus
