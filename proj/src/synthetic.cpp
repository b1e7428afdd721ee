#include "repgap/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "repgap/corpus.hpp"
#include "repgap/error.hpp"
#include "repgap/image.hpp"

namespace repgap::synthetic {

namespace fs = std::filesystem;
using corpus::BBox;

namespace {

// Explicit transforms keep the fixture identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(uniform() * (hi - lo + 1)); }
  double normal() {
    const double u1 = std::max(uniform(), 1e-300);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

struct Texture {
  double angle;
  double period;
  double phase;

  double at(int r, int c) const {
    const double s = c * std::cos(angle) + r * std::sin(angle);
    return 128.0 + 55.0 * std::sin(2.0 * std::numbers::pi * s / period + phase);
  }
};

constexpr double kTint[3] = {1.0, 0.95, 0.9};

void paint_texture_pixel(Image& img, int r, int c, double value) {
  for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = to_byte(value * kTint[ch]);
}

}  // namespace

fs::path write_fixture(const fs::path& dir, const FixtureOptions& options) {
  if (options.foreground_width >= options.width || options.images_per_class < 1 || options.defects_per_image < 1) {
    throw ValidationError("write_fixture: invalid options");
  }
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  const ImageSize size{options.height, options.width};
  const char* classes[3] = {"scratch", "spot", "stain"};

  corpus::AnnotationManifest manifest;
  manifest.dataset_name = "synthetic";
  manifest.classes = {"scratch", "spot", "stain"};
  manifest.root = dir;

  Rng rng(options.seed);
  for (int cls = 0; cls < 3; ++cls) {
    for (int i = 0; i < options.images_per_class; ++i) {
      const std::string stem = std::string(classes[cls]) + std::to_string(i);
      Image img(options.height, options.width, 3);
      const Texture tex{rng.uniform(0.0, std::numbers::pi), rng.uniform(8.0, 14.0),
                        rng.uniform(0.0, 2.0 * std::numbers::pi)};
      for (int r = 0; r < options.height; ++r) {
        for (int c = 0; c < options.width; ++c) {
          if (c < options.foreground_width) {
            paint_texture_pixel(img, r, c, tex.at(r, c) + rng.uniform(-6.0, 6.0));
          } else {
            const auto v = static_cast<std::uint8_t>(rng.integer(0, 90));
            for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = v;
          }
        }
      }

      corpus::ImageRecord record;
      record.image_path = "images/" + stem + ".png";
      record.object_type = "tile";
      corpus::RegionAnnotation fg;
      fg.geometry = BBox{0, 0, options.height, options.foreground_width};
      record.foreground_region = fg;

      std::vector<BBox> placed;
      for (int k = 0; k < options.defects_per_image; ++k) {
        corpus::RegionAnnotation region;
        region.anomaly_class = classes[cls];
        corpus::BinaryMask mask(size);
        for (int attempt = 0;; ++attempt) {
          if (attempt > 200) throw ValidationError("write_fixture: cannot place defects");
          const int extent = rng.integer(12, 26);
          const int top = rng.integer(2, options.height - extent - 3);
          const int left = rng.integer(2, options.foreground_width - extent - 3);
          const BBox outer{top, left, extent, extent};
          const bool clear = std::none_of(placed.begin(), placed.end(), [&](const BBox& b) {
            return corpus::overlap_area(BBox{b.top - 2, b.left - 2, b.height + 4, b.width + 4}, outer) > 0;
          });
          if (!clear) continue;
          if (cls == 0) {
            // thin slanted quadrilateral
            const double thickness = rng.uniform(4.0, 7.0);
            const double x0 = left, y0 = top + thickness, x1 = left + extent - 0.5, y1 = top + extent - 0.5 - thickness;
            corpus::Polygon poly{{x0, y0}, {x0 + thickness, y0 - thickness}, {x1, y1}, {x1 - thickness, y1 + thickness}};
            region.geometry = poly;
            mask = corpus::rasterize(poly, size);
          } else if (cls == 1) {
            const double cy = top + extent / 2.0, cx = left + extent / 2.0, radius = extent / 2.0;
            mask = corpus::BinaryMask(size);
            for (int r = top; r < top + extent; ++r) {
              for (int c = left; c < left + extent; ++c) {
                const double dy = r + 0.5 - cy, dx = c + 0.5 - cx;
                if (dy * dy + dx * dx <= radius * radius) mask.set(r, c);
              }
            }
            const std::string mask_rel = "masks/" + stem + "_" + std::to_string(k) + ".png";
            Image mask_img(options.height, options.width, 1);
            for (int r = 0; r < options.height; ++r) {
              for (int c = 0; c < options.width; ++c) mask_img.at(r, c) = mask.test(r, c) ? 255 : 0;
            }
            write_png(mask_img, dir / mask_rel);
            region.geometry = corpus::MaskRef{mask_rel};
          } else {
            const int h = rng.integer(extent / 2, extent);
            const BBox box{top, left, h, extent};
            region.geometry = box;
            mask = corpus::BinaryMask::from_box(box, size);
          }
          placed.push_back(outer);
          break;
        }
        for (int r = 0; r < options.height; ++r) {
          for (int c = 0; c < options.foreground_width; ++c) {
            if (mask.test(r, c)) paint_texture_pixel(img, r, c, tex.at(r, c) - 8.0 + 18.0 * rng.normal());
          }
        }
        record.defect_regions.push_back(std::move(region));
      }
      write_png(img, dir / record.image_path);
      manifest.records.push_back(std::move(record));
    }
  }
  const fs::path manifest_path = dir / "manifest.json";
  corpus::save_manifest(manifest, manifest_path);
  return manifest_path;
}

}  // namespace repgap::synthetic
