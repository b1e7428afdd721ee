#include <algorithm>
#include <cmath>
#include <string>

#include "repgap/corpus.hpp"
#include "repgap/error.hpp"

namespace repgap::corpus {

long long overlap_area(const BBox& a, const BBox& b) noexcept {
  const int top = std::max(a.top, b.top);
  const int left = std::max(a.left, b.left);
  const int bottom = std::min(a.bottom(), b.bottom());
  const int right = std::min(a.right(), b.right());
  if (bottom < top || right < left) return 0;
  return static_cast<long long>(bottom - top + 1) * (right - left + 1);
}

double iou(const BBox& a, const BBox& b) noexcept {
  const long long inter = overlap_area(a, b);
  if (inter == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(a.area() + b.area() - inter);
}

BBox clip_to(const BBox& box, ImageSize size) noexcept {
  const int top = std::max(box.top, 0);
  const int left = std::max(box.left, 0);
  const int bottom = std::min(box.bottom(), size.height - 1);
  const int right = std::min(box.right(), size.width - 1);
  if (bottom < top || right < left) return {top, left, 0, 0};
  return {top, left, bottom - top + 1, right - left + 1};
}

BinaryMask::BinaryMask(ImageSize size, bool value)
    : size_(size),
      bits_(static_cast<std::size_t>(size.height) * static_cast<std::size_t>(size.width),
            value ? 1 : 0) {}

long long BinaryMask::count() const noexcept {
  return static_cast<long long>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BinaryMask BinaryMask::from_box(const BBox& box, ImageSize size) {
  BinaryMask mask(size);
  const BBox c = clip_to(box, size);
  for (int r = c.top; r < c.top + c.height; ++r) {
    for (int col = c.left; col < c.left + c.width; ++col) mask.set(r, col);
  }
  return mask;
}

MaskIntegral::MaskIntegral(const BinaryMask& mask)
    : size_(mask.size()),
      sums_(static_cast<std::size_t>(size_.height + 1) * static_cast<std::size_t>(size_.width + 1),
            0) {
  const auto stride = static_cast<std::size_t>(size_.width + 1);
  for (int r = 0; r < size_.height; ++r) {
    long long row_sum = 0;
    for (int c = 0; c < size_.width; ++c) {
      row_sum += mask.test(r, c) ? 1 : 0;
      sums_[static_cast<std::size_t>(r + 1) * stride + static_cast<std::size_t>(c + 1)] =
          sums_[static_cast<std::size_t>(r) * stride + static_cast<std::size_t>(c + 1)] + row_sum;
    }
  }
}

long long MaskIntegral::count(const BBox& box) const noexcept {
  const BBox c = clip_to(box, size_);
  if (c.height == 0 || c.width == 0) return 0;
  const auto stride = static_cast<std::size_t>(size_.width + 1);
  const auto at = [&](int r, int col) {
    return sums_[static_cast<std::size_t>(r) * stride + static_cast<std::size_t>(col)];
  };
  const int r0 = c.top, c0 = c.left, r1 = c.top + c.height, c1 = c.left + c.width;
  return at(r1, c1) - at(r0, c1) - at(r1, c0) + at(r0, c0);
}

long long MaskIntegral::total() const noexcept {
  if (sums_.empty()) return 0;
  return sums_.back();
}

namespace {

double cross(const Point& o, const Point& a, const Point& b) noexcept {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const Point& p, const Point& a, const Point& b) noexcept {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d) noexcept {
  const double d1 = cross(c, d, a);
  const double d2 = cross(c, d, b);
  const double d3 = cross(a, b, c);
  const double d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && on_segment(a, c, d)) return true;
  if (d2 == 0 && on_segment(b, c, d)) return true;
  if (d3 == 0 && on_segment(c, a, b)) return true;
  if (d4 == 0 && on_segment(d, a, b)) return true;
  return false;
}

}  // namespace

void validate_polygon(const Polygon& polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) {
    throw ValidationError("polygon needs at least 3 vertices, got " + std::to_string(n));
  }
  double twice_area = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = polygon[i];
    const Point& b = polygon[(i + 1) % n];
    if (!std::isfinite(a.x) || !std::isfinite(a.y)) {
      throw ValidationError("polygon vertex " + std::to_string(i) + " is not finite");
    }
    twice_area += a.x * b.y - b.x * a.y;
  }
  if (twice_area == 0.0) throw ValidationError("degenerate polygon (zero area)");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(polygon[i], polygon[(i + 1) % n], polygon[j],
                             polygon[(j + 1) % n])) {
        throw ValidationError("self-intersecting polygon (edges " + std::to_string(i) + " and " +
                              std::to_string(j) + ")");
      }
    }
  }
}

BinaryMask rasterize(const Polygon& polygon, ImageSize size) {
  validate_polygon(polygon);
  BinaryMask mask(size);
  double min_y = polygon.front().y, max_y = polygon.front().y;
  for (const auto& p : polygon) {
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const int row_begin = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
  const int row_end = std::min(size.height - 1, static_cast<int>(std::ceil(max_y - 0.5)));
  std::vector<double> crossings;
  const std::size_t n = polygon.size();
  for (int r = row_begin; r <= row_end; ++r) {
    const double y = r + 0.5;
    crossings.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& a = polygon[i];
      const Point& b = polygon[(i + 1) % n];
      // Half-open in y so shared vertices are counted once.
      if ((a.y <= y && y < b.y) || (b.y <= y && y < a.y)) {
        crossings.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
    std::sort(crossings.begin(), crossings.end());
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
      // Pixel centers c + 0.5 in [x0, x1).
      const int c0 = std::max(0, static_cast<int>(std::ceil(crossings[k] - 0.5)));
      const int c1 = std::min(size.width - 1, static_cast<int>(std::ceil(crossings[k + 1] - 0.5)) - 1);
      for (int c = c0; c <= c1; ++c) mask.set(r, c);
    }
  }
  return mask;
}

BBox best_fit_bbox(const BinaryMask& mask) {
  const ImageSize size = mask.size();
  int top = size.height, left = size.width, bottom = -1, right = -1;
  for (int r = 0; r < size.height; ++r) {
    for (int c = 0; c < size.width; ++c) {
      if (!mask.test(r, c)) continue;
      top = std::min(top, r);
      bottom = std::max(bottom, r);
      left = std::min(left, c);
      right = std::max(right, c);
    }
  }
  if (bottom < 0) throw ValidationError("empty annotation");
  return {top, left, bottom - top + 1, right - left + 1};
}

BBox best_fit_bbox(const Polygon& polygon, ImageSize size) {
  return best_fit_bbox(rasterize(polygon, size));
}

BinaryMask region_mask(const RegionAnnotation& annotation, const std::filesystem::path& root,
                       ImageSize size) {
  if (const auto* box = std::get_if<BBox>(&annotation.geometry)) {
    return BinaryMask::from_box(*box, size);
  }
  if (const auto* poly = std::get_if<Polygon>(&annotation.geometry)) {
    return rasterize(*poly, size);
  }
  const auto& ref = std::get<MaskRef>(annotation.geometry);
  const Image image = read_png(root / ref.path);
  if (image.size() != size) {
    throw ValidationError("mask " + ref.path + " is " + std::to_string(image.height()) + "x" +
                          std::to_string(image.width()) + ", image is " +
                          std::to_string(size.height) + "x" + std::to_string(size.width));
  }
  BinaryMask mask(size);
  for (int r = 0; r < size.height; ++r) {
    for (int c = 0; c < size.width; ++c) {
      bool set = false;
      for (int ch = 0; ch < image.channels(); ++ch) set = set || image.at(r, c, ch) != 0;
      if (set) mask.set(r, c);
    }
  }
  return mask;
}

BBox best_fit_bbox(const RegionAnnotation& annotation, const std::filesystem::path& root,
                   ImageSize size) {
  if (const auto* box = std::get_if<BBox>(&annotation.geometry)) return best_fit_bbox(*box);
  return best_fit_bbox(region_mask(annotation, root, size));
}

ResolvedRecord resolve_record(const ImageRecord& record, const std::filesystem::path& root,
                              ImageSize size) {
  ResolvedRecord out;
  out.size = size;
  out.foreground = record.foreground_region
                       ? region_mask(*record.foreground_region, root, size)
                       : BinaryMask(size, true);
  out.foreground_integral = MaskIntegral(out.foreground);
  out.defect_masks.reserve(record.defect_regions.size());
  out.defect_boxes.reserve(record.defect_regions.size());
  for (const auto& region : record.defect_regions) {
    BinaryMask mask = region_mask(region, root, size);
    BBox box;
    if (const auto* b = std::get_if<BBox>(&region.geometry)) {
      box = clip_to(*b, size);
      if (box.height == 0 || box.width == 0) throw ValidationError("bbox lies outside the image");
    } else {
      box = best_fit_bbox(mask);
    }
    out.defect_masks.push_back(std::move(mask));
    out.defect_boxes.push_back(box);
  }
  return out;
}

}  // namespace repgap::corpus
