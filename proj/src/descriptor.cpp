#include "repgap/descriptor.hpp"

#include <algorithm>
#include <cmath>

#include "repgap/error.hpp"

namespace repgap::descriptor {

std::vector<float> describe(const Image& image) {
  const std::vector<double> gray = luma(image);
  const int h = image.height();
  const int w = image.width();
  std::vector<double> hist(kFeatureLength, 0.0);
  for (double v : gray) {
    const int bin = std::min(kIntensityBins - 1, static_cast<int>(v / 256.0 * kIntensityBins));
    hist[static_cast<std::size_t>(bin)] += 1.0;
  }
  // Central-difference gradient magnitude on [0, 1] intensities; the largest
  // possible value is sqrt(2) / 2.
  long long grad_count = 0;
  for (int r = 1; r + 1 < h; ++r) {
    for (int c = 1; c + 1 < w; ++c) {
      const auto at = [&](int rr, int cc) {
        return gray[static_cast<std::size_t>(rr) * static_cast<std::size_t>(w) + static_cast<std::size_t>(cc)] / 255.0;
      };
      const double gx = 0.5 * (at(r, c + 1) - at(r, c - 1));
      const double gy = 0.5 * (at(r + 1, c) - at(r - 1, c));
      const double mag = std::sqrt(gx * gx + gy * gy) / (std::sqrt(2.0) / 2.0);
      const int bin = std::min(kGradientBins - 1, static_cast<int>(std::sqrt(mag) * kGradientBins));
      hist[static_cast<std::size_t>(kIntensityBins + bin)] += 1.0;
      ++grad_count;
    }
  }
  std::vector<float> out(kFeatureLength);
  const double pixels = static_cast<double>(gray.size());
  for (int i = 0; i < kIntensityBins; ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(hist[static_cast<std::size_t>(i)] / pixels);
  for (int i = kIntensityBins; i < kFeatureLength; ++i) {
    out[static_cast<std::size_t>(i)] =
        grad_count > 0 ? static_cast<float>(hist[static_cast<std::size_t>(i)] / static_cast<double>(grad_count)) : 0.0f;
  }
  return out;
}

featstore::FeatureMatrix describe_crops(const corpus::PairsIndex& index, const std::filesystem::path& crop_dir,
                                        featstore::SampleKind kind,
                                        const std::vector<const corpus::PairEntry*>& entries) {
  if (entries.empty()) throw ValidationError("describe_crops: no pairs selected");
  featstore::FeatureMatrix m;
  m.values.resize(static_cast<Eigen::Index>(entries.size()), kFeatureLength);
  m.meta.backbone_name = kBackboneName;
  m.meta.pretrain_dataset = "none";
  m.meta.dataset = index.dataset_name;
  m.meta.object_type = entries.front()->object_type;
  m.meta.anomaly_class = entries.front()->anomaly_class;
  m.meta.kind = kind;
  m.meta.layer_tag = "luma16+gradmag8";
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const corpus::PairEntry& e = *entries[k];
    std::string file;
    switch (kind) {
      case featstore::SampleKind::defect:
        file = e.defect_file;
        break;
      case featstore::SampleKind::normal_fg:
        file = e.fg_file;
        break;
      case featstore::SampleKind::background:
        if (!e.bg_file) throw ValidationError("pair " + e.id + " has no background crop");
        file = *e.bg_file;
        break;
    }
    const std::vector<float> v = describe(read_png(crop_dir / file));
    for (int c = 0; c < kFeatureLength; ++c) m.values(static_cast<Eigen::Index>(k), c) = v[static_cast<std::size_t>(c)];
    m.sample_ids.push_back(e.id);
  }
  return m;
}

}  // namespace repgap::descriptor
