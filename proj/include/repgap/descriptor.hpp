#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "repgap/corpus.hpp"
#include "repgap/featstore.hpp"

namespace repgap::descriptor {

/// Backbone name recorded for features produced here.
inline constexpr const char* kBackboneName = "builtin-histogram";
inline constexpr int kIntensityBins = 16;
inline constexpr int kGradientBins = 8;
inline constexpr int kFeatureLength = kIntensityBins + kGradientBins;

/// Hand-crafted embedding: normalized luma histogram followed by a normalized
/// gradient-magnitude histogram. Deterministic and dependency-free; used when
/// no learned backbone is available.
std::vector<float> describe(const Image& image);

/// Feature matrix for one crop kind, one row per entry in order; sample ids
/// are the pair ids.
featstore::FeatureMatrix describe_crops(const corpus::PairsIndex& index,
                                        const std::filesystem::path& crop_dir,
                                        featstore::SampleKind kind,
                                        const std::vector<const corpus::PairEntry*>& entries);

}  // namespace repgap::descriptor
