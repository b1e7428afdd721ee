#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace repgap::featstore {

inline constexpr char kMagic[9] = "FGAPv001";
inline constexpr std::size_t kHeaderBytes = 16;

enum class SampleKind { defect, normal_fg, background };

std::string to_string(SampleKind kind);
SampleKind sample_kind_from_string(const std::string& text);

struct BackboneMeta {
  std::string backbone_name;
  std::string pretrain_dataset;
  std::string dataset;
  std::string object_type;
  std::string anomaly_class;
  SampleKind kind = SampleKind::defect;
  std::string layer_tag;

  friend bool operator==(const BackboneMeta&, const BackboneMeta&) = default;
};

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n x p embeddings, one row per sample.
struct FeatureMatrix {
  RowMatrixF values;
  BackboneMeta meta;
  std::vector<std::string> sample_ids;

  std::size_t n() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(values.cols()); }

  /// Throws ValidationError unless n, p >= 1, all values finite and ids unique.
  void validate() const;
  /// Values widened to double for metric computation.
  Eigen::MatrixXd as_double() const { return values.cast<double>(); }
};

/// Writes `path` and `<path>.meta.json`, each via temp file + rename.
void write_features(const FeatureMatrix& matrix, const std::filesystem::path& path);

/// Reads a matrix and its sidecar. A missing sidecar is not an error: a
/// warning is appended to `warnings` (or printed to stderr when null), meta
/// fields stay empty and ids become row indices.
FeatureMatrix read_features(const std::filesystem::path& path,
                            std::vector<std::string>* warnings = nullptr);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// Row k of `defect` paired with row k of `normal`.
struct PairedFeatures {
  Eigen::MatrixXd defect;
  Eigen::MatrixXd normal;
  std::vector<std::string> ids;
  BackboneMeta defect_meta;
  BackboneMeta normal_meta;

  std::size_t size() const noexcept { return static_cast<std::size_t>(defect.rows()); }
};

/// Aligns `normal` rows to `defect` order by sample id.
PairedFeatures pair_matrices(const FeatureMatrix& defect, const FeatureMatrix& normal);

}  // namespace repgap::featstore
