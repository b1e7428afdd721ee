#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "repgap/corpus.hpp"
#include "repgap/featstore.hpp"

namespace repgap::metrics {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kProbabilitySumTolerance = 1e-9;
inline constexpr double kDistributionEpsilon = 1e-8;
/// Slack granted to floating-point round-off when checking closed bounds.
inline constexpr double kBoundSlack = 1e-12;

/// Finite discrete distribution. Construction accepts non-negative entries
/// summing to 1 within 1e-9 and stores them rescaled to sum exactly to 1.
class ProbabilityVector {
 public:
  explicit ProbabilityVector(std::vector<double> probs);

  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const noexcept { return probs_[i]; }

 private:
  std::vector<double> probs_;
};

/// Natural-log KL divergence; +inf when q vanishes where p does not.
double kl_divergence(const ProbabilityVector& p, const ProbabilityVector& q);

/// Base-2 Jensen-Shannon divergence, in [0, 1].
double js_divergence(const ProbabilityVector& p, const ProbabilityVector& q);

/// Shift by -min, add 1e-8, normalize.
ProbabilityVector feature_to_distribution(std::span<const double> v);
ProbabilityVector feature_to_distribution(const Eigen::Ref<const Eigen::VectorXd>& v);

enum class MetricKind { js, mh, ws, rmi };

std::string to_string(MetricKind kind);
MetricKind metric_kind_from_string(const std::string& text);

struct SetMetricResult {
  MetricKind metric = MetricKind::js;
  double value = 0.0;
  std::optional<std::vector<double>> per_pair_values;
  double bound_low = 0.0;
  double bound_high = kInfinity;
  std::optional<double> pct_of_bound;

  // provenance of how the value was obtained
  std::optional<double> lambda_used;
  std::string normalization = "none";
  std::string solver = "none";
  bool approx = false;
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<std::string> flags;
};

SetMetricResult js_set(const featstore::PairedFeatures& pairs);

struct ShrinkageCovariance {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov_regularized;
  double lambda_used = 0.0;
};

/// Sample mean and (n-1)-divisor covariance plus lambda * I with
/// lambda = max(1e-6, 1e-3 * trace / p).
ShrinkageCovariance fit_shrinkage_gaussian(const Eigen::MatrixXd& samples);

/// Distance of each row of `points` to the fitted Gaussian.
std::vector<double> mahalanobis_distances(const ShrinkageCovariance& gaussian,
                                          const Eigen::MatrixXd& points);

/// Mean distance of defect rows to the Gaussian fitted on the normal set.
SetMetricResult mahalanobis_set(const Eigen::MatrixXd& defect, const Eigen::MatrixXd& normal);
SetMetricResult mahalanobis_set(const featstore::FeatureMatrix& defect,
                                const featstore::FeatureMatrix& normal);

/// (n-1)p/n when n > p + 1, else (n-1)^2/n.
double mahalanobis_upper_bound(long long n, long long p);

/// Distances of each normal sample to the Gaussian fitted on its own set.
std::vector<double> within_set_mahalanobis(const Eigen::MatrixXd& normal);

struct WassersteinOptions {
  /// Largest n solved by exact assignment; above it entropic OT is used.
  std::size_t exact_limit = 2048;
  double sinkhorn_tolerance = 1e-6;
};

/// Exact 2-Wasserstein distance between the uniform empirical measures of the
/// L2-normalized rows. Per-pair values are the matched distances.
SetMetricResult wasserstein2_set(const Eigen::MatrixXd& defect, const Eigen::MatrixXd& normal,
                                 const WassersteinOptions& options = {});
SetMetricResult wasserstein2_set(const featstore::FeatureMatrix& defect,
                                 const featstore::FeatureMatrix& normal,
                                 const WassersteinOptions& options = {});

/// Rows scaled to unit Euclidean norm; all-zero rows are left as is.
Eigen::MatrixXd l2_normalize_rows(const Eigen::MatrixXd& m);

inline constexpr int kDefaultRmiRegion = 3;
inline constexpr double kRmiEpsilon = 1e-6;

/// Region mutual information between two equally sized gray images given as
/// row-major intensities in [0, 1]. `defect` plays Y, `normal` plays X.
double rmi_gray(std::span<const double> defect, std::span<const double> normal, ImageSize size,
                int region);

/// Luma conversion, scaling to [0, 1], then rmi_gray.
double rmi(const corpus::PixelPatch& defect_patch, const corpus::PixelPatch& normal_patch,
           int region = kDefaultRmiRegion);

/// region x region neighbourhood vectors at every valid position, one per row.
Eigen::MatrixXd neighbourhood_vectors(std::span<const double> gray, ImageSize size, int region);

struct BoundCheck {
  std::string name;
  bool passed = true;
  /// Check could not run (missing context); does not count as a failure.
  bool skipped = false;
  std::string detail;
};

struct BoundDiagnostic {
  MetricKind metric = MetricKind::js;
  std::vector<BoundCheck> checks;
  bool passed() const noexcept;
};

/// Checks every bound that applies to `result`. For MH with `normal` given,
/// also checks the within-set distances against the theoretical maximum.
BoundDiagnostic verify_bounds(const SetMetricResult& result,
                              const Eigen::MatrixXd* normal = nullptr);

}  // namespace repgap::metrics
