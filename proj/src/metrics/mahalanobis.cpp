#include <algorithm>
#include <cmath>
#include <string>

#include "repgap/error.hpp"
#include "repgap/metrics.hpp"

namespace repgap::metrics {

ShrinkageCovariance fit_shrinkage_gaussian(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index p = samples.cols();
  if (n < 2) throw ValidationError("fit_shrinkage_gaussian: need n >= 2 samples, got " + std::to_string(n));
  if (p < 1) throw ValidationError("fit_shrinkage_gaussian: need p >= 1");

  ShrinkageCovariance out;
  out.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - out.mean.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose());
  out.lambda_used = std::max(1e-6, 1e-3 * cov.trace() / static_cast<double>(p));
  cov.diagonal().array() += out.lambda_used;
  out.cov_regularized = std::move(cov);
  return out;
}

std::vector<double> mahalanobis_distances(const ShrinkageCovariance& gaussian,
                                          const Eigen::MatrixXd& points) {
  if (points.cols() != gaussian.mean.size()) {
    throw ValidationError("mahalanobis: dimension mismatch " + std::to_string(points.cols()) +
                          " vs " + std::to_string(gaussian.mean.size()));
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(gaussian.cov_regularized);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("mahalanobis: regularized covariance is not positive definite");
  }
  Eigen::MatrixXd diffs = (points.rowwise() - gaussian.mean.transpose()).transpose();
  llt.matrixL().solveInPlace(diffs);
  std::vector<double> out(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = diffs.col(i).norm();
  }
  return out;
}

double mahalanobis_upper_bound(long long n, long long p) {
  if (n < 2 || p < 1) throw ValidationError("mahalanobis_upper_bound: need n >= 2, p >= 1");
  const double nd = static_cast<double>(n);
  if (n > p + 1) return (nd - 1.0) * static_cast<double>(p) / nd;
  return (nd - 1.0) * (nd - 1.0) / nd;
}

SetMetricResult mahalanobis_set(const Eigen::MatrixXd& defect, const Eigen::MatrixXd& normal) {
  if (defect.cols() != normal.cols()) {
    throw ValidationError("mahalanobis_set: dimension mismatch p = " + std::to_string(defect.cols()) +
                          " vs " + std::to_string(normal.cols()));
  }
  if (defect.rows() < 1) throw ValidationError("mahalanobis_set: empty defect set");
  const ShrinkageCovariance gaussian = fit_shrinkage_gaussian(normal);
  std::vector<double> distances = mahalanobis_distances(gaussian, defect);

  SetMetricResult result;
  result.metric = MetricKind::mh;
  double total = 0.0;
  for (double d : distances) total += d;
  result.value = total / static_cast<double>(distances.size());
  result.per_pair_values = std::move(distances);
  result.bound_low = 0.0;
  result.bound_high = mahalanobis_upper_bound(normal.rows(), normal.cols());
  result.pct_of_bound = 100.0 * result.value / result.bound_high;
  result.lambda_used = gaussian.lambda_used;
  result.normalization = "none";
  result.solver = "cholesky";
  result.n = static_cast<std::size_t>(normal.rows());
  result.p = static_cast<std::size_t>(normal.cols());
  return result;
}

SetMetricResult mahalanobis_set(const featstore::FeatureMatrix& defect,
                                const featstore::FeatureMatrix& normal) {
  return mahalanobis_set(defect.as_double(), normal.as_double());
}

std::vector<double> within_set_mahalanobis(const Eigen::MatrixXd& normal) {
  return mahalanobis_distances(fit_shrinkage_gaussian(normal), normal);
}

}  // namespace repgap::metrics
