#include <cmath>
#include <string>

#include "repgap/error.hpp"
#include "repgap/metrics.hpp"

namespace repgap::metrics {

Eigen::MatrixXd neighbourhood_vectors(std::span<const double> gray, ImageSize size, int region) {
  const int rows = size.height - region + 1;
  const int cols = size.width - region + 1;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows) * cols, region * region);
  Eigen::Index k = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c, ++k) {
      Eigen::Index d = 0;
      for (int dr = 0; dr < region; ++dr) {
        for (int dc = 0; dc < region; ++dc, ++d) {
          out(k, d) = gray[static_cast<std::size_t>(r + dr) * static_cast<std::size_t>(size.width) +
                           static_cast<std::size_t>(c + dc)];
        }
      }
    }
  }
  return out;
}

double rmi_gray(std::span<const double> defect, std::span<const double> normal, ImageSize size,
                int region) {
  const auto pixels = static_cast<std::size_t>(size.height) * static_cast<std::size_t>(size.width);
  if (defect.size() != pixels || normal.size() != pixels) {
    throw ValidationError("rmi: patches must have identical dimensions");
  }
  if (region < 3 || region % 2 == 0) {
    throw ValidationError("rmi: region must be odd and >= 3, got " + std::to_string(region));
  }
  if (region > size.height || region > size.width) {
    throw ValidationError("rmi: region " + std::to_string(region) + " larger than patch side");
  }

  const Eigen::MatrixXd y_raw = neighbourhood_vectors(defect, size, region);
  const Eigen::MatrixXd x_raw = neighbourhood_vectors(normal, size, region);
  const double count = static_cast<double>(y_raw.rows());
  const Eigen::MatrixXd y = y_raw.rowwise() - y_raw.colwise().mean();
  const Eigen::MatrixXd x = x_raw.rowwise() - x_raw.colwise().mean();
  const Eigen::Index d = y.cols();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(d, d);

  const Eigen::MatrixXd cov_y = (y.transpose() * y) / count;
  const Eigen::MatrixXd cov_x = (x.transpose() * x) / count;
  const Eigen::MatrixXd cov_yx = (y.transpose() * x) / count;

  const Eigen::LLT<Eigen::MatrixXd> llt(cov_x + kRmiEpsilon * identity);
  if (llt.info() != Eigen::Success) throw NumericalError("rmi: regularized covariance not SPD");
  Eigen::MatrixXd posterior = cov_y - cov_yx * llt.solve(cov_yx.transpose());
  posterior = 0.5 * (posterior + posterior.transpose()) + kRmiEpsilon * identity;

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(posterior, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("rmi: eigen decomposition failed");
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double lambda = eig.eigenvalues()(i);
    if (!(lambda > 0.0)) throw NumericalError("rmi: posterior covariance lost positivity");
    log_det += std::log(lambda);
  }
  return -0.5 * log_det;
}

double rmi(const corpus::PixelPatch& defect_patch, const corpus::PixelPatch& normal_patch,
           int region) {
  if (defect_patch.pixels.size() != normal_patch.pixels.size()) {
    throw ValidationError("rmi: patches must have identical dimensions");
  }
  std::vector<double> y = luma(defect_patch.pixels);
  std::vector<double> x = luma(normal_patch.pixels);
  for (double& v : y) v /= 255.0;
  for (double& v : x) v /= 255.0;
  return rmi_gray(y, x, defect_patch.pixels.size(), region);
}

}  // namespace repgap::metrics
