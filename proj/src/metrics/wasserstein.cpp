#include <cmath>
#include <string>

#include "repgap/assignment.hpp"
#include "repgap/error.hpp"
#include "repgap/metrics.hpp"

namespace repgap::metrics {

Eigen::MatrixXd l2_normalize_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return out;
}

SetMetricResult wasserstein2_set(const Eigen::MatrixXd& defect, const Eigen::MatrixXd& normal,
                                 const WassersteinOptions& options) {
  if (defect.cols() != normal.cols()) {
    throw ValidationError("wasserstein2_set: dimension mismatch p = " + std::to_string(defect.cols()) +
                          " vs " + std::to_string(normal.cols()));
  }
  if (defect.rows() != normal.rows()) {
    throw ValidationError("wasserstein2_set: size mismatch n = " + std::to_string(defect.rows()) +
                          " vs " + std::to_string(normal.rows()));
  }
  const Eigen::Index n = defect.rows();
  if (n < 1) throw ValidationError("wasserstein2_set: empty sets");

  const Eigen::MatrixXd a = l2_normalize_rows(defect);
  const Eigen::MatrixXd b = l2_normalize_rows(normal);
  // |a_i - b_j|^2 with unit rows, computed directly to avoid cancellation.
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  }

  SetMetricResult result;
  result.metric = MetricKind::ws;
  result.bound_low = 0.0;
  result.bound_high = kInfinity;
  result.normalization = "l2-rows";
  result.n = static_cast<std::size_t>(n);
  result.p = static_cast<std::size_t>(defect.cols());
  std::vector<double> per_pair(static_cast<std::size_t>(n));

  if (static_cast<std::size_t>(n) <= options.exact_limit) {
    const ot::Assignment assignment = ot::solve_assignment(cost);
    for (Eigen::Index i = 0; i < n; ++i) {
      per_pair[static_cast<std::size_t>(i)] =
          std::sqrt(cost(i, assignment.row_to_col[static_cast<std::size_t>(i)]));
    }
    result.value = std::sqrt(assignment.total_cost / static_cast<double>(n));
    result.solver = "exact-assignment";
  } else {
    ot::SinkhornOptions sk;
    sk.tolerance = options.sinkhorn_tolerance;
    const ot::TransportPlan plan = ot::sinkhorn_uniform(cost, sk);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double row_cost = (plan.plan.row(i).array() * cost.row(i).array()).sum();
      per_pair[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, row_cost * static_cast<double>(n)));
    }
    result.value = std::sqrt(std::max(0.0, plan.transport_cost));
    result.solver = "sinkhorn-eps-scaling";
    result.approx = true;
    if (!plan.converged) {
      result.flags.push_back("sinkhorn_not_converged: marginal violation " +
                             std::to_string(plan.marginal_violation));
    }
  }
  result.per_pair_values = std::move(per_pair);
  return result;
}

SetMetricResult wasserstein2_set(const featstore::FeatureMatrix& defect,
                                 const featstore::FeatureMatrix& normal,
                                 const WassersteinOptions& options) {
  return wasserstein2_set(defect.as_double(), normal.as_double(), options);
}

}  // namespace repgap::metrics
