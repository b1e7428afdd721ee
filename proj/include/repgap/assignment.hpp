#pragma once

#include <Eigen/Dense>

#include <vector>

namespace repgap::ot {

struct Assignment {
  /// column assigned to each row
  std::vector<int> row_to_col;
  double total_cost = 0.0;
};

/// Minimum-cost perfect matching on a square cost matrix using shortest
/// augmenting paths with dual potentials. O(n^3) time, O(n) scratch.
Assignment solve_assignment(const Eigen::MatrixXd& cost);

struct SinkhornOptions {
  /// Final entropic regularization, relative to the largest cost entry.
  double final_epsilon_ratio = 1e-3;
  /// Stop when the L1 marginal violation falls below this.
  double tolerance = 1e-6;
  int max_iterations_per_stage = 2000;
};

struct TransportPlan {
  Eigen::MatrixXd plan;  // rows and columns each sum to 1/n
  double transport_cost = 0.0;
  double marginal_violation = 0.0;
  bool converged = false;
};

/// Log-domain entropic OT between uniform marginals with epsilon scaling.
TransportPlan sinkhorn_uniform(const Eigen::MatrixXd& cost, const SinkhornOptions& options = {});

}  // namespace repgap::ot
