#include "repgap/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "repgap/error.hpp"

namespace repgap::ot {

Assignment solve_assignment(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols()) {
    throw ValidationError("solve_assignment: cost matrix must be square");
  }
  const int n = static_cast<int>(cost.rows());
  Assignment result;
  if (n == 0) return result;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based arrays; index 0 is the virtual source column.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), min_slack(n + 1);
  std::vector<int> col_owner(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (int row = 1; row <= n; ++row) {
    col_owner[0] = row;
    int col0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const int i0 = col_owner[col0];
      double delta = kInf;
      int col1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (reduced < min_slack[j]) {
          min_slack[j] = reduced;
          way[j] = col0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          col1 = j;
        }
      }
      if (col1 == 0) throw NumericalError("solve_assignment: non-finite cost entry");
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[col_owner[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      col0 = col1;
    } while (col_owner[col0] != 0);
    do {
      const int col1 = way[col0];
      col_owner[col0] = col_owner[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  result.row_to_col.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) result.row_to_col[static_cast<std::size_t>(col_owner[j] - 1)] = j - 1;
  for (int i = 0; i < n; ++i) result.total_cost += cost(i, result.row_to_col[static_cast<std::size_t>(i)]);
  return result;
}

namespace {

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.array() - m).exp().sum());
}

}  // namespace

TransportPlan sinkhorn_uniform(const Eigen::MatrixXd& cost, const SinkhornOptions& options) {
  if (cost.rows() != cost.cols() || cost.rows() == 0) {
    throw ValidationError("sinkhorn_uniform: cost matrix must be square and non-empty");
  }
  const Eigen::Index n = cost.rows();
  const double log_marginal = -std::log(static_cast<double>(n));
  const double scale = std::max(cost.maxCoeff(), 1e-12);
  const double final_eps = options.final_epsilon_ratio * scale;

  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd scratch(n);
  TransportPlan out;

  const auto plan_for = [&](double eps) {
    Eigen::MatrixXd p(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) p(i, j) = std::exp((f(i) + g(j) - cost(i, j)) / eps);
    }
    return p;
  };

  double eps = scale;
  for (;;) {
    eps = std::max(eps, final_eps);
    const bool last_stage = eps <= final_eps;
    for (int it = 0; it < options.max_iterations_per_stage; ++it) {
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) scratch(j) = (g(j) - cost(i, j)) / eps;
        f(i) = eps * (log_marginal - log_sum_exp(scratch));
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) scratch(i) = (f(i) - cost(i, j)) / eps;
        g(j) = eps * (log_marginal - log_sum_exp(scratch));
      }
      // Column marginals are exact after the g update; check rows.
      if (it % 10 == 9 || it + 1 == options.max_iterations_per_stage) {
        double violation = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          for (Eigen::Index j = 0; j < n; ++j) scratch(j) = (f(i) + g(j) - cost(i, j)) / eps;
          violation += std::abs(std::exp(log_sum_exp(scratch)) - std::exp(log_marginal));
        }
        out.marginal_violation = violation;
        if (violation < options.tolerance) break;
      }
    }
    if (last_stage) break;
    eps *= 0.5;
  }
  out.plan = plan_for(eps);
  out.transport_cost = (out.plan.array() * cost.array()).sum();
  out.converged = out.marginal_violation < options.tolerance;
  return out;
}

}  // namespace repgap::ot
