#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "repgap/error.hpp"
#include "repgap/metrics.hpp"

namespace repgap::metrics {

ProbabilityVector::ProbabilityVector(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw ValidationError("probability vector must be non-empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] >= 0.0) || !std::isfinite(probs_[i])) {
      throw ValidationError("probability entry " + std::to_string(i) + " is negative or not finite");
    }
    sum += probs_[i];
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
    throw ValidationError("probabilities sum to " + std::to_string(sum) + ", expected 1");
  }
  for (double& v : probs_) v /= sum;
}

namespace {

void check_same_size(const ProbabilityVector& p, const ProbabilityVector& q) {
  if (p.size() != q.size()) {
    throw ValidationError("distribution dimension mismatch: " + std::to_string(p.size()) + " vs " +
                          std::to_string(q.size()));
  }
}

// One summand of KL(a || b) written as a*ln(a/b) - a + b. Summed over a
// normalized pair this equals KL, and every summand is non-negative, also
// after rounding: with r = b/a - 1, a*(r - log1p(r)) and log1p(r) <= r.
double kl_term(double a, double b) {
  if (a == 0.0) return b;
  if (b == 0.0) return kInfinity;
  const double r = (b - a) / a;
  return a * (r - std::log1p(r));
}

}  // namespace

double kl_divergence(const ProbabilityVector& p, const ProbabilityVector& q) {
  check_same_size(p, q);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double t = kl_term(p[i], q[i]);
    if (std::isinf(t)) return kInfinity;
    sum += t;
  }
  return sum;
}

double js_divergence(const ProbabilityVector& p, const ProbabilityVector& q) {
  check_same_size(p, q);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    // m > 0 wherever p or q is, so neither term is infinite.
    sum += kl_term(p[i], m) + kl_term(q[i], m);
  }
  // Rounding can overshoot the unit bound by an ulp on disjoint supports.
  return std::min(1.0, 0.5 * sum / std::numbers::ln2);
}

ProbabilityVector feature_to_distribution(std::span<const double> v) {
  if (v.empty()) throw ValidationError("feature_to_distribution: empty vector");
  const double lo = *std::min_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw ValidationError("feature_to_distribution: non-finite entry");
    out[i] = (v[i] - lo) + kDistributionEpsilon;
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return ProbabilityVector(std::move(out));
}

ProbabilityVector feature_to_distribution(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return feature_to_distribution(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::js:
      return "JS";
    case MetricKind::mh:
      return "MH";
    case MetricKind::ws:
      return "WS";
    case MetricKind::rmi:
      return "RMI";
  }
  return "JS";
}

MetricKind metric_kind_from_string(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "js") return MetricKind::js;
  if (t == "mh") return MetricKind::mh;
  if (t == "ws") return MetricKind::ws;
  if (t == "rmi") return MetricKind::rmi;
  throw ValidationError("unknown metric \"" + text + "\"");
}

SetMetricResult js_set(const featstore::PairedFeatures& pairs) {
  const auto n = pairs.size();
  if (n < 1) throw ValidationError("js_set: need at least one pair");
  SetMetricResult result;
  result.metric = MetricKind::js;
  result.bound_low = 0.0;
  result.bound_high = 1.0;
  result.normalization = "shift-min+1e-8,sum-to-one";
  result.n = n;
  result.p = static_cast<std::size_t>(pairs.defect.cols());
  std::vector<double> per_pair(n);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    const Eigen::VectorXd d = pairs.defect.row(row).transpose();
    const Eigen::VectorXd m = pairs.normal.row(row).transpose();
    per_pair[k] = js_divergence(feature_to_distribution(d), feature_to_distribution(m));
    total += per_pair[k];
  }
  result.value = total / static_cast<double>(n);
  result.per_pair_values = std::move(per_pair);
  return result;
}

}  // namespace repgap::metrics
