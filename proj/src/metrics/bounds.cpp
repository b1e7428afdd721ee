#include <algorithm>
#include <cmath>
#include <sstream>

#include "repgap/metrics.hpp"

namespace repgap::metrics {

bool BoundDiagnostic::passed() const noexcept {
  return std::all_of(checks.begin(), checks.end(),
                     [](const BoundCheck& c) { return c.skipped || c.passed; });
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

BoundCheck range_check(const std::string& name, double value, double lo, double hi) {
  BoundCheck c;
  c.name = name;
  c.passed = std::isfinite(value) && value >= lo - kBoundSlack && value <= hi + kBoundSlack;
  c.detail = "value " + fmt(value) + " in [" + fmt(lo) + ", " + fmt(hi) + "]";
  return c;
}

}  // namespace

BoundDiagnostic verify_bounds(const SetMetricResult& result, const Eigen::MatrixXd* normal) {
  BoundDiagnostic diag;
  diag.metric = result.metric;
  switch (result.metric) {
    case MetricKind::js: {
      diag.checks.push_back(range_check("JS range: 0 <= JSD <= 1", result.value, 0.0, 1.0));
      if (result.per_pair_values) {
        const auto& v = *result.per_pair_values;
        std::size_t bad = 0;
        for (double x : v) bad += (x < -kBoundSlack || x > 1.0 + kBoundSlack || !std::isfinite(x)) ? 1 : 0;
        diag.checks.push_back({"JS range (per pair)", bad == 0, false,
                               std::to_string(bad) + " of " + std::to_string(v.size()) + " outside [0, 1]"});
      }
      break;
    }
    case MetricKind::mh: {
      diag.checks.push_back(range_check("MH non-negativity", result.value, 0.0, kInfinity));
      BoundCheck info{"MH cross-set percent of bound (reported, not asserted)", true, false, ""};
      info.detail = result.pct_of_bound ? fmt(*result.pct_of_bound) + "% of " + fmt(result.bound_high)
                                        : "no bound context";
      diag.checks.push_back(info);
      BoundCheck within{"MH range: within-set distance <= bound(n, p)", true, false, ""};
      if (normal != nullptr && normal->rows() >= 2) {
        const std::vector<double> d = within_set_mahalanobis(*normal);
        const double worst = *std::max_element(d.begin(), d.end());
        const double bound = mahalanobis_upper_bound(normal->rows(), normal->cols());
        within.passed = worst <= bound + kBoundSlack;
        within.detail = "max within-set distance " + fmt(worst) + " vs bound " + fmt(bound) +
                        " (n=" + std::to_string(normal->rows()) + ", p=" +
                        std::to_string(normal->cols()) + ")";
      } else {
        within.skipped = true;
        within.detail = "normal set unavailable";
      }
      diag.checks.push_back(within);
      break;
    }
    case MetricKind::ws: {
      diag.checks.push_back(range_check("WS non-negativity (unbounded above)", result.value, 0.0, kInfinity));
      if (result.per_pair_values) {
        const auto& v = *result.per_pair_values;
        const bool ok = std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x) && x >= 0.0; });
        diag.checks.push_back({"WS per-pair non-negativity", ok, false, ""});
      }
      break;
    }
    case MetricKind::rmi: {
      BoundCheck c{"RMI finite (unbounded below, +inf above)", !std::isnan(result.value) && result.value < kInfinity,
                   false, "value " + fmt(result.value)};
      diag.checks.push_back(c);
      break;
    }
  }
  return diag;
}

}  // namespace repgap::metrics
