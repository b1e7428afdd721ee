#include "repgap/stats.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "repgap/error.hpp"

namespace repgap::stats {

std::string to_string(GroupLabel label) {
  return label == GroupLabel::anomaly_fg ? "D_A_FG" : "D_A_BG";
}

std::string to_string(Tail tail) { return tail == Tail::lower ? "lower" : "upper"; }

Tail tail_from_string(const std::string& text) {
  if (text == "lower") return Tail::lower;
  if (text == "upper") return Tail::upper;
  throw UsageError("tail must be \"lower\" or \"upper\", got \"" + text + "\"");
}

std::string to_string(Decision decision) {
  return decision == Decision::reject_h0 ? "reject_H0" : "fail_to_reject";
}

MeasurementGroup::MeasurementGroup(GroupLabel l, std::vector<double> v)
    : label(l), values(std::move(v)) {
  if (values.size() < 2) {
    throw ValidationError("measurement group " + to_string(label) + " needs n >= 2, got " +
                          std::to_string(values.size()));
  }
  for (double x : values) {
    if (!std::isfinite(x)) throw ValidationError("measurement group " + to_string(label) + " has a non-finite value");
  }
}

double MeasurementGroup::mean() const {
  double sum = 0.0;
  for (double x : values) sum += x;
  return sum / static_cast<double>(values.size());
}

double MeasurementGroup::variance() const {
  const double m = mean();
  double ss = 0.0;
  for (double x : values) ss += (x - m) * (x - m);
  return ss / static_cast<double>(values.size() - 1);
}

double pooled_std(const MeasurementGroup& a, const MeasurementGroup& b) {
  const auto n1 = static_cast<double>(a.n());
  const auto n2 = static_cast<double>(b.n());
  if (n1 + n2 <= 2) throw ValidationError("pooled_std: need n1 + n2 > 2");
  return std::sqrt(((n1 - 1) * a.variance() + (n2 - 1) * b.variance()) / (n1 + n2 - 2));
}

TTestResult t_statistic(const MeasurementGroup& a, const MeasurementGroup& b) {
  TTestResult r;
  r.n_a = a.n();
  r.n_b = b.n();
  r.df = static_cast<int>(a.n() + b.n() - 2);
  r.mean_a = a.mean();
  r.mean_b = b.mean();
  r.pooled_std = pooled_std(a, b);
  const double diff = r.mean_a - r.mean_b;
  if (r.pooled_std == 0.0) {
    if (diff != 0.0) {
      throw NumericalError("t_statistic: zero pooled variance with different means (degenerate variance)");
    }
    r.t = 0.0;
    return r;
  }
  r.t = diff / (r.pooled_std * std::sqrt(1.0 / static_cast<double>(a.n()) + 1.0 / static_cast<double>(b.n())));
  return r;
}

namespace {

constexpr int kMaxIterations = 200;
constexpr double kTolerance = 1e-12;
constexpr double kTiny = 1e-300;

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kTolerance) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("incomplete beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double p_value(double t, int df) {
  if (df < 1) throw ValidationError("p_value: df must be >= 1");
  if (std::isnan(t)) throw NumericalError("p_value: t is NaN");
  const double nu = static_cast<double>(df);
  const double x = nu / (nu + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(0.5 * nu, 0.5, x);
  return t >= 0.0 ? tail : 1.0 - tail;
}

TTestResult hypothesis_test(const MeasurementGroup& fg, const MeasurementGroup& bg, double alpha,
                            Tail tail) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  TTestResult r = t_statistic(fg, bg);
  r.alpha = alpha;
  r.tail = tail;
  r.p_one_tailed = tail == Tail::upper ? p_value(r.t, r.df) : p_value(-r.t, r.df);
  r.decision = r.p_one_tailed < alpha ? Decision::reject_h0 : Decision::fail_to_reject;
  if (r.p_one_tailed >= kInconclusiveLow && r.p_one_tailed <= kInconclusiveHigh) {
    r.flags.push_back("inconclusive-small-sample");
  }
  return r;
}

std::vector<double> read_values_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const std::string cell = line.substr(first, line.find_first_of(",; \t", first) - first);
    std::istringstream is(cell);
    double v = 0.0;
    if (!(is >> v) || !is.eof()) {
      if (values.empty() && line_no == 1) continue;  // header
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": not a number: \"" + cell + "\"");
    }
    values.push_back(v);
  }
  return values;
}

}  // namespace repgap::stats
