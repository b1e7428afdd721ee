#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace repgap::stats {

enum class GroupLabel { anomaly_fg, anomaly_bg };

std::string to_string(GroupLabel label);

/// One group of per-pair measurements (n >= 2, finite values).
struct MeasurementGroup {
  GroupLabel label = GroupLabel::anomaly_fg;
  std::vector<double> values;

  MeasurementGroup() = default;
  MeasurementGroup(GroupLabel l, std::vector<double> v);

  std::size_t n() const noexcept { return values.size(); }
  double mean() const;
  /// Sample variance, divisor n - 1.
  double variance() const;
};

enum class Tail { lower, upper };
enum class Decision { reject_h0, fail_to_reject };

std::string to_string(Tail tail);
Tail tail_from_string(const std::string& text);
std::string to_string(Decision decision);

inline constexpr double kInconclusiveLow = 0.15;
inline constexpr double kInconclusiveHigh = 0.20;

struct TTestResult {
  double t = 0.0;
  int df = 0;
  double p_one_tailed = 0.5;
  double pooled_std = 0.0;
  Decision decision = Decision::fail_to_reject;
  Tail tail = Tail::lower;
  double alpha = 0.05;
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::vector<std::string> flags;
};

double pooled_std(const MeasurementGroup& a, const MeasurementGroup& b);

/// Homoscedastic two-sample t statistic; fills t, df, pooled_std and means.
TTestResult t_statistic(const MeasurementGroup& a, const MeasurementGroup& b);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// Upper-tail probability P(T >= t) of Student's t with `df` degrees of freedom.
double p_value(double t, int df);

/// Tests `fg` against `bg`. With the default lower tail, H1 is
/// mean(fg) < mean(bg).
TTestResult hypothesis_test(const MeasurementGroup& fg, const MeasurementGroup& bg, double alpha,
                            Tail tail = Tail::lower);

/// One value per line; a non-numeric first line is treated as a header.
std::vector<double> read_values_csv(const std::filesystem::path& path);

}  // namespace repgap::stats
