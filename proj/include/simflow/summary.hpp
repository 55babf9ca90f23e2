#pragma once

#include <span>
#include <vector>

namespace simflow {

double mean(std::span<const double> x);
/// Unbiased (n - 1) sample variance; 0 for fewer than two values.
double variance(std::span<const double> x);
double sd(std::span<const double> x);

/// Hyndman-Fan type 7 quantile (linear interpolation between order statistics).
double quantile_type7(std::span<const double> x, double p);
double quantile_type7_sorted(std::span<const double> sorted, double p);
std::vector<double> quantiles_type7(std::span<const double> x, std::span<const double> probs);

double lag1_autocorrelation(std::span<const double> x);

/// log(sum(exp(x))) with max-shift stabilization; -inf for empty or all -inf input.
double log_sum_exp(std::span<const double> x);

/// Ordinary least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y);

}  // namespace simflow
