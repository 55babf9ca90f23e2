#include "simflow/summary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "simflow/errors.hpp"

namespace simflow {

double mean(std::span<const double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double sd(std::span<const double> x) { return std::sqrt(variance(x)); }

double quantile_type7_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ValidationError("quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("quantile level must lie in [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile_type7(std::span<const double> x, double p) {
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_type7_sorted(sorted, p);
}

std::vector<double> quantiles_type7(std::span<const double> x, std::span<const double> probs) {
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(probs.size());
  for (double p : probs) out.push_back(quantile_type7_sorted(sorted, p));
  return out;
}

double lag1_autocorrelation(std::span<const double> x) {
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean(x);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    den += (x[i] - m) * (x[i] - m);
    if (i + 1 < x.size()) num += (x[i] - m) * (x[i + 1] - m);
  }
  return num / den;
}

double log_sum_exp(std::span<const double> x) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  if (x.empty()) return neg_inf;
  const double top = *std::max_element(x.begin(), x.end());
  if (top == neg_inf) return neg_inf;
  double total = 0.0;
  for (double v : x) total += std::exp(v - top);
  return top + std::log(total);
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace simflow
