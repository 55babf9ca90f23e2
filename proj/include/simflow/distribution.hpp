#pragma once

#include <span>
#include <string>
#include <vector>

#include "simflow/rng.hpp"

namespace simflow {

/// Univariate distribution descriptor: conjugate posteriors, sampling distributions of point
/// estimators, and empirical distributions built from draws.
class Distribution {
 public:
  enum class Family { normal, student_t, beta, gamma, empirical };

  static Distribution normal(double mean, double sd);
  /// Location-scale Student t.
  static Distribution student_t(double df, double location, double scale);
  static Distribution beta(double a, double b);
  /// Shape/rate parameterization.
  static Distribution gamma(double shape, double rate);
  static Distribution empirical(std::vector<double> draws);

  Family family() const noexcept { return family_; }
  std::string family_name() const;
  /// Family parameters in constructor order; empty for empirical.
  const std::vector<double>& parameters() const noexcept { return params_; }

  double mean() const;
  double sd() const;
  double cdf(double x) const;
  double quantile(double p) const;
  double sample(Rng& rng) const;

  double support_lower() const;
  double support_upper() const;

  std::string describe() const;

 private:
  Distribution(Family family, std::vector<double> params) : family_(family), params_(std::move(params)) {}

  Family family_;
  std::vector<double> params_;
  std::vector<double> sorted_;  // empirical only
};

/// Marsaglia-Tsang gamma variate with unit scale.
double sample_standard_gamma(double shape, Rng& rng);

}  // namespace simflow
