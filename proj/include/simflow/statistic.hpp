#pragma once

#include <functional>
#include <span>
#include <string>

#include "simflow/data.hpp"

namespace simflow {

enum class Arity { data_only, param_only, data_pair };

/// T(y): a scalar summary of one dataset.
struct DataStatistic {
  std::string name;
  std::function<double(const Dataset&)> eval;

  double operator()(const Dataset& y) const { return eval(y); }
  static constexpr Arity arity = Arity::data_only;
};

/// T(theta): a scalar target of inference (a coordinate or any pushforward of the parameters).
struct ParamStatistic {
  std::string name;
  std::function<double(std::span<const double>)> eval;

  double operator()(std::span<const double> theta) const { return eval(theta); }
  static constexpr Arity arity = Arity::param_only;

  static ParamStatistic coordinate(std::size_t index);
};

/// T(y_obs, y'): a discrepancy or distance between observed and replicated data.
struct DiscrepancyStatistic {
  std::string name;
  std::function<double(const Dataset& observed, const Dataset& replicated)> eval;

  double operator()(const Dataset& observed, const Dataset& replicated) const { return eval(observed, replicated); }
  static constexpr Arity arity = Arity::data_pair;

  /// |T(y_obs) - T(y')|, the usual ABC distance on a summary statistic.
  static DiscrepancyStatistic absolute_difference(DataStatistic stat);
  /// T(y') - T(y_obs); zero when the replication equals the observation.
  static DiscrepancyStatistic difference(DataStatistic stat);
};

/// Built-in data statistics: mean, variance, sd, sum, max, min, lag1_autocorrelation,
/// mean_difference, pooled_t, variance_ratio. The two-group statistics compare label 0 against
/// label 1 and return NaN when undefined (for example zero pooled variance).
DataStatistic make_data_statistic(const std::string& name);

/// A statistic that ignores its input.
DataStatistic constant_statistic(double value);

/// `theta` (first coordinate), `theta[j]`, or `exp_theta`, `logit_theta` pushforwards of the first coordinate.
ParamStatistic make_param_statistic(const std::string& name);

/// `abs:<stat>` or `diff:<stat>` where <stat> is a built-in data statistic.
DiscrepancyStatistic make_discrepancy(const std::string& name);

}  // namespace simflow
