#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simflow/approximators.hpp"
#include "simflow/diagnostics.hpp"
#include "simflow/distribution.hpp"
#include "simflow/model.hpp"
#include "simflow/simtest.hpp"
#include "simflow/statistic.hpp"

namespace simflow {

struct SbcConfig {
  std::size_t s = 1000;
  std::size_t m = 99;
  std::vector<ParamStatistic> targets;  // empty means theta[0]
  Seed seed = 0;
  std::size_t bins = kDefaultBins;
  double coverage = kDefaultCoverage;
};

struct TargetCalibration {
  std::string name;
  PValueSet pvalues;
  UniformityVerdict verdict;
  std::vector<std::size_t> histogram;
};

struct CalibrationResult {
  std::vector<TargetCalibration> targets;
  std::map<std::string, std::string> metadata;
  std::vector<std::string> warnings;

  // Frequentist calibration only.
  std::optional<double> interval_level;
  std::optional<double> interval_coverage;
  std::size_t skipped = 0;
};

/// A scalar point estimator T-hat(y), the matching true value T(theta*), and optionally the
/// approximate sampling distribution of the estimator given y.
struct EstimatorSpec {
  std::string name;
  std::function<double(const Dataset&)> estimate;
  std::function<double(std::span<const double>)> truth;
  std::function<Distribution(const Dataset&)> sampling;
};

/// Built-in estimators for a model:
///   sample-mean       ybar; sampling Normal(ybar, sigma / sqrt(N)) for normal-normal
///   posterior-mean    conjugate posterior mean (any conjugate model)
///   t-test            difference of group means; sampling StudentT(n_a + n_b - 2, d, s_p sqrt(1/n_a + 1/n_b));
///                     truth is the difference of log-normal means
EstimatorSpec make_estimator(const std::string& name, const ModelPtr& model);

/// Where the true parameter comes from: a fixed vector, or a fresh prior draw per simulation.
struct ParamSource {
  std::vector<double> fixed;
  ModelPtr prior;

  static ParamSource at(std::vector<double> theta) { return {std::move(theta), nullptr}; }
  static ParamSource from_prior(ModelPtr model) { return {{}, std::move(model)}; }
  std::vector<double> draw(Rng& rng) const;
};

/// (1/M) sum 1(T_m < T*) plus each tie counted with probability 1/2.
double sbc_pvalue(double target_true, std::span<const double> target_draws, Seed tie_seed);

/// Simulation-based calibration: theta* ~ prior, y ~ pi(y | theta*), M draws from q(theta | y).
/// Budget errors from the approximator propagate with failing_index set to the outer index s.
CalibrationResult run_sbc(const Model& model, const Approximator& approximator, const SbcConfig& config);

/// p = P_q(T-hat <= T*) under the estimator's sampling distribution, with y ~ pi(y | theta*).
/// Also reports the empirical coverage of the central interval_level interval.
CalibrationResult run_frequentist_calibration(const Model& model, std::span<const double> theta_star,
                                              const EstimatorSpec& estimator, std::size_t s, Seed seed,
                                              double interval_level = 0.9, std::size_t bins = kDefaultBins);

/// A test used for power analysis: a statistic and a null distribution, either analytic or simulated.
struct PowerTest {
  DataStatistic statistic;
  Side side = Side::upper;
  std::optional<Distribution> analytic_null;
  std::size_t null_draws = 10'000;
};

struct PowerResult {
  double power = 0.0;
  double standard_error = 0.0;
  double alpha = 0.05;
  PValueSet pvalues;
};

/// Fraction of datasets simulated under theta* whose p-value under the theta0 null is <= alpha.
/// Either source may be a prior (Bayesian power analysis).
PowerResult power_analysis(const Model& model, const ParamSource& theta_star, const ParamSource& theta_null,
                           const PowerTest& test, double alpha, std::size_t s, Seed seed);

struct SharpnessResult {
  double mean_width = 0.0;
  double standard_error = 0.0;
};

/// Mean width of central alpha-probability intervals of q(theta | y) over S prior-predictive datasets.
SharpnessResult sharpness(const Approximator& approximator, const Model& model, double alpha, std::size_t s,
                          Seed seed, const ParamStatistic& target = ParamStatistic::coordinate(0));

enum class Distance { squared, absolute };

Distance parse_distance(const std::string& text);

struct AccuracyResult {
  double mean_distance = 0.0;
  double mc_se = 0.0;
  std::size_t s = 0;
};

/// (1/S) sum D(T-hat(y_s), T*_s) with its Monte Carlo standard error.
AccuracyResult estimator_accuracy(const Model& model, const ParamSource& theta_star, const EstimatorSpec& estimator,
                                  Distance distance, std::size_t s, Seed seed);

}  // namespace simflow
