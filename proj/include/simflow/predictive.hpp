#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "simflow/approximators.hpp"
#include "simflow/calibration.hpp"
#include "simflow/model.hpp"
#include "simflow/simtest.hpp"
#include "simflow/statistic.hpp"

namespace simflow {

struct PlausibleRegion {
  double lower = 0.0;
  double upper = 0.0;

  void validate() const;
  bool contains(double t) const noexcept { return lower <= t && t <= upper; }
};

struct PredictiveResult {
  std::vector<double> replication_stats;
  std::optional<double> observed_stat;
  std::optional<double> ppp;
  std::optional<double> fraction_in_region;
  Side side = Side::lower;
};

struct PosteriorSbcConfig {
  std::size_t s = 500;
  std::size_t d = 99;
  std::size_t n_rep = 0;  // observations per group in each y'; 0 selects the model default
  std::vector<ParamStatistic> targets;
  Seed seed = 0;
  std::size_t bins = kDefaultBins;
  double coverage = kDefaultCoverage;
};

/// Fraction of prior-predictive statistics T(y) falling inside the region.
PredictiveResult prior_pushforward_check(const Model& model, const DataStatistic& stat, const PlausibleRegion& region,
                                         std::size_t s, Seed seed);

/// Plug-in replications y' ~ pi(y | theta_hat). Replication statistics are T(y'); the observed one is T(y_obs).
PredictiveResult frequentist_predictive_check(const Model& model, std::span<const double> theta_hat,
                                              const DataStatistic& stat, const Dataset& y_obs, std::size_t s,
                                              Seed seed, Side side = Side::lower);

/// Discrepancy form: replication statistics are T(y_obs, y'), the observed one is T(y_obs, y_obs).
PredictiveResult frequentist_predictive_check(const Model& model, std::span<const double> theta_hat,
                                              const DiscrepancyStatistic& stat, const Dataset& y_obs, std::size_t s,
                                              Seed seed, Side side = Side::lower);

/// Ancestral sampling: S parameter draws (subsampled without replacement when the posterior has
/// more), each followed by n observations per group (0 selects the model default).
std::vector<Dataset> posterior_predictive_sample(const Model& model, const ParamDraws& posterior, std::size_t s,
                                                 std::size_t n, Seed seed);

/// Same normalized rank as simulation_pvalue.
double posterior_predictive_pvalue(double observed_stat, std::span<const double> replication_stats, Side side,
                                   Seed tie_seed = 0);

/// Bayesian posterior predictive check of y_obs with the given posterior draws.
PredictiveResult posterior_predictive_check(const Model& model, const ParamDraws& posterior,
                                            const DataStatistic& stat, const Dataset& y_obs, std::size_t s,
                                            Seed seed, Side side = Side::lower);

/// SBC around the observed data: theta' ~ q(theta | y_obs), y' ~ pi(y | theta'),
/// D draws from q(theta | y_obs, y'), ranked against theta'.
CalibrationResult run_posterior_sbc(const Model& model, const Approximator& approximator, const Dataset& y_obs,
                                    const PosteriorSbcConfig& config);

}  // namespace simflow
