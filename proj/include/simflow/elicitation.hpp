#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "simflow/model.hpp"
#include "simflow/rng.hpp"
#include "simflow/statistic.hpp"

namespace simflow {

/// Loss returned for hyperparameters outside the prior family's domain.
inline constexpr double kElicitationPenalty = 1e10;

/// Fit prior hyperparameters lambda of a built-in model so that quantiles of the prior-predictive
/// statistics match expert judgements.
struct ElicitationProblem {
  std::string model;                          // built-in model name
  std::map<std::string, double> fixed_params;  // hyperparameters held fixed
  std::vector<std::string> lambda_keys;        // free hyperparameters, all positive (optimized on the log scale)
  std::vector<DataStatistic> targets;
  std::vector<double> probes{0.1, 0.25, 0.5, 0.75, 0.9};
  /// Target-major: expert_stats[t * probes.size() + k] is the probe-k quantile of target t.
  std::vector<double> expert_stats;
  std::size_t sims_per_eval = 10'000;
  /// Width of a uniform jitter added to each simulated statistic. 1.0 turns integer counts into a
  /// continuous variable so the loss is not piecewise constant in lambda.
  double jitter = 0.0;

  void validate() const;
  std::size_t stat_count() const noexcept { return targets.size() * probes.size(); }
};

struct ElicitationResult {
  std::vector<double> lambda_star;
  double loss = 0.0;
  std::vector<double> loss_trace;  // best loss after each simplex iteration
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::string identifiability_note;
};

/// Model-implied statistics at lambda, target-major as in expert_stats. Simulation i uses the
/// stream derive_seed(seed, i) for every lambda (common random numbers). Throws DomainError for
/// invalid lambda.
std::vector<double> model_implied_statistics(const ElicitationProblem& problem, std::span<const double> lambda,
                                             Seed seed);

/// Sum of squared differences to the expert statistics; kElicitationPenalty for invalid lambda.
double elicitation_loss(const ElicitationProblem& problem, std::span<const double> lambda, Seed seed);

/// Nelder-Mead on log(lambda). Converged when the simplex diameter falls below tolerance or the
/// loss spread below tolerance^2.
ElicitationResult elicit_prior(const ElicitationProblem& problem, std::span<const double> lambda0, double tolerance,
                               std::size_t max_iter, Seed seed);

}  // namespace simflow
