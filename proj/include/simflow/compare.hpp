#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "simflow/data.hpp"
#include "simflow/model.hpp"
#include "simflow/rng.hpp"

namespace simflow {

struct EvidenceEstimate {
  double log_evidence = 0.0;
  double mc_se = 0.0;  // on the log scale
  std::size_t s = 0;
  std::string diagnostic;  // set when every likelihood underflowed
};

/// log (1/S) sum pi(y_obs | theta_s), theta_s ~ prior, via log-sum-exp. The standard error is the
/// delta-method SE of the log of the mean.
EvidenceEstimate marginal_likelihood_mc(const Model& model, const Dataset& y_obs, std::size_t s, Seed seed);

struct ModelSet {
  std::vector<ModelPtr> models;
  std::vector<double> prior_probs;

  void validate() const;
};

struct ModelComparison {
  std::vector<std::string> names;
  std::vector<EvidenceEstimate> evidence;
  std::vector<double> probabilities;
  /// log_bayes_factors[i][j] = log Z_i - log Z_j.
  std::vector<std::vector<double>> log_bayes_factors;
};

/// Posterior model probabilities proportional to prior_probs * Z. Model l uses the stream derive_seed(seed, l).
ModelComparison posterior_model_probs(const ModelSet& set, const Dataset& y_obs, std::size_t s, Seed seed);

struct WeightedDraws {
  ParamDraws draws;
  std::vector<double> log_weights;  // normalized: log-sum-exp is 0
  std::vector<double> weights;
  bool normalized = true;
  double ess = 0.0;

  double mean(std::size_t j = 0) const;
  /// Smallest draw whose cumulative weight reaches p.
  double quantile(double p, std::size_t j = 0) const;
};

/// Importance weights (alpha_prior - 1) log pi(theta) + (alpha_lik - 1) log pi(y | theta) on
/// equally weighted posterior draws; ESS = (sum w)^2 / sum w^2.
WeightedDraws power_scale_weights(const ParamDraws& draws, double alpha_prior, double alpha_lik);

using SweepPoint = std::map<std::string, double>;
using SweepOutputs = std::map<std::string, double>;
using SweepPipeline = std::function<SweepOutputs(const SweepPoint&, Seed)>;

struct SweepRow {
  SweepPoint point;
  Seed seed = 0;
  SweepOutputs outputs;
  std::optional<std::string> error;
};

/// Runs the pipeline once per grid point; cell i gets the seed derive_seed(seed, i). Failures are
/// recorded in the row and the sweep continues.
std::vector<SweepRow> sensitivity_sweep(const SweepPipeline& pipeline, const std::vector<SweepPoint>& grid, Seed seed);

/// Cartesian product of per-key value lists, in lexicographic key order.
std::vector<SweepPoint> grid_product(const std::map<std::string, std::vector<double>>& axes);

/// Tidy CSV: one column per input key, then outputs, then `error`.
std::string format_sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace simflow
