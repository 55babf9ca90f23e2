#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "simflow/data.hpp"
#include "simflow/model.hpp"
#include "simflow/rng.hpp"
#include "simflow/statistic.hpp"

namespace simflow {

/// Negative-control distortion of the exact posterior: draws become
/// mean + mean_shift * sd + sd_scale * (theta - mean), clamped to the support.
struct Perturbation {
  double mean_shift = 0.0;  // in posterior-sd units
  double sd_scale = 1.0;
};

struct RwmConfig {
  std::size_t chains = 4;
  std::size_t warmup = 500;
  std::size_t thin = 1;
  double step_sd = 0.5;  // per coordinate, in the unconstrained space
};

/// Rejection ABC. Exactly one of tolerance (fixed epsilon) and acceptance_quantile (keep the
/// best fraction of a fixed pool of max_proposals prior proposals) must be set.
struct AbcConfig {
  DiscrepancyStatistic distance;
  std::optional<double> tolerance;
  std::optional<double> acceptance_quantile;
  std::size_t max_proposals = 1'000'000;

  void validate() const;
};

struct RwmResult {
  ParamDraws draws;  // pooled post-warmup draws, chain-major, with log densities attached
  double acceptance_rate = 0.0;
  std::vector<double> chain_acceptance;
  std::vector<std::string> warnings;
};

struct AbcResult {
  ParamDraws draws;
  double acceptance_rate = 0.0;
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  double epsilon = 0.0;  // tolerance in force (the pool quantile in quantile mode)
};

enum class ApproximatorKind { exact_conjugate, perturbed_conjugate, random_walk_metropolis, abc_rejection };

std::string to_string(ApproximatorKind kind);

/// A posterior approximator q(theta | y) producing M draws per dataset. Immutable.
class Approximator {
 public:
  static Approximator exact_conjugate(std::size_t draws);
  static Approximator perturbed_conjugate(Perturbation perturbation, std::size_t draws);
  static Approximator random_walk_metropolis(RwmConfig config, std::size_t draws);
  static Approximator abc_rejection(AbcConfig config, std::size_t draws);

  ApproximatorKind kind() const noexcept { return kind_; }
  std::string name() const { return to_string(kind_); }
  std::size_t draw_count() const noexcept { return draws_; }
  const Perturbation& perturbation() const noexcept { return perturbation_; }
  const RwmConfig& rwm_config() const noexcept { return rwm_; }
  const std::optional<AbcConfig>& abc_config() const noexcept { return abc_; }

  /// Throws CapabilityError when the model cannot support this approximator.
  void check_compatible(const Model& model) const;

  /// Same approximator with a different draw count.
  Approximator with_draws(std::size_t draws) const;

 private:
  Approximator(ApproximatorKind kind, std::size_t draws);

  ApproximatorKind kind_;
  std::size_t draws_;
  Perturbation perturbation_;
  RwmConfig rwm_;
  std::optional<AbcConfig> abc_;
};

/// M = a.draw_count() draws from q(theta | y).
ParamDraws approximate(const Approximator& a, const Model& model, const Dataset& y, Seed seed);

/// Random-walk Metropolis on the model's unconstrained parameterization. Each chain starts at a
/// prior draw; iterations include warmup.
RwmResult rwm_sample(const Model& model, const Dataset& y, std::size_t chains, std::size_t iterations,
                     std::size_t warmup, double step_sd, Seed seed, std::size_t thin = 1);

/// Rejection ABC with prior proposals. Never evaluates the likelihood.
AbcResult abc_rejection(const Model& model, const Dataset& y_obs, const AbcConfig& config, std::size_t m, Seed seed);

/// Distances of the first `pool` proposals that abc_rejection would make with the same seed.
std::vector<double> abc_proposal_distances(const Model& model, const Dataset& y_obs,
                                           const DiscrepancyStatistic& distance, std::size_t pool, Seed seed);

}  // namespace simflow
