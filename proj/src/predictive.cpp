#include "simflow/predictive.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "simflow/errors.hpp"
#include "simflow/parallel.hpp"

namespace simflow {
namespace {

void check_theta(const Model& model, std::span<const double> theta) {
  if (theta.size() != model.param_dim() || !model.in_support(theta)) {
    throw DomainError(fmt::format("parameter outside the domain of '{}'", model.name()));
  }
}

PredictiveResult finish(std::vector<double> reps, double observed, Side side, Seed tie_seed) {
  PredictiveResult r;
  r.side = side;
  r.observed_stat = observed;
  if (reps.size() > 1) r.ppp = posterior_predictive_pvalue(observed, reps, side, tie_seed);
  r.replication_stats = std::move(reps);
  return r;
}

}  // namespace

void PlausibleRegion::validate() const {
  if (!(lower < upper)) throw ValidationError("plausible region needs lower < upper");
}

PredictiveResult prior_pushforward_check(const Model& model, const DataStatistic& stat, const PlausibleRegion& region,
                                         std::size_t s, Seed seed) {
  region.validate();
  if (s == 0) throw ValidationError("prior pushforward check needs S >= 1");
  if (!model.capabilities().prior) throw CapabilityError(fmt::format("model '{}' has no prior", model.name()));
  const std::size_t n = model.data_shape().n_per_group;
  std::vector<double> t(s);
  parallel_for(s, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    const auto theta = model.draw_prior(rng);
    t[i] = stat(model.simulate(theta, n, rng));
  });
  std::size_t inside = 0;
  for (double v : t) inside += region.contains(v);
  PredictiveResult r;
  r.fraction_in_region = static_cast<double>(inside) / static_cast<double>(s);
  r.replication_stats = std::move(t);
  return r;
}

PredictiveResult frequentist_predictive_check(const Model& model, std::span<const double> theta_hat,
                                              const DataStatistic& stat, const Dataset& y_obs, std::size_t s,
                                              Seed seed, Side side) {
  return frequentist_predictive_check(
      model, theta_hat,
      DiscrepancyStatistic{stat.name, [stat](const Dataset&, const Dataset& rep) { return stat(rep); }}, y_obs, s,
      seed, side);
}

PredictiveResult frequentist_predictive_check(const Model& model, std::span<const double> theta_hat,
                                              const DiscrepancyStatistic& stat, const Dataset& y_obs, std::size_t s,
                                              Seed seed, Side side) {
  check_theta(model, theta_hat);
  if (s == 0) throw ValidationError("predictive check needs S >= 1");
  const std::size_t n = per_group_count(model, y_obs);
  std::vector<double> t(s);
  parallel_for(s, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {0, i}));
    t[i] = stat(y_obs, model.simulate(theta_hat, n, rng));
  });
  return finish(std::move(t), stat(y_obs, y_obs), side, derive_seed(seed, 1));
}

std::vector<Dataset> posterior_predictive_sample(const Model& model, const ParamDraws& posterior, std::size_t s,
                                                 std::size_t n, Seed seed) {
  if (s == 0) throw ValidationError("posterior predictive sampling needs S >= 1");
  if (posterior.size() < s) {
    throw ValidationError(fmt::format("posterior has {} draws, fewer than S = {}", posterior.size(), s));
  }
  if (posterior.dim() != model.param_dim()) throw ValidationError("posterior draws do not match the model dimension");
  std::vector<std::size_t> index(posterior.size());
  std::iota(index.begin(), index.end(), 0);
  if (posterior.size() > s) {
    Rng rng(derive_seed(seed, 0));
    for (std::size_t i = 0; i < s; ++i) std::swap(index[i], index[i + rng.below(index.size() - i)]);
  }
  const std::size_t per_group = n == 0 ? model.data_shape().n_per_group : n;
  std::vector<Dataset> out(s);
  parallel_for(s, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {1, i}));
    out[i] = model.simulate(posterior.row(index[i]), per_group, rng);
  });
  return out;
}

double posterior_predictive_pvalue(double observed_stat, std::span<const double> replication_stats, Side side,
                                   Seed tie_seed) {
  return simulation_pvalue(observed_stat, replication_stats, side, tie_seed);
}

PredictiveResult posterior_predictive_check(const Model& model, const ParamDraws& posterior,
                                            const DataStatistic& stat, const Dataset& y_obs, std::size_t s,
                                            Seed seed, Side side) {
  const auto reps = posterior_predictive_sample(model, posterior, s, per_group_count(model, y_obs), seed);
  std::vector<double> t(s);
  for (std::size_t i = 0; i < s; ++i) t[i] = stat(reps[i]);
  return finish(std::move(t), stat(y_obs), side, derive_seed(seed, 2));
}

CalibrationResult run_posterior_sbc(const Model& model, const Approximator& approximator, const Dataset& y_obs,
                                    const PosteriorSbcConfig& config) {
  approximator.check_compatible(model);
  if (config.s == 0 || config.d == 0) throw ValidationError("posterior SBC needs S >= 1 and D >= 1");

  std::vector<ParamStatistic> targets = config.targets;
  if (targets.empty()) targets.push_back(ParamStatistic::coordinate(0));

  CalibrationResult result;
  if (config.s < 50) result.warnings.push_back(fmt::format("S = {} is below the recommended minimum of 50", config.s));
  if (config.d < 9) result.warnings.push_back(fmt::format("D = {} is below the recommended minimum of 9", config.d));

  const ParamDraws truth = approximate(approximator.with_draws(config.s), model, y_obs, derive_seed(config.seed, 0));
  if (truth.size() < config.s) throw Error("approximator returned fewer draws than requested");
  const Approximator inner = approximator.with_draws(config.d);
  const std::size_t n = config.n_rep == 0 ? model.data_shape().n_per_group : config.n_rep;

  std::vector<std::vector<double>> pvalues(targets.size(), std::vector<double>(config.s));
  parallel_for(config.s, [&](std::size_t s) {
    try {
      const auto theta = truth.row(s);
      Rng data_rng(derive_seed(config.seed, {s, 1}));
      const Dataset augmented = Dataset::concat(y_obs, model.simulate(theta, n, data_rng));
      const ParamDraws draws = approximate(inner, model, augmented, derive_seed(config.seed, {s, 2}));
      std::vector<double> t(draws.size());
      for (std::size_t k = 0; k < targets.size(); ++k) {
        for (std::size_t m = 0; m < draws.size(); ++m) t[m] = targets[k](draws.row(m));
        pvalues[k][s] = sbc_pvalue(targets[k](theta), t, derive_seed(config.seed, {s, 3, k}));
      }
    } catch (BudgetError& e) {
      e.failing_index = s;
      throw;
    }
  });

  for (std::size_t k = 0; k < targets.size(); ++k) {
    TargetCalibration t;
    t.name = targets[k].name;
    t.pvalues = PValueSet{std::move(pvalues[k]), config.d};
    t.verdict = uniformity_test(t.pvalues, config.bins, config.coverage, derive_seed(config.seed, {0xD1A6ULL, k}));
    t.histogram = rank_histogram(t.pvalues, config.bins);
    result.targets.push_back(std::move(t));
  }
  result.metadata = {{"model", model.name()},
                     {"approximator", inner.name()},
                     {"S", std::to_string(config.s)},
                     {"D", std::to_string(config.d)},
                     {"observed_n", std::to_string(y_obs.size())},
                     {"ground_truth_source", "approximator under test, conditioned on y_obs"},
                     {"seed", std::to_string(config.seed)}};
  return result;
}

}  // namespace simflow
