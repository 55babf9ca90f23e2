#include "simflow/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "simflow/errors.hpp"
#include "simflow/parallel.hpp"
#include "simflow/summary.hpp"

namespace simflow {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double model_param(const Model& model, const std::string& key) {
  const auto& params = model.spec().params;
  auto it = params.find(key);
  if (it == params.end()) throw ValidationError(fmt::format("model '{}' has no parameter '{}'", model.name(), key));
  return it->second;
}

std::vector<TargetCalibration> verdicts(const std::vector<std::string>& names,
                                        std::vector<std::vector<double>> pvalues,
                                        std::optional<std::size_t> granularity, std::size_t bins, double coverage,
                                        Seed seed) {
  std::vector<TargetCalibration> out;
  for (std::size_t k = 0; k < names.size(); ++k) {
    TargetCalibration t;
    t.name = names[k];
    t.pvalues = PValueSet{std::move(pvalues[k]), granularity};
    t.verdict = uniformity_test(t.pvalues, bins, coverage, derive_seed(seed, k));
    t.histogram = rank_histogram(t.pvalues, bins);
    out.push_back(std::move(t));
  }
  return out;
}

double distance_value(Distance d, double estimate, double truth) {
  const double diff = estimate - truth;
  return d == Distance::squared ? diff * diff : std::abs(diff);
}

}  // namespace

std::vector<double> ParamSource::draw(Rng& rng) const {
  if (prior) return prior->draw_prior(rng);
  return fixed;
}

EstimatorSpec make_estimator(const std::string& name, const ModelPtr& model) {
  if (!model) throw ValidationError("estimator needs a model");
  const std::string& m = model->name();
  if (name == "sample-mean") {
    EstimatorSpec e;
    e.name = name;
    e.estimate = [](const Dataset& y) { return y.empty() ? kNaN : mean(y.values()); };
    if (m == "normal-normal") {
      const double sigma = model_param(*model, "sigma");
      e.truth = [](std::span<const double> theta) { return theta[0]; };
      e.sampling = [sigma](const Dataset& y) {
        return Distribution::normal(mean(y.values()), sigma / std::sqrt(static_cast<double>(y.size())));
      };
    } else if (m == "poisson-gamma") {
      e.truth = [](std::span<const double> theta) { return theta[0]; };
      e.sampling = [](const Dataset& y) {
        const double ybar = mean(y.values());
        return Distribution::normal(ybar, std::sqrt(ybar / static_cast<double>(y.size())));
      };
    } else if (m == "beta-binomial") {
      const double trials = model_param(*model, "trials");
      e.truth = [trials](std::span<const double> theta) { return trials * theta[0]; };
      e.sampling = [trials](const Dataset& y) {
        const double ybar = mean(y.values());
        const double p = ybar / trials;
        return Distribution::normal(ybar, std::sqrt(trials * p * (1.0 - p) / static_cast<double>(y.size())));
      };
    } else {
      throw CapabilityError(fmt::format("sample-mean estimator is not defined for '{}'", m));
    }
    return e;
  }
  if (name == "posterior-mean") {
    if (!model->capabilities().analytic_posterior) {
      throw CapabilityError(fmt::format("posterior-mean estimator needs a conjugate model, got '{}'", m));
    }
    EstimatorSpec e;
    e.name = name;
    e.estimate = [model](const Dataset& y) { return model->analytic_posterior(y).mean(); };
    e.truth = [](std::span<const double> theta) { return theta[0]; };
    e.sampling = [model](const Dataset& y) { return model->analytic_posterior(y); };
    return e;
  }
  if (name == "t-test") {
    if (m != "lognormal-two-group") throw CapabilityError("t-test estimator needs the lognormal-two-group model");
    EstimatorSpec e;
    e.name = name;
    e.estimate = [](const Dataset& y) {
      const auto a = y.group_values(0), b = y.group_values(1);
      if (a.empty() || b.empty()) return kNaN;
      return mean(a) - mean(b);
    };
    e.truth = [](std::span<const double> theta) {
      const double half_var = 0.5 * theta[2] * theta[2];
      return std::exp(theta[0] + half_var) - std::exp(theta[1] + half_var);
    };
    e.sampling = [](const Dataset& y) {
      const auto a = y.group_values(0), b = y.group_values(1);
      const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
      if (na < 2 || nb < 2) throw DomainError("t-test needs two observations per group");
      const double pooled = ((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / (na + nb - 2.0);
      const double se = std::sqrt(pooled * (1.0 / na + 1.0 / nb));
      if (!(se > 0.0)) throw DomainError("t-test: zero pooled variance");
      return Distribution::student_t(na + nb - 2.0, mean(a) - mean(b), se);
    };
    return e;
  }
  throw ValidationError("unknown estimator '" + name + "' (sample-mean, posterior-mean, t-test)");
}

double sbc_pvalue(double target_true, std::span<const double> target_draws, Seed tie_seed) {
  if (target_draws.empty()) throw ValidationError("sbc_pvalue: need at least one draw");
  std::size_t count = 0, ties = 0;
  for (double t : target_draws) {
    if (t < target_true) {
      ++count;
    } else if (t == target_true) {
      ++ties;
    }
  }
  if (ties > 0) {
    Rng rng(tie_seed);
    for (std::size_t i = 0; i < ties; ++i) count += rng() >> 63;
  }
  return static_cast<double>(count) / static_cast<double>(target_draws.size());
}

CalibrationResult run_sbc(const Model& model, const Approximator& approximator, const SbcConfig& config) {
  if (!model.capabilities().prior) throw CapabilityError(fmt::format("model '{}' has no prior", model.name()));
  approximator.check_compatible(model);
  if (config.s == 0) throw ValidationError("SBC needs S >= 1");
  const Approximator a = approximator.with_draws(config.m);
  if (a.draw_count() == 0) throw ValidationError("SBC needs M >= 1");

  std::vector<ParamStatistic> targets = config.targets;
  if (targets.empty()) targets.push_back(ParamStatistic::coordinate(0));

  CalibrationResult result;
  if (config.s < 50) result.warnings.push_back(fmt::format("S = {} is below the recommended minimum of 50", config.s));
  if (config.m < 9) result.warnings.push_back(fmt::format("M = {} is below the recommended minimum of 9", config.m));

  std::vector<std::vector<double>> pvalues(targets.size(), std::vector<double>(config.s));
  const std::size_t n = model.data_shape().n_per_group;
  parallel_for(config.s, [&](std::size_t s) {
    try {
      Rng prior_rng(derive_seed(config.seed, {s, 0}));
      const auto theta = model.draw_prior(prior_rng);
      Rng data_rng(derive_seed(config.seed, {s, 1}));
      const Dataset y = model.simulate(theta, n, data_rng);
      const ParamDraws draws = approximate(a, model, y, derive_seed(config.seed, {s, 2}));
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

  std::vector<std::string> names;
  for (const auto& t : targets) names.push_back(t.name);
  result.targets = verdicts(names, std::move(pvalues), config.m, config.bins, config.coverage,
                            derive_seed(config.seed, 0xD1A6ULL));
  result.metadata = {{"model", model.name()},
                     {"approximator", a.name()},
                     {"S", std::to_string(config.s)},
                     {"M", std::to_string(config.m)},
                     {"seed", std::to_string(config.seed)}};
  return result;
}

CalibrationResult run_frequentist_calibration(const Model& model, std::span<const double> theta_star,
                                              const EstimatorSpec& estimator, std::size_t s, Seed seed,
                                              double interval_level, std::size_t bins) {
  if (theta_star.size() != model.param_dim() || !model.in_support(theta_star)) {
    throw DomainError(fmt::format("true parameter outside the domain of '{}'", model.name()));
  }
  if (!estimator.sampling) throw ValidationError("estimator '" + estimator.name + "' has no sampling distribution");
  if (!(interval_level > 0.0 && interval_level < 1.0)) throw ValidationError("interval level must lie in (0, 1)");
  if (s == 0) throw ValidationError("frequentist calibration needs S >= 1");

  const double truth = estimator.truth(theta_star);
  const std::size_t n = model.data_shape().n_per_group;
  std::vector<double> p(s, kNaN);
  std::vector<char> covered(s, 0);
  parallel_for(s, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    const Dataset y = model.simulate(theta_star, n, rng);
    try {
      if (!std::isfinite(estimator.estimate(y))) return;
      const Distribution q = estimator.sampling(y);
      const double lo = q.quantile(0.5 - interval_level / 2.0);
      const double hi = q.quantile(0.5 + interval_level / 2.0);
      p[i] = q.cdf(truth);
      covered[i] = lo <= truth && truth <= hi;
    } catch (const std::exception&) {
      // recorded as skipped below
    }
  });

  std::vector<double> kept;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < s; ++i) {
    if (std::isnan(p[i])) continue;
    kept.push_back(p[i]);
    hits += covered[i];
  }

  CalibrationResult result;
  result.skipped = s - kept.size();
  if (result.skipped > 0) {
    result.warnings.push_back(fmt::format("estimator failed on {} of {} datasets", result.skipped, s));
  }
  if (kept.empty()) throw Error("estimator failed on every simulated dataset");
  result.interval_level = interval_level;
  result.interval_coverage = static_cast<double>(hits) / static_cast<double>(kept.size());
  result.targets = verdicts({estimator.name}, {std::move(kept)}, std::nullopt, bins, kDefaultCoverage,
                            derive_seed(seed, 0xD1A6ULL));
  result.metadata = {{"model", model.name()},
                     {"estimator", estimator.name},
                     {"S", std::to_string(s)},
                     {"seed", std::to_string(seed)}};
  return result;
}

PowerResult power_analysis(const Model& model, const ParamSource& theta_star, const ParamSource& theta_null,
                           const PowerTest& test, double alpha, std::size_t s, Seed seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("power analysis: alpha must lie in (0, 1)");
  if (s == 0) throw ValidationError("power analysis needs S >= 1");
  const std::size_t n = model.data_shape().n_per_group;

  // Null distribution of the statistic: analytic, simulated at a fixed theta0, or the prior predictive.
  std::vector<double> null;
  if (!test.analytic_null) {
    if (test.null_draws == 0) throw ValidationError("power analysis needs null draws");
    if (theta_null.prior) {
      null.resize(test.null_draws);
      parallel_for(test.null_draws, [&](std::size_t i) {
        for (std::size_t attempt = 0; attempt <= kNullRetryCap; ++attempt) {
          Rng rng(derive_seed(seed, {0, i, attempt}));
          const auto theta = theta_null.prior->draw_prior(rng);
          const double t = test.statistic(model.simulate(theta, n, rng));
          if (std::isfinite(t)) {
            null[i] = t;
            return;
          }
        }
        throw Error(fmt::format("statistic '{}' undefined on prior-predictive null draws", test.statistic.name));
      });
    } else {
      null = simulate_null(model, theta_null.fixed, test.statistic, test.null_draws, derive_seed(seed, 0), n).values;
    }
  }

  std::vector<double> p(s);
  parallel_for(s, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {1, i}));
    const auto theta = theta_star.draw(rng);
    const double t = test.statistic(model.simulate(theta, n, rng));
    if (test.analytic_null) {
      const double lower = test.analytic_null->cdf(t);
      const double upper = 1.0 - lower;
      switch (test.side) {
        case Side::lower: p[i] = lower; break;
        case Side::upper: p[i] = upper; break;
        case Side::two_sided: p[i] = std::min(1.0, 2.0 * std::min(lower, upper)); break;
      }
    } else if (!std::isfinite(t)) {
      p[i] = 1.0;  // no evidence against the null on an undefined statistic
    } else {
      p[i] = simulation_pvalue(t, null, test.side, derive_seed(seed, {2, i}));
    }
  });

  PowerResult result;
  result.alpha = alpha;
  std::size_t rejections = 0;
  for (double v : p) rejections += v <= alpha;
  result.power = static_cast<double>(rejections) / static_cast<double>(s);
  result.standard_error = std::sqrt(result.power * (1.0 - result.power) / static_cast<double>(s));
  result.pvalues = PValueSet{std::move(p), std::nullopt};
  return result;
}

SharpnessResult sharpness(const Approximator& approximator, const Model& model, double alpha, std::size_t s,
                          Seed seed, const ParamStatistic& target) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("sharpness: alpha must lie in (0, 1)");
  if (s == 0) throw ValidationError("sharpness needs S >= 1");
  if (approximator.draw_count() < 2) throw ValidationError("sharpness needs at least two draws per dataset");
  if (!model.capabilities().prior) throw CapabilityError(fmt::format("model '{}' has no prior", model.name()));
  approximator.check_compatible(model);

  const std::size_t n = model.data_shape().n_per_group;
  std::vector<double> widths(s);
  parallel_for(s, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {i, 0}));
    const auto theta = model.draw_prior(rng);
    const Dataset y = model.simulate(theta, n, rng);
    const ParamDraws draws = approximate(approximator, model, y, derive_seed(seed, {i, 1}));
    std::vector<double> t(draws.size());
    for (std::size_t m = 0; m < draws.size(); ++m) t[m] = target(draws.row(m));
    std::sort(t.begin(), t.end());
    widths[i] = quantile_type7_sorted(t, 0.5 + alpha / 2.0) - quantile_type7_sorted(t, 0.5 - alpha / 2.0);
  });
  SharpnessResult result;
  result.mean_width = mean(widths);
  result.standard_error = s > 1 ? sd(widths) / std::sqrt(static_cast<double>(s)) : 0.0;
  return result;
}

Distance parse_distance(const std::string& text) {
  if (text == "squared") return Distance::squared;
  if (text == "absolute") return Distance::absolute;
  throw ValidationError("distance must be squared or absolute, got " + text);
}

AccuracyResult estimator_accuracy(const Model& model, const ParamSource& theta_star, const EstimatorSpec& estimator,
                                  Distance distance, std::size_t s, Seed seed) {
  if (s < 2) throw ValidationError("estimator accuracy needs S >= 2");
  if (!theta_star.prior && (theta_star.fixed.size() != model.param_dim() || !model.in_support(theta_star.fixed))) {
    throw DomainError(fmt::format("true parameter outside the domain of '{}'", model.name()));
  }
  const std::size_t n = model.data_shape().n_per_group;
  std::vector<double> d(s);
  parallel_for(s, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    const auto theta = theta_star.draw(rng);
    const Dataset y = model.simulate(theta, n, rng);
    d[i] = distance_value(distance, estimator.estimate(y), estimator.truth(theta));
  });
  AccuracyResult result;
  result.s = s;
  result.mean_distance = mean(d);
  result.mc_se = sd(d) / std::sqrt(static_cast<double>(s));
  return result;
}

}  // namespace simflow
