#include "simflow/elicitation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "simflow/errors.hpp"
#include "simflow/parallel.hpp"
#include "simflow/summary.hpp"

namespace simflow {
namespace {

std::vector<double> to_lambda(std::span<const double> u) {
  std::vector<double> lambda(u.size());
  std::transform(u.begin(), u.end(), lambda.begin(), [](double v) { return std::exp(v); });
  return lambda;
}

double diameter(const std::vector<std::vector<double>>& simplex) {
  double best = 0.0;
  for (std::size_t i = 1; i < simplex.size(); ++i) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < simplex[0].size(); ++j) d2 += std::pow(simplex[i][j] - simplex[0][j], 2);
    best = std::max(best, std::sqrt(d2));
  }
  return best;
}

}  // namespace

void ElicitationProblem::validate() const {
  if (lambda_keys.empty()) throw ValidationError("elicitation: no free hyperparameters");
  if (targets.empty() || probes.empty()) throw ValidationError("elicitation: need targets and probes");
  for (double p : probes) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("elicitation: probes must lie in (0, 1)");
  }
  if (expert_stats.size() != stat_count()) {
    throw ValidationError(fmt::format("elicitation: expected {} expert statistics ({} targets x {} probes), got {}",
                                      stat_count(), targets.size(), probes.size(), expert_stats.size()));
  }
  if (sims_per_eval < 100) throw ValidationError("elicitation: sims_per_eval must be at least 100");
  if (jitter < 0.0) throw ValidationError("elicitation: jitter must be nonnegative");
}

std::vector<double> model_implied_statistics(const ElicitationProblem& problem, std::span<const double> lambda,
                                             Seed seed) {
  if (lambda.size() != problem.lambda_keys.size()) throw ValidationError("elicitation: lambda has the wrong size");
  std::map<std::string, double> params = problem.fixed_params;
  for (std::size_t j = 0; j < lambda.size(); ++j) {
    if (!(std::isfinite(lambda[j]) && lambda[j] > 0.0)) {
      throw DomainError(fmt::format("hyperparameter {} = {} is not positive", problem.lambda_keys[j], lambda[j]));
    }
    params[problem.lambda_keys[j]] = lambda[j];
  }
  ModelPtr model;
  try {
    model = make_model(problem.model, params);
  } catch (const ValidationError& e) {
    throw DomainError(e.what());
  }
  if (!model->capabilities().prior) throw CapabilityError("elicitation needs a model with a prior");

  const std::size_t n_sims = problem.sims_per_eval, n_targets = problem.targets.size();
  const std::size_t n = model->data_shape().n_per_group;
  std::vector<double> t(n_targets * n_sims);
  parallel_for(n_sims, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    const auto theta = model->draw_prior(rng);
    const Dataset y = model->simulate(theta, n, rng);
    Rng jitter_rng(derive_seed(seed, {i, 1}));
    for (std::size_t k = 0; k < n_targets; ++k) {
      double v = problem.targets[k](y);
      if (problem.jitter > 0.0) v += problem.jitter * (jitter_rng.uniform() - 0.5);
      t[k * n_sims + i] = v;
    }
  });

  std::vector<double> out;
  out.reserve(problem.stat_count());
  for (std::size_t k = 0; k < n_targets; ++k) {
    std::span<double> column(t.data() + k * n_sims, n_sims);
    std::sort(column.begin(), column.end());
    for (double p : problem.probes) out.push_back(quantile_type7_sorted(column, p));
  }
  return out;
}

double elicitation_loss(const ElicitationProblem& problem, std::span<const double> lambda, Seed seed) {
  problem.validate();
  std::vector<double> implied;
  try {
    implied = model_implied_statistics(problem, lambda, seed);
  } catch (const DomainError&) {
    return kElicitationPenalty;
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < implied.size(); ++i) loss += std::pow(implied[i] - problem.expert_stats[i], 2);
  return std::isfinite(loss) ? loss : kElicitationPenalty;
}

ElicitationResult elicit_prior(const ElicitationProblem& problem, std::span<const double> lambda0, double tolerance,
                               std::size_t max_iter, Seed seed) {
  problem.validate();
  const std::size_t dim = problem.lambda_keys.size();
  if (lambda0.size() != dim) throw ValidationError("elicitation: lambda0 has the wrong size");
  for (double v : lambda0) {
    if (!(std::isfinite(v) && v > 0.0)) throw ValidationError("elicitation: lambda0 must be positive");
  }
  if (!(tolerance > 0.0)) throw ValidationError("elicitation: tolerance must be positive");

  ElicitationResult result;
  result.identifiability_note = fmt::format("{} expert statistics for {} hyperparameters", problem.stat_count(), dim);
  if (problem.stat_count() < dim) result.identifiability_note += " (fewer statistics than hyperparameters)";

  auto f = [&](const std::vector<double>& u) {
    ++result.evaluations;
    for (double v : u) {
      if (!std::isfinite(v) || std::abs(v) > 700.0) return kElicitationPenalty;
    }
    return elicitation_loss(problem, to_lambda(u), seed);
  };

  constexpr double kStep = 0.25;
  std::vector<std::vector<double>> x(dim + 1, std::vector<double>(dim));
  for (std::size_t j = 0; j < dim; ++j) x[0][j] = std::log(lambda0[j]);
  for (std::size_t i = 1; i <= dim; ++i) {
    x[i] = x[0];
    x[i][i - 1] += kStep;
  }
  std::vector<double> fx(dim + 1);
  for (std::size_t i = 0; i <= dim; ++i) fx[i] = f(x[i]);

  auto sort_simplex = [&] {
    std::vector<std::size_t> order(dim + 1);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
    std::vector<std::vector<double>> xs;
    std::vector<double> fs;
    for (auto i : order) {
      xs.push_back(x[i]);
      fs.push_back(fx[i]);
    }
    x = std::move(xs);
    fx = std::move(fs);
  };
  auto affine = [&](const std::vector<double>& c, const std::vector<double>& p, double t) {
    std::vector<double> out(dim);
    for (std::size_t j = 0; j < dim; ++j) out[j] = c[j] + t * (p[j] - c[j]);
    return out;
  };

  sort_simplex();
  while (result.iterations < max_iter) {
    if (diameter(x) < tolerance || fx[dim] - fx[0] < tolerance * tolerance) {
      result.converged = true;
      break;
    }
    ++result.iterations;
    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) centroid[j] += x[i][j] / static_cast<double>(dim);
    }
    const auto xr = affine(centroid, x[dim], -1.0);
    const double fr = f(xr);
    if (fr < fx[0]) {
      const auto xe = affine(centroid, x[dim], -2.0);
      const double fe = f(xe);
      if (fe < fr) {
        x[dim] = xe;
        fx[dim] = fe;
      } else {
        x[dim] = xr;
        fx[dim] = fr;
      }
    } else if (fr < fx[dim - 1]) {
      x[dim] = xr;
      fx[dim] = fr;
    } else {
      const bool outside = fr < fx[dim];
      const auto xc = outside ? affine(centroid, x[dim], -0.5) : affine(centroid, x[dim], 0.5);
      const double fc = f(xc);
      if (fc < (outside ? fr : fx[dim])) {
        x[dim] = xc;
        fx[dim] = fc;
      } else {
        for (std::size_t i = 1; i <= dim; ++i) {
          x[i] = affine(x[0], x[i], 0.5);
          fx[i] = f(x[i]);
        }
      }
    }
    sort_simplex();
    result.loss_trace.push_back(fx[0]);
  }
  if (!result.converged && (diameter(x) < tolerance || fx[dim] - fx[0] < tolerance * tolerance)) {
    result.converged = true;
  }
  result.lambda_star = to_lambda(x[0]);
  result.loss = fx[0];
  return result;
}

}  // namespace simflow
