#include "simflow/approximators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "simflow/errors.hpp"
#include "simflow/parallel.hpp"

namespace simflow {
namespace {

constexpr std::uint64_t kProposalBatch = 4096;

void attach_log_densities(const Model& model, const Dataset& y, ParamDraws& draws) {
  const auto caps = model.capabilities();
  if (!caps.log_prior || !caps.log_likelihood) return;
  draws.log_prior.resize(draws.size());
  draws.log_likelihood.resize(draws.size());
  for (std::size_t s = 0; s < draws.size(); ++s) {
    draws.log_prior[s] = model.log_prior(draws.row(s));
    draws.log_likelihood[s] = model.log_likelihood(draws.row(s), y);
  }
}

ParamDraws conjugate_draws(const Model& model, const Dataset& y, Seed seed, std::size_t m,
                           const Perturbation* perturbation) {
  const Distribution posterior = analytic_posterior(model, y);
  Rng rng(seed);
  std::vector<double> values(m);
  for (auto& v : values) v = posterior.sample(rng);
  DrawSource source = DrawSource::posterior;
  if (perturbation != nullptr) {
    const double mean = posterior.mean(), sd = posterior.sd();
    const double lo = posterior.support_lower(), hi = posterior.support_upper();
    for (auto& v : values) {
      v = mean + perturbation->mean_shift * sd + perturbation->sd_scale * (v - mean);
      v = std::clamp(v, lo, hi);
    }
    source = DrawSource::approximate_posterior;
  }
  ParamDraws draws(std::move(values), 1, source);
  attach_log_densities(model, y, draws);
  return draws;
}

double rwm_log_target(const Model& model, const Dataset& y, std::span<const double> u) {
  const auto theta = model.from_unconstrained(u);
  if (!model.in_support(theta)) return -std::numeric_limits<double>::infinity();
  const double lp = model.log_prior(theta);
  if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
  return lp + model.log_likelihood(theta, y) + model.log_abs_jacobian(u);
}

}  // namespace

std::string to_string(ApproximatorKind kind) {
  switch (kind) {
    case ApproximatorKind::exact_conjugate: return "exact_conjugate";
    case ApproximatorKind::perturbed_conjugate: return "perturbed_conjugate";
    case ApproximatorKind::random_walk_metropolis: return "random_walk_metropolis";
    case ApproximatorKind::abc_rejection: return "abc_rejection";
  }
  return "unknown";
}

void AbcConfig::validate() const {
  if (tolerance.has_value() == acceptance_quantile.has_value()) {
    throw ValidationError("abc: set exactly one of tolerance and acceptance_quantile");
  }
  if (tolerance && !(*tolerance >= 0.0)) throw ValidationError("abc: tolerance must be nonnegative");
  if (acceptance_quantile && !(*acceptance_quantile > 0.0 && *acceptance_quantile <= 1.0)) {
    throw ValidationError("abc: acceptance_quantile must lie in (0, 1]");
  }
  if (max_proposals == 0) throw ValidationError("abc: max_proposals must be positive");
  if (!distance.eval) throw ValidationError("abc: distance statistic missing");
}

Approximator::Approximator(ApproximatorKind kind, std::size_t draws) : kind_(kind), draws_(draws) {
  if (draws_ == 0) throw ValidationError("approximator: draw count must be positive");
}

Approximator Approximator::exact_conjugate(std::size_t draws) {
  return Approximator(ApproximatorKind::exact_conjugate, draws);
}

Approximator Approximator::perturbed_conjugate(Perturbation perturbation, std::size_t draws) {
  if (!(perturbation.sd_scale > 0.0)) throw ValidationError("perturbation: sd_scale must be positive");
  if (!std::isfinite(perturbation.mean_shift)) throw ValidationError("perturbation: mean_shift must be finite");
  Approximator a(ApproximatorKind::perturbed_conjugate, draws);
  a.perturbation_ = perturbation;
  return a;
}

Approximator Approximator::random_walk_metropolis(RwmConfig config, std::size_t draws) {
  if (config.chains == 0 || config.thin == 0) throw ValidationError("rwm: chains and thin must be positive");
  if (!(config.step_sd > 0.0)) throw ValidationError("rwm: step_sd must be positive");
  Approximator a(ApproximatorKind::random_walk_metropolis, draws);
  a.rwm_ = config;
  return a;
}

Approximator Approximator::abc_rejection(AbcConfig config, std::size_t draws) {
  config.validate();
  Approximator a(ApproximatorKind::abc_rejection, draws);
  a.abc_ = std::move(config);
  return a;
}

Approximator Approximator::with_draws(std::size_t draws) const {
  if (draws == 0) throw ValidationError("approximator: draw count must be positive");
  Approximator copy = *this;
  copy.draws_ = draws;
  return copy;
}

void Approximator::check_compatible(const Model& model) const {
  const auto caps = model.capabilities();
  switch (kind_) {
    case ApproximatorKind::exact_conjugate:
    case ApproximatorKind::perturbed_conjugate:
      if (!caps.analytic_posterior) {
        throw CapabilityError(fmt::format("{} needs a conjugate model; '{}' has no analytic posterior", name(), model.name()));
      }
      break;
    case ApproximatorKind::random_walk_metropolis:
      if (!caps.prior || !caps.log_prior || !caps.log_likelihood) {
        throw CapabilityError(fmt::format("rwm needs prior and likelihood densities; '{}' lacks them", model.name()));
      }
      break;
    case ApproximatorKind::abc_rejection:
      if (!caps.prior) throw CapabilityError(fmt::format("abc needs a prior to propose from; '{}' has none", model.name()));
      break;
  }
}

ParamDraws approximate(const Approximator& a, const Model& model, const Dataset& y, Seed seed) {
  a.check_compatible(model);
  const std::size_t m = a.draw_count();
  switch (a.kind()) {
    case ApproximatorKind::exact_conjugate: return conjugate_draws(model, y, seed, m, nullptr);
    case ApproximatorKind::perturbed_conjugate: return conjugate_draws(model, y, seed, m, &a.perturbation());
    case ApproximatorKind::random_walk_metropolis: {
      const auto& cfg = a.rwm_config();
      const std::size_t per_chain = (m + cfg.chains - 1) / cfg.chains;
      auto result = rwm_sample(model, y, cfg.chains, cfg.warmup + per_chain * cfg.thin, cfg.warmup, cfg.step_sd,
                               seed, cfg.thin);
      result.draws.truncate(m);
      return std::move(result.draws);
    }
    case ApproximatorKind::abc_rejection: return abc_rejection(model, y, *a.abc_config(), m, seed).draws;
  }
  throw ValidationError("unknown approximator");
}

RwmResult rwm_sample(const Model& model, const Dataset& y, std::size_t chains, std::size_t iterations,
                     std::size_t warmup, double step_sd, Seed seed, std::size_t thin) {
  if (chains == 0 || thin == 0) throw ValidationError("rwm: chains and thin must be positive");
  if (iterations <= warmup) throw ValidationError("rwm: iterations must exceed warmup");
  if (!(step_sd > 0.0)) throw ValidationError("rwm: step_sd must be positive");
  const auto caps = model.capabilities();
  if (!caps.prior || !caps.log_prior || !caps.log_likelihood) {
    throw CapabilityError(fmt::format("rwm needs prior and likelihood densities; '{}' lacks them", model.name()));
  }

  const std::size_t dim = model.param_dim();
  const std::size_t kept = (iterations - warmup) / thin;
  std::vector<std::vector<double>> chain_values(chains);
  std::vector<std::vector<double>> chain_lp(chains), chain_ll(chains);
  std::vector<double> acceptance(chains);

  parallel_for(chains, [&](std::size_t c) {
    Rng init_rng(derive_seed(seed, {c, 0}));
    Rng rng(derive_seed(seed, {c, 1}));
    std::vector<double> u = model.to_unconstrained(model.draw_prior(init_rng));
    double current = rwm_log_target(model, y, u);
    if (!std::isfinite(current)) {
      throw InitializationError(fmt::format("rwm: non-finite log-density at the initial point of chain {}", c));
    }
    std::vector<double> proposal(dim);
    std::size_t accepted = 0;
    auto& values = chain_values[c];
    values.reserve(kept * dim);
    for (std::size_t it = 0; it < iterations; ++it) {
      for (std::size_t j = 0; j < dim; ++j) proposal[j] = u[j] + step_sd * rng.normal();
      const double candidate = rwm_log_target(model, y, proposal);
      if (std::log(rng.uniform()) < candidate - current) {
        u.swap(proposal);
        current = candidate;
        ++accepted;
      }
      if (it >= warmup && (it - warmup + 1) % thin == 0) {
        const auto theta = model.from_unconstrained(u);
        values.insert(values.end(), theta.begin(), theta.end());
        chain_lp[c].push_back(model.log_prior(theta));
        chain_ll[c].push_back(model.log_likelihood(theta, y));
      }
    }
    acceptance[c] = static_cast<double>(accepted) / static_cast<double>(iterations);
  });

  std::vector<double> pooled;
  pooled.reserve(chains * kept * dim);
  RwmResult result;
  for (std::size_t c = 0; c < chains; ++c) pooled.insert(pooled.end(), chain_values[c].begin(), chain_values[c].end());
  result.draws = ParamDraws(std::move(pooled), dim, DrawSource::approximate_posterior);
  for (std::size_t c = 0; c < chains; ++c) {
    result.draws.log_prior.insert(result.draws.log_prior.end(), chain_lp[c].begin(), chain_lp[c].end());
    result.draws.log_likelihood.insert(result.draws.log_likelihood.end(), chain_ll[c].begin(), chain_ll[c].end());
  }
  result.chain_acceptance = acceptance;
  result.acceptance_rate = std::accumulate(acceptance.begin(), acceptance.end(), 0.0) / static_cast<double>(chains);
  if (result.acceptance_rate > 0.95) {
    result.warnings.push_back(fmt::format(
        "acceptance rate {:.3f} is above 0.95: step_sd is too small and the chains barely move", result.acceptance_rate));
  } else if (result.acceptance_rate < 0.05) {
    result.warnings.push_back(
        fmt::format("acceptance rate {:.3f} is below 0.05: step_sd is too large", result.acceptance_rate));
  }
  return result;
}

namespace {

struct Proposal {
  std::vector<double> theta;
  double distance;
};

Proposal make_proposal(const Model& model, const Dataset& y_obs, const DiscrepancyStatistic& distance,
                       std::size_t n, Seed seed, std::uint64_t index) {
  Rng rng(derive_seed(seed, index));
  Proposal p;
  p.theta = model.draw_prior(rng);
  const Dataset y_sim = model.simulate(p.theta, n, rng);
  p.distance = distance(y_obs, y_sim);
  if (std::isnan(p.distance)) p.distance = std::numeric_limits<double>::infinity();
  return p;
}

}  // namespace

std::vector<double> abc_proposal_distances(const Model& model, const Dataset& y_obs,
                                           const DiscrepancyStatistic& distance, std::size_t pool, Seed seed) {
  if (!model.capabilities().prior) throw CapabilityError("abc needs a prior to propose from");
  const std::size_t n = per_group_count(model, y_obs);
  std::vector<double> out(pool);
  parallel_for(pool, [&](std::size_t i) { out[i] = make_proposal(model, y_obs, distance, n, seed, i).distance; });
  return out;
}

AbcResult abc_rejection(const Model& model, const Dataset& y_obs, const AbcConfig& config, std::size_t m, Seed seed) {
  config.validate();
  if (m == 0) throw ValidationError("abc: need at least one accepted draw");
  if (!model.capabilities().prior) throw CapabilityError(fmt::format("abc needs a prior; '{}' has none", model.name()));
  if (y_obs.empty()) throw ValidationError("abc: observed dataset is empty");
  const std::size_t n = per_group_count(model, y_obs);
  const std::size_t dim = model.param_dim();

  AbcResult result;
  result.draws = ParamDraws(dim, DrawSource::approximate_posterior);
  result.draws.reserve(m);

  if (config.tolerance) {
    const double eps = *config.tolerance;
    result.epsilon = eps;
    std::size_t next = 0;
    while (result.accepted < m && next < config.max_proposals) {
      const std::size_t batch = std::min<std::size_t>(std::max<std::size_t>(kProposalBatch, m), config.max_proposals - next);
      std::vector<Proposal> proposals(batch);
      parallel_for(batch, [&](std::size_t i) {
        proposals[i] = make_proposal(model, y_obs, config.distance, n, seed, next + i);
      });
      for (std::size_t i = 0; i < batch && result.accepted < m; ++i) {
        ++result.proposals;
        if (proposals[i].distance <= eps) {
          result.draws.push_back(proposals[i].theta);
          ++result.accepted;
        }
      }
      next += batch;
    }
    result.acceptance_rate = static_cast<double>(result.accepted) / static_cast<double>(result.proposals);
    if (result.accepted < m) {
      throw BudgetError(fmt::format("abc: {} of {} draws accepted after {} proposals (acceptance rate {:.3g})",
                                    result.accepted, m, result.proposals, result.acceptance_rate),
                        result.acceptance_rate, result.accepted, result.proposals);
    }
    return result;
  }

  const std::size_t pool = config.max_proposals;
  std::vector<Proposal> proposals(pool);
  parallel_for(pool, [&](std::size_t i) { proposals[i] = make_proposal(model, y_obs, config.distance, n, seed, i); });
  const auto keep = static_cast<std::size_t>(std::ceil(*config.acceptance_quantile * static_cast<double>(pool) - 1e-9));
  std::vector<std::size_t> order(pool);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return proposals[a].distance < proposals[b].distance; });
  order.resize(keep);
  result.proposals = pool;
  result.accepted = keep;
  result.acceptance_rate = static_cast<double>(keep) / static_cast<double>(pool);
  result.epsilon = keep > 0 ? proposals[order.back()].distance : 0.0;
  if (keep < m) {
    throw BudgetError(fmt::format("abc: quantile {} of a {}-proposal pool keeps {} draws, fewer than the {} requested",
                                  *config.acceptance_quantile, pool, keep, m),
                      result.acceptance_rate, keep, pool);
  }
  std::sort(order.begin(), order.end());
  for (std::size_t i = 0; i < m; ++i) result.draws.push_back(proposals[order[i]].theta);
  return result;
}

}  // namespace simflow
