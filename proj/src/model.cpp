#include "simflow/model.hpp"

#include <fmt/format.h>

#include "simflow/errors.hpp"
#include "simflow/parallel.hpp"

namespace simflow {

std::vector<double> Model::draw_prior(Rng&) const {
  throw CapabilityError(fmt::format("model '{}' has no prior (fixed-parameter configuration)", name()));
}

double Model::log_prior(std::span<const double>) const {
  throw CapabilityError(fmt::format("model '{}' cannot evaluate a log-prior", name()));
}

double Model::log_likelihood(std::span<const double>, const Dataset&) const {
  throw CapabilityError(fmt::format("model '{}' cannot evaluate its likelihood", name()));
}

Distribution Model::analytic_posterior(const Dataset&) const {
  throw CapabilityError(fmt::format("model '{}' has no analytic posterior", name()));
}

double Model::log_marginal_likelihood(const Dataset&) const {
  throw CapabilityError(fmt::format("model '{}' has no analytic marginal likelihood", name()));
}

std::vector<double> Model::to_unconstrained(std::span<const double> theta) const {
  return {theta.begin(), theta.end()};
}

std::vector<double> Model::from_unconstrained(std::span<const double> u) const { return {u.begin(), u.end()}; }

double Model::log_abs_jacobian(std::span<const double>) const { return 0.0; }

ParamDraws sample_prior(const Model& model, Seed seed, std::size_t s) {
  if (s == 0) throw ValidationError("sample_prior: need at least one draw");
  if (!model.capabilities().prior) {
    throw CapabilityError(fmt::format("model '{}' has no prior (fixed-parameter configuration)", model.name()));
  }
  const std::size_t dim = model.param_dim();
  std::vector<double> values(s * dim);
  parallel_for(s, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    const auto theta = model.draw_prior(rng);
    std::copy(theta.begin(), theta.end(), values.begin() + static_cast<std::ptrdiff_t>(i * dim));
  });
  return ParamDraws(std::move(values), dim, DrawSource::prior);
}

Dataset simulate_data(const Model& model, std::span<const double> theta, Seed seed, std::size_t n) {
  if (theta.size() != model.param_dim()) {
    throw DomainError(fmt::format("model '{}' expects {} parameters, got {}", model.name(), model.param_dim(),
                                  theta.size()));
  }
  if (!model.in_support(theta)) throw DomainError(fmt::format("parameter outside the support of '{}'", model.name()));
  Rng rng(seed);
  return model.simulate(theta, n == 0 ? model.data_shape().n_per_group : n, rng);
}

double log_likelihood(const Model& model, std::span<const double> theta, const Dataset& y) {
  if (!model.capabilities().log_likelihood) {
    throw CapabilityError(fmt::format("model '{}' cannot evaluate its likelihood", model.name()));
  }
  return model.log_likelihood(theta, y);
}

Distribution analytic_posterior(const Model& model, const Dataset& y) {
  if (!model.capabilities().analytic_posterior) {
    throw CapabilityError(fmt::format("model '{}' has no analytic posterior", model.name()));
  }
  return model.analytic_posterior(y);
}

std::size_t per_group_count(const Model& model, const Dataset& y) {
  const std::size_t groups = model.data_shape().groups;
  return y.size() / groups;
}

}  // namespace simflow
