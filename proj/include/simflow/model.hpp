#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "simflow/data.hpp"
#include "simflow/distribution.hpp"
#include "simflow/rng.hpp"

namespace simflow {

struct Capabilities {
  bool prior = false;  // proper prior that can be sampled
  bool log_prior = false;
  bool log_likelihood = false;
  bool analytic_posterior = false;
  bool analytic_marginal = false;
};

/// Observations are simulated per group; ungrouped models have a single group.
struct DataShape {
  std::size_t n_per_group = 1;
  std::size_t groups = 1;
  std::size_t obs_dim = 1;

  std::size_t total() const noexcept { return n_per_group * groups; }
};

/// Model name plus hyperparameters, as given on the command line or in a config file.
struct ModelSpec {
  std::string name;
  std::map<std::string, double> params;
};

/// A generative model pi(theta) pi(y | theta), or just pi(y | theta) for fixed-parameter models.
///
/// Implementations are immutable; every stochastic method takes the caller's stream so concurrent
/// use is safe.
class Model {
 public:
  virtual ~Model() = default;

  virtual const ModelSpec& spec() const noexcept = 0;
  const std::string& name() const noexcept { return spec().name; }
  virtual std::size_t param_dim() const noexcept = 0;
  virtual DataShape data_shape() const noexcept = 0;
  virtual Capabilities capabilities() const noexcept = 0;

  virtual bool in_support(std::span<const double> theta) const = 0;

  virtual std::vector<double> draw_prior(Rng& rng) const;
  virtual double log_prior(std::span<const double> theta) const;
  /// n observations per group.
  virtual Dataset simulate(std::span<const double> theta, std::size_t n, Rng& rng) const = 0;
  virtual double log_likelihood(std::span<const double> theta, const Dataset& y) const;
  /// Exact posterior of the (scalar) parameter. An empty dataset yields the prior.
  virtual Distribution analytic_posterior(const Dataset& y) const;
  virtual double log_marginal_likelihood(const Dataset& y) const;

  /// Fixed monotone map to an unconstrained space, used by random-walk Metropolis.
  virtual std::vector<double> to_unconstrained(std::span<const double> theta) const;
  virtual std::vector<double> from_unconstrained(std::span<const double> u) const;
  /// log |d theta / d u| at u.
  virtual double log_abs_jacobian(std::span<const double> u) const;

  /// Parameter values configured for fixed-parameter (frequentist) models; empty otherwise.
  virtual std::vector<double> fixed_theta() const { return {}; }
};

using ModelPtr = std::shared_ptr<const Model>;

/// Builds one of the built-in models:
///   normal-normal        mu0=0 tau0=1 sigma=1 n_obs=10
///   beta-binomial        a=1 b=1 trials=10 n_obs=1
///   poisson-gamma        a=2 b=1 n_obs=10
///   lognormal-two-group  mu=2 sigma=2 n_per_group=40      (theta = mu_a, mu_b, sigma; no prior)
/// Unknown names or keys raise ValidationError.
ModelPtr make_model(const ModelSpec& spec);
ModelPtr make_model(const std::string& name, const std::map<std::string, double>& params = {});

std::vector<std::string> model_names();

/// S independent prior draws; draw s uses the stream derive_seed(seed, s).
ParamDraws sample_prior(const Model& model, Seed seed, std::size_t s);

/// Simulates n observations per group (0 selects the model default).
Dataset simulate_data(const Model& model, std::span<const double> theta, Seed seed, std::size_t n = 0);

double log_likelihood(const Model& model, std::span<const double> theta, const Dataset& y);
Distribution analytic_posterior(const Model& model, const Dataset& y);

/// Observations per group in y, for models whose simulate() is indexed per group.
std::size_t per_group_count(const Model& model, const Dataset& y);

}  // namespace simflow
