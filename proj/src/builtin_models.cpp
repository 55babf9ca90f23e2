#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "simflow/errors.hpp"
#include "simflow/model.hpp"

namespace simflow {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

ModelSpec with_defaults(const ModelSpec& given, const std::map<std::string, double>& defaults) {
  ModelSpec out{given.name, defaults};
  for (const auto& [key, value] : given.params) {
    if (!defaults.contains(key)) throw ValidationError(fmt::format("model '{}' has no hyperparameter '{}'", given.name, key));
    if (!std::isfinite(value)) throw ValidationError(fmt::format("hyperparameter '{}' must be finite", key));
    out.params[key] = value;
  }
  return out;
}

std::size_t as_count(const ModelSpec& spec, const std::string& key) {
  const double v = spec.params.at(key);
  if (v < 1.0 || v != std::floor(v)) throw ValidationError(fmt::format("hyperparameter '{}' must be a positive integer", key));
  return static_cast<std::size_t>(v);
}

double require_positive(const ModelSpec& spec, const std::string& key) {
  const double v = spec.params.at(key);
  if (!(v > 0.0)) throw ValidationError(fmt::format("hyperparameter '{}' must be positive", key));
  return v;
}

bool is_count(double v) { return v >= 0.0 && v == std::floor(v); }

// Binomial(trials, p) by inversion, so the draw is a monotone function of one uniform.
double binomial_inverse(std::size_t trials, double p, Rng& rng) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return static_cast<double>(trials);
  const double u = rng.uniform();
  double pmf = std::pow(1.0 - p, static_cast<double>(trials));
  if (pmf < 1e-280) {
    std::binomial_distribution<long> dist(static_cast<long>(trials), p);
    return static_cast<double>(dist(rng));
  }
  const double odds = p / (1.0 - p);
  double cdf = pmf;
  std::size_t k = 0;
  while (u > cdf && k < trials) {
    pmf *= odds * static_cast<double>(trials - k) / static_cast<double>(k + 1);
    ++k;
    cdf += pmf;
  }
  return static_cast<double>(k);
}

class NormalNormal final : public Model {
 public:
  explicit NormalNormal(const ModelSpec& spec)
      : spec_(with_defaults(spec, {{"mu0", 0.0}, {"tau0", 1.0}, {"sigma", 1.0}, {"n_obs", 10.0}})),
        mu0_(spec_.params.at("mu0")),
        tau0_(require_positive(spec_, "tau0")),
        sigma_(require_positive(spec_, "sigma")),
        n_(as_count(spec_, "n_obs")) {}

  const ModelSpec& spec() const noexcept override { return spec_; }
  std::size_t param_dim() const noexcept override { return 1; }
  DataShape data_shape() const noexcept override { return {n_, 1, 1}; }
  Capabilities capabilities() const noexcept override { return {true, true, true, true, true}; }
  bool in_support(std::span<const double> theta) const override { return std::isfinite(theta[0]); }

  std::vector<double> draw_prior(Rng& rng) const override { return {mu0_ + tau0_ * rng.normal()}; }

  double log_prior(std::span<const double> theta) const override {
    const double z = (theta[0] - mu0_) / tau0_;
    return -0.5 * z * z - std::log(tau0_) - kHalfLog2Pi;
  }

  Dataset simulate(std::span<const double> theta, std::size_t n, Rng& rng) const override {
    std::vector<double> y(n);
    for (auto& v : y) v = theta[0] + sigma_ * rng.normal();
    return Dataset(std::move(y));
  }

  double log_likelihood(std::span<const double> theta, const Dataset& y) const override {
    double total = 0.0;
    for (double v : y.values()) {
      const double z = (v - theta[0]) / sigma_;
      total += -0.5 * z * z;
    }
    return total - static_cast<double>(y.size()) * (std::log(sigma_) + kHalfLog2Pi);
  }

  Distribution analytic_posterior(const Dataset& y) const override {
    double sum = 0.0;
    for (double v : y.values()) sum += v;
    const double precision = 1.0 / (tau0_ * tau0_) + static_cast<double>(y.size()) / (sigma_ * sigma_);
    const double mean = (mu0_ / (tau0_ * tau0_) + sum / (sigma_ * sigma_)) / precision;
    return Distribution::normal(mean, std::sqrt(1.0 / precision));
  }

  // y ~ MVN(mu0 1, sigma^2 I + tau0^2 1 1').
  double log_marginal_likelihood(const Dataset& y) const override {
    const double n = static_cast<double>(y.size());
    const double s2 = sigma_ * sigma_, t2 = tau0_ * tau0_;
    double sum_d = 0.0, sum_d2 = 0.0;
    for (double v : y.values()) {
      sum_d += v - mu0_;
      sum_d2 += (v - mu0_) * (v - mu0_);
    }
    const double quad = (sum_d2 - t2 * sum_d * sum_d / (s2 + n * t2)) / s2;
    const double log_det = n * std::log(s2) + std::log1p(n * t2 / s2);
    return -n * kHalfLog2Pi - 0.5 * log_det - 0.5 * quad;
  }

 private:
  ModelSpec spec_;
  double mu0_, tau0_, sigma_;
  std::size_t n_;
};

class BetaBinomial final : public Model {
 public:
  explicit BetaBinomial(const ModelSpec& spec)
      : spec_(with_defaults(spec, {{"a", 1.0}, {"b", 1.0}, {"trials", 10.0}, {"n_obs", 1.0}})),
        a_(require_positive(spec_, "a")),
        b_(require_positive(spec_, "b")),
        trials_(as_count(spec_, "trials")),
        n_(as_count(spec_, "n_obs")) {}

  const ModelSpec& spec() const noexcept override { return spec_; }
  std::size_t param_dim() const noexcept override { return 1; }
  DataShape data_shape() const noexcept override { return {n_, 1, 1}; }
  Capabilities capabilities() const noexcept override { return {true, true, true, true, true}; }
  bool in_support(std::span<const double> theta) const override { return theta[0] >= 0.0 && theta[0] <= 1.0; }

  // Inversion keeps the draw smooth in (a, b) under a fixed stream.
  std::vector<double> draw_prior(Rng& rng) const override {
    return {boost::math::ibeta_inv(a_, b_, rng.uniform())};
  }

  double log_prior(std::span<const double> theta) const override {
    const double t = theta[0];
    if (t <= 0.0 || t >= 1.0) return kNegInf;
    return (a_ - 1.0) * std::log(t) + (b_ - 1.0) * std::log1p(-t) - log_beta(a_, b_);
  }

  Dataset simulate(std::span<const double> theta, std::size_t n, Rng& rng) const override {
    std::vector<double> y(n);
    for (auto& v : y) v = binomial_inverse(trials_, theta[0], rng);
    return Dataset(std::move(y));
  }

  double log_likelihood(std::span<const double> theta, const Dataset& y) const override {
    const double t = theta[0];
    const double trials = static_cast<double>(trials_);
    double total = 0.0;
    for (double k : y.values()) {
      if (!is_count(k) || k > trials) return kNegInf;
      total += log_choose(trials, k);
      if (k > 0.0) total += k * std::log(t);
      if (trials - k > 0.0) total += (trials - k) * std::log1p(-t);
    }
    return total;
  }

  Distribution analytic_posterior(const Dataset& y) const override {
    const auto [successes, failures] = counts(y);
    return Distribution::beta(a_ + successes, b_ + failures);
  }

  double log_marginal_likelihood(const Dataset& y) const override {
    const auto [successes, failures] = counts(y);
    double total = log_beta(a_ + successes, b_ + failures) - log_beta(a_, b_);
    for (double k : y.values()) total += log_choose(static_cast<double>(trials_), k);
    return total;
  }

  std::vector<double> to_unconstrained(std::span<const double> theta) const override {
    return {std::log(theta[0] / (1.0 - theta[0]))};
  }
  std::vector<double> from_unconstrained(std::span<const double> u) const override {
    return {1.0 / (1.0 + std::exp(-u[0]))};
  }
  double log_abs_jacobian(std::span<const double> u) const override {
    // d/du logistic(u) = logistic(u) (1 - logistic(u))
    return -std::log1p(std::exp(-u[0])) - std::log1p(std::exp(u[0]));
  }

 private:
  static double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }
  static double log_choose(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  }
  std::pair<double, double> counts(const Dataset& y) const {
    double successes = 0.0;
    for (double k : y.values()) {
      if (!is_count(k) || k > static_cast<double>(trials_)) throw DomainError("beta-binomial: observation is not a valid count");
      successes += k;
    }
    return {successes, static_cast<double>(trials_) * static_cast<double>(y.size()) - successes};
  }

  ModelSpec spec_;
  double a_, b_;
  std::size_t trials_, n_;
};

class PoissonGamma final : public Model {
 public:
  explicit PoissonGamma(const ModelSpec& spec)
      : spec_(with_defaults(spec, {{"a", 2.0}, {"b", 1.0}, {"n_obs", 10.0}})),
        a_(require_positive(spec_, "a")),
        b_(require_positive(spec_, "b")),
        n_(as_count(spec_, "n_obs")) {}

  const ModelSpec& spec() const noexcept override { return spec_; }
  std::size_t param_dim() const noexcept override { return 1; }
  DataShape data_shape() const noexcept override { return {n_, 1, 1}; }
  Capabilities capabilities() const noexcept override { return {true, true, true, true, true}; }
  bool in_support(std::span<const double> theta) const override {
    return theta[0] > 0.0 && std::isfinite(theta[0]);
  }

  std::vector<double> draw_prior(Rng& rng) const override {
    return {boost::math::gamma_p_inv(a_, rng.uniform()) / b_};
  }

  double log_prior(std::span<const double> theta) const override {
    const double t = theta[0];
    if (t <= 0.0) return kNegInf;
    return a_ * std::log(b_) - std::lgamma(a_) + (a_ - 1.0) * std::log(t) - b_ * t;
  }

  Dataset simulate(std::span<const double> theta, std::size_t n, Rng& rng) const override {
    std::vector<double> y(n);
    std::poisson_distribution<long> dist(theta[0]);
    for (auto& v : y) v = static_cast<double>(dist(rng));
    return Dataset(std::move(y));
  }

  double log_likelihood(std::span<const double> theta, const Dataset& y) const override {
    const double t = theta[0];
    double total = 0.0;
    for (double k : y.values()) {
      if (!is_count(k)) return kNegInf;
      total += (k > 0.0 ? k * std::log(t) : 0.0) - t - std::lgamma(k + 1.0);
    }
    return total;
  }

  Distribution analytic_posterior(const Dataset& y) const override {
    double sum = 0.0;
    for (double k : y.values()) {
      if (!is_count(k)) throw DomainError("poisson-gamma: observation is not a valid count");
      sum += k;
    }
    return Distribution::gamma(a_ + sum, b_ + static_cast<double>(y.size()));
  }

  double log_marginal_likelihood(const Dataset& y) const override {
    double sum = 0.0, log_fact = 0.0;
    for (double k : y.values()) {
      sum += k;
      log_fact += std::lgamma(k + 1.0);
    }
    const double n = static_cast<double>(y.size());
    return a_ * std::log(b_) - std::lgamma(a_) + std::lgamma(a_ + sum) - (a_ + sum) * std::log(b_ + n) - log_fact;
  }

  std::vector<double> to_unconstrained(std::span<const double> theta) const override { return {std::log(theta[0])}; }
  std::vector<double> from_unconstrained(std::span<const double> u) const override { return {std::exp(u[0])}; }
  double log_abs_jacobian(std::span<const double> u) const override { return u[0]; }

 private:
  ModelSpec spec_;
  double a_, b_;
  std::size_t n_;
};

// Two independent log-normal groups; theta = (mu_a, mu_b, sigma). Fixed-parameter model: the
// configured (mu, mu, sigma) is exposed through fixed_theta() and there is no prior.
class LogNormalTwoGroup final : public Model {
 public:
  explicit LogNormalTwoGroup(const ModelSpec& spec)
      : spec_(with_defaults(spec, {{"mu", 2.0}, {"sigma", 2.0}, {"n_per_group", 40.0}})),
        mu_(spec_.params.at("mu")),
        sigma_(require_positive(spec_, "sigma")),
        n_(as_count(spec_, "n_per_group")) {}

  const ModelSpec& spec() const noexcept override { return spec_; }
  std::size_t param_dim() const noexcept override { return 3; }
  DataShape data_shape() const noexcept override { return {n_, 2, 1}; }
  Capabilities capabilities() const noexcept override { return {false, false, true, false, false}; }
  bool in_support(std::span<const double> theta) const override {
    return std::isfinite(theta[0]) && std::isfinite(theta[1]) && theta[2] > 0.0 && std::isfinite(theta[2]);
  }

  Dataset simulate(std::span<const double> theta, std::size_t n, Rng& rng) const override {
    std::vector<double> y(2 * n);
    std::vector<int> groups(2 * n);
    for (std::size_t i = 0; i < 2 * n; ++i) {
      const int g = i < n ? 0 : 1;
      groups[i] = g;
      y[i] = std::exp(theta[g] + theta[2] * rng.normal());
    }
    return Dataset(std::move(y), 1, std::move(groups));
  }

  double log_likelihood(std::span<const double> theta, const Dataset& y) const override {
    const auto& groups = y.groups();
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double v = y(i);
      if (v <= 0.0) return kNegInf;
      const double z = (std::log(v) - theta[groups[i] == 0 ? 0 : 1]) / theta[2];
      total += -std::log(v) - std::log(theta[2]) - kHalfLog2Pi - 0.5 * z * z;
    }
    return total;
  }

  std::vector<double> to_unconstrained(std::span<const double> theta) const override {
    return {theta[0], theta[1], std::log(theta[2])};
  }
  std::vector<double> from_unconstrained(std::span<const double> u) const override {
    return {u[0], u[1], std::exp(u[2])};
  }
  double log_abs_jacobian(std::span<const double> u) const override { return u[2]; }

  std::vector<double> fixed_theta() const override { return {mu_, mu_, sigma_}; }

 private:
  ModelSpec spec_;
  double mu_, sigma_;
  std::size_t n_;
};

}  // namespace

ModelPtr make_model(const ModelSpec& spec) {
  if (spec.name == "normal-normal") return std::make_shared<NormalNormal>(spec);
  if (spec.name == "beta-binomial") return std::make_shared<BetaBinomial>(spec);
  if (spec.name == "poisson-gamma") return std::make_shared<PoissonGamma>(spec);
  if (spec.name == "lognormal-two-group") return std::make_shared<LogNormalTwoGroup>(spec);
  throw ValidationError("unknown model: " + spec.name);
}

ModelPtr make_model(const std::string& name, const std::map<std::string, double>& params) {
  return make_model(ModelSpec{name, params});
}

std::vector<std::string> model_names() {
  return {"normal-normal", "beta-binomial", "poisson-gamma", "lognormal-two-group"};
}

}  // namespace simflow
