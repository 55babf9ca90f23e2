#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "simflow/approximators.hpp"
#include "simflow/compare.hpp"
#include "simflow/errors.hpp"

using namespace simflow;
using Catch::Approx;

namespace {

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }
double log_choose(double n, double k) { return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1); }

// Normal-normal whose likelihood is identically zero.
class ImpossibleData : public Model {
 public:
  const ModelSpec& spec() const noexcept override { return inner_->spec(); }
  std::size_t param_dim() const noexcept override { return 1; }
  DataShape data_shape() const noexcept override { return inner_->data_shape(); }
  Capabilities capabilities() const noexcept override { return inner_->capabilities(); }
  bool in_support(std::span<const double> t) const override { return inner_->in_support(t); }
  std::vector<double> draw_prior(Rng& rng) const override { return inner_->draw_prior(rng); }
  Dataset simulate(std::span<const double> t, std::size_t n, Rng& rng) const override {
    return inner_->simulate(t, n, rng);
  }
  double log_likelihood(std::span<const double>, const Dataset&) const override {
    return -std::numeric_limits<double>::infinity();
  }

 private:
  ModelPtr inner_ = make_model("normal-normal");
};

}  // namespace

TEST_CASE("evidence under a uniform prior is uniform over counts") {
  const auto bb = make_model("beta-binomial", {{"a", 1}, {"b", 1}, {"trials", 10}});
  for (double k : {0.0, 3.0, 10.0}) {
    const auto e = marginal_likelihood_mc(*bb, Dataset({k}), 100000, 1);
    INFO("k = " << k);
    CHECK(std::abs(e.log_evidence - std::log(1.0 / 11)) < 3 * e.mc_se);
  }
}

TEST_CASE("evidence against the beta-function closed form") {
  const auto bb = make_model("beta-binomial", {{"a", 2}, {"b", 2}, {"trials", 10}});
  const double oracle = log_choose(10, 3) + log_beta(5, 9) - log_beta(2, 2);
  CHECK(oracle == Approx(-2.190255908020126));
  const auto e = marginal_likelihood_mc(*bb, Dataset({3}), 100000, 2);
  CHECK(std::abs(e.log_evidence - oracle) < 3 * e.mc_se);
}

TEST_CASE("evidence against the normal marginal") {
  const double mu0 = 0.5, tau0 = 1.5, sigma = 0.8, y = 1.3;
  const auto nn = make_model("normal-normal", {{"mu0", mu0}, {"tau0", tau0}, {"sigma", sigma}, {"n_obs", 1}});
  const double v = tau0 * tau0 + sigma * sigma;
  const double oracle = -0.5 * std::log(2 * std::numbers::pi * v) - 0.5 * (y - mu0) * (y - mu0) / v;
  const auto e = marginal_likelihood_mc(*nn, Dataset({y}), 100000, 3);
  CHECK(std::abs(e.log_evidence - oracle) < 3 * e.mc_se);
  CHECK(nn->log_marginal_likelihood(Dataset({y})) == Approx(oracle));
}

TEST_CASE("underflowing likelihoods give minus infinity with a diagnostic") {
  const ImpossibleData model;
  const auto e = marginal_likelihood_mc(model, Dataset({10}), 100, 4);
  CHECK(std::isinf(e.log_evidence));
  CHECK_FALSE(e.diagnostic.empty());
}

TEST_CASE("model probabilities") {
  const auto a = make_model("beta-binomial", {{"a", 2}, {"b", 2}, {"trials", 10}});
  const Dataset y({4});

  ModelSet same{{a, a, a, a}, {0.25, 0.25, 0.25, 0.25}};
  const auto r = posterior_model_probs(same, y, 20000, 5);
  for (double p : r.probabilities) CHECK(p == Approx(0.25).margin(0.01));

  const auto b = make_model("beta-binomial", {{"a", 5}, {"b", 1}, {"trials", 10}});
  ModelSet pinned{{a, b}, {1, 0}};
  const auto q = posterior_model_probs(pinned, y, 1000, 6);
  CHECK(q.probabilities[0] == 1.0);
  CHECK(q.probabilities[1] == 0.0);
  CHECK(q.log_bayes_factors[0][1] == Approx(q.evidence[0].log_evidence - q.evidence[1].log_evidence));
}

TEST_CASE("separated priors are told apart") {
  const auto a = make_model("beta-binomial", {{"a", 20}, {"b", 2}, {"trials", 50}});
  const auto b = make_model("beta-binomial", {{"a", 2}, {"b", 20}, {"trials", 50}});
  const auto theta = sample_prior(*a, 7, 1);
  const auto y = simulate_data(*a, theta.row(0), 8);
  const auto r = posterior_model_probs({{a, b}, {0.5, 0.5}}, y, 20000, 9);
  CHECK(r.probabilities[0] > 0.99);
}

TEST_CASE("model set validation") {
  const auto a = make_model("normal-normal");
  CHECK_THROWS_AS((ModelSet{{a}, {1, 1}}.validate()), ValidationError);
  CHECK_THROWS_AS((ModelSet{{a, a}, {0, 0}}.validate()), ValidationError);
  CHECK_THROWS_AS((ModelSet{{a, a}, {-1, 2}}.validate()), ValidationError);
}

TEST_CASE("power scaling with unit exponents is the identity") {
  const auto nn = make_model("normal-normal");
  const auto draws = approximate(Approximator::exact_conjugate(1000), *nn, Dataset({0.4, 0.9}), 10);
  const auto w = power_scale_weights(draws, 1.0, 1.0);
  CHECK(w.ess == 1000.0);
  for (double x : w.weights) CHECK(x == 1.0 / 1000);
  CHECK(w.mean() == Approx(draws.mean()));
}

TEST_CASE("doubling the prior power matches the doubled-precision posterior") {
  const double mu0 = 1.0, tau0 = 1.0, sigma = 1.0;
  const auto nn = make_model("normal-normal", {{"mu0", mu0}, {"tau0", tau0}, {"sigma", sigma}, {"n_obs", 4}});
  const Dataset y({-0.5, 0.2, 0.1, -0.3});
  const auto draws = approximate(Approximator::exact_conjugate(10000), *nn, y, 11);
  const auto w = power_scale_weights(draws, 2.0, 1.0);
  // pi(theta)^2 is Normal(mu0, tau0^2 / 2).
  const double prec = 2.0 / (tau0 * tau0) + 4.0 / (sigma * sigma);
  const double oracle = (2.0 * mu0 / (tau0 * tau0) + (-0.5) / (sigma * sigma)) / prec;
  CHECK(w.mean() == Approx(oracle).margin(0.02));
  CHECK(w.ess < 10000);
  CHECK(w.ess > 1000);
  CHECK(w.quantile(0.5) == Approx(oracle).margin(0.03));
}

TEST_CASE("power scaling needs stored densities") {
  ParamDraws bare({0.1, 0.2}, 1, DrawSource::posterior);
  CHECK_THROWS_AS(power_scale_weights(bare, 2.0, 1.0), CapabilityError);
}

TEST_CASE("sensitivity sweep") {
  const auto grid = grid_product({{"tau0", {0.5, 1.0, 2.0}}});
  REQUIRE(grid.size() == 3);
  const Dataset y({1.2, 0.8, 1.5, 0.9});
  SweepPipeline posterior_mean = [&](const SweepPoint& p, Seed) -> SweepOutputs {
    const auto m = make_model("normal-normal", {{"tau0", p.at("tau0")}, {"n_obs", 4}});
    return {{"mean", analytic_posterior(*m, y).mean()}};
  };
  const auto rows = sensitivity_sweep(posterior_mean, grid, 12);
  const double mle = 1.1;
  double previous_gap = 1e9;
  for (const auto& row : rows) {
    const double gap = std::abs(row.outputs.at("mean") - mle);
    CHECK(gap < previous_gap);
    previous_gap = gap;
  }

  SweepPipeline seeded = [](const SweepPoint&, Seed s) -> SweepOutputs { return {{"seed", double(s % 1000)}}; };
  const auto single = sensitivity_sweep(seeded, {SweepPoint{{"x", 1}}}, 13);
  CHECK(single[0].seed == derive_seed(13, 0));
  CHECK(single[0].outputs.at("seed") == double(derive_seed(13, 0) % 1000));

  SweepPipeline flaky = [](const SweepPoint& p, Seed) -> SweepOutputs {
    if (p.at("x") > 1) throw std::runtime_error("boom");
    return {{"y", p.at("x")}};
  };
  const auto mixed = sensitivity_sweep(flaky, grid_product({{"x", {1, 2, 3}}}), 14);
  CHECK(mixed.size() == 3);
  CHECK_FALSE(mixed[0].error.has_value());
  CHECK(mixed[2].error.has_value());
  const auto csv = format_sweep_csv(mixed);
  CHECK(csv.rfind("x,y,error\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("grid product order") {
  const auto g = grid_product({{"b", {1, 2}}, {"a", {10, 20}}});
  REQUIRE(g.size() == 4);
  CHECK(g[0].at("a") == 10);
  CHECK(g[0].at("b") == 1);
  CHECK(g[3].at("a") == 20);
  CHECK(g[3].at("b") == 2);
}
