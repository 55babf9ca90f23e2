#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "simflow/errors.hpp"
#include "simflow/model.hpp"
#include "simflow/summary.hpp"

using namespace simflow;
using Catch::Approx;

TEST_CASE("prior draws match prior moments") {
  const auto bb = make_model("beta-binomial", {{"a", 1}, {"b", 1}});
  const auto d = sample_prior(*bb, 1, 100000);
  const auto col = d.column(0);
  CHECK(std::abs(mean(col) - 0.5) < 3 * std::sqrt(1.0 / 12 / col.size()));

  const auto nn = make_model("normal-normal", {{"mu0", 0}, {"tau0", 1}});
  const auto z = sample_prior(*nn, 2, 100000).column(0);
  // sd of the sample variance for normal data is sqrt(2 / (n - 1)).
  CHECK(std::abs(variance(z) - 1.0) < 3 * std::sqrt(2.0 / (z.size() - 1)));
}

TEST_CASE("prior draws are reproducible") {
  for (const auto& name : {"normal-normal", "beta-binomial", "poisson-gamma"}) {
    const auto m = make_model(name);
    CHECK(sample_prior(*m, 5, 1).values()[0] == sample_prior(*m, 5, 1).values()[0]);
  }
}

TEST_CASE("fixed-parameter model has no prior") {
  const auto ln = make_model("lognormal-two-group");
  CHECK_FALSE(ln->capabilities().prior);
  CHECK_THROWS_AS(sample_prior(*ln, 1, 1), CapabilityError);
}

TEST_CASE("simulation") {
  const auto bb = make_model("beta-binomial", {{"trials", 20}});
  const std::vector<double> one{1.0};
  CHECK(simulate_data(*bb, one, 3)(0) == 20.0);

  const auto nn = make_model("normal-normal", {{"sigma", 1}});
  const std::vector<double> zero{0.0};
  const auto y = simulate_data(*nn, zero, 4, 100000);
  CHECK(std::abs(mean(y.values())) < 3 * std::pow(10.0, -2.5));

  const auto ln = make_model("lognormal-two-group", {{"mu", 2}, {"sigma", 2}, {"n_per_group", 40}});
  const auto g = simulate_data(*ln, ln->fixed_theta(), 5);
  REQUIRE(g.size() == 80);
  for (int label : {0, 1}) {
    const auto v = g.group_values(label);
    CHECK(v.size() == 40);
    for (double x : v) CHECK(x > 0.0);
  }

  const std::vector<double> bad{1.5};
  CHECK_THROWS_AS(simulate_data(*bb, bad, 1), DomainError);
}

TEST_CASE("log-likelihood values") {
  const auto bb = make_model("beta-binomial", {{"trials", 2}});
  const std::vector<double> half{0.5};
  CHECK(log_likelihood(*bb, half, Dataset({1})) == Approx(std::log(0.5)));

  const auto nn = make_model("normal-normal", {{"sigma", 1}});
  const std::vector<double> zero{0.0};
  CHECK(log_likelihood(*nn, zero, Dataset({0})) == Approx(-0.5 * std::log(2 * std::numbers::pi)));

  const auto pg = make_model("poisson-gamma");
  const std::vector<double> one{1.0};
  CHECK(log_likelihood(*pg, one, Dataset({0, 0})) == Approx(-2.0));
}

TEST_CASE("conjugate posteriors") {
  const auto bb = make_model("beta-binomial", {{"a", 1}, {"b", 1}, {"trials", 10}});
  const auto p1 = analytic_posterior(*bb, Dataset({3}));
  CHECK(p1.family() == Distribution::Family::beta);
  CHECK(p1.parameters() == std::vector<double>{4, 8});

  const auto nn = make_model("normal-normal", {{"mu0", 0}, {"tau0", 1}, {"sigma", 1}, {"n_obs", 1}});
  const auto p2 = analytic_posterior(*nn, Dataset({1}));
  CHECK(p2.mean() == Approx(0.5));
  CHECK(p2.sd() * p2.sd() == Approx(0.5));

  const auto pg = make_model("poisson-gamma", {{"a", 2}, {"b", 1}});
  const auto p3 = analytic_posterior(*pg, Dataset({3, 1}));
  CHECK(p3.parameters()[0] == Approx(6));
  CHECK(p3.parameters()[1] == Approx(3));

  // An empty dataset leaves the prior unchanged.
  CHECK(analytic_posterior(*bb, Dataset{}).parameters() == std::vector<double>{1, 1});
}

TEST_CASE("unconstrained maps invert each other") {
  for (const auto& name : {"normal-normal", "beta-binomial", "poisson-gamma"}) {
    const auto m = make_model(name);
    const auto draws = sample_prior(*m, 8, 20);
    for (std::size_t s = 0; s < draws.size(); ++s) {
      const auto u = m->to_unconstrained(draws.row(s));
      CHECK(m->from_unconstrained(u)[0] == Approx(draws(s)).epsilon(1e-10));
    }
  }
}

TEST_CASE("bad specs are rejected") {
  CHECK_THROWS_AS(make_model("no-such-model"), ValidationError);
  CHECK_THROWS_AS(make_model("normal-normal", {{"bogus", 1}}), ValidationError);
  CHECK_THROWS_AS(make_model("normal-normal", {{"tau0", -1}}), ValidationError);
}
