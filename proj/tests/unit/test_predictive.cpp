#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "simflow/errors.hpp"
#include "simflow/predictive.hpp"
#include "simflow/summary.hpp"

using namespace simflow;
using Catch::Approx;

TEST_CASE("prior pushforward fractions") {
  const auto bb = make_model("beta-binomial", {{"a", 1}, {"b", 1}, {"trials", 20}});
  const auto k = make_data_statistic("sum");
  CHECK(*prior_pushforward_check(*bb, k, {0, 20}, 2000, 1).fraction_in_region == 1.0);
  CHECK(*prior_pushforward_check(*bb, k, {21, 22}, 2000, 1).fraction_in_region == 0.0);

  const auto nn = make_model("normal-normal", {{"mu0", 0}, {"tau0", 1}, {"sigma", 1}, {"n_obs", 10}});
  const auto ybar = make_data_statistic("mean");
  CHECK(*prior_pushforward_check(*nn, ybar, {-1e300, 1e300}, 1000, 2).fraction_in_region == 1.0);
  // Prior predictive mean is Normal(0, 1 + 1/10).
  const double sd = std::sqrt(1.1);
  const double expected = std::erf(3.3 / sd / std::sqrt(2.0));
  CHECK(*prior_pushforward_check(*nn, ybar, {-3.3, 3.3}, 20000, 3).fraction_in_region ==
        Approx(expected).margin(0.01));

  CHECK_THROWS_AS((PlausibleRegion{2, 1}.validate()), ValidationError);
}

TEST_CASE("plug-in check on well-specified data") {
  const auto nn = make_model("normal-normal", {{"sigma", 1}, {"n_obs", 30}});
  const auto stat = DiscrepancyStatistic::difference(make_data_statistic("mean"));
  int inside = 0;
  for (Seed t = 0; t < 200; ++t) {
    const auto y = simulate_data(*nn, std::vector<double>{0.4}, derive_seed(100, t));
    const std::vector<double> theta_hat{mean(y.values())};
    const auto r = frequentist_predictive_check(*nn, theta_hat, stat, y, 200, derive_seed(200, t));
    const double lo = quantile_type7(r.replication_stats, 0.025);
    const double hi = quantile_type7(r.replication_stats, 0.975);
    inside += lo <= *r.observed_stat && *r.observed_stat <= hi;
  }
  CHECK(inside >= 180);
}

TEST_CASE("plug-in normal fit misses log-normal maxima") {
  const auto ln = make_model("lognormal-two-group", {{"mu", 0}, {"sigma", 1}, {"n_per_group", 50}});
  int beyond = 0;
  for (Seed t = 0; t < 50; ++t) {
    const auto raw = simulate_data(*ln, ln->fixed_theta(), derive_seed(300, t));
    const Dataset y(std::vector<double>(raw.values().begin(), raw.values().end()));
    const double m = mean(y.values());
    const double s = sd(y.values());
    // Refit sigma by moments through the model hyperparameter.
    const auto fitted = make_model("normal-normal", {{"sigma", s}, {"n_obs", 100}});
    const auto r = frequentist_predictive_check(*fitted, std::vector<double>{m}, make_data_statistic("max"), y, 500,
                                                derive_seed(400, t));
    beyond += *r.observed_stat > quantile_type7(r.replication_stats, 0.99);
  }
  CHECK(beyond > 25);
}

TEST_CASE("single replication has no ppp") {
  const auto nn = make_model("normal-normal");
  const Dataset y({0.1, 0.2});
  const auto r = frequentist_predictive_check(*nn, std::vector<double>{0.0}, make_data_statistic("mean"), y, 1, 5);
  CHECK(r.replication_stats.size() == 1);
  CHECK_FALSE(r.ppp.has_value());
}

TEST_CASE("predictive sample shapes") {
  const auto nn = make_model("normal-normal");
  const auto post = approximate(Approximator::exact_conjugate(100), *nn, Dataset({0.5}), 6);
  const auto reps = posterior_predictive_sample(*nn, post, 3, 5, 7);
  REQUIRE(reps.size() == 3);
  for (const auto& r : reps) CHECK(r.size() == 5);
}

TEST_CASE("point-mass posterior reduces to plug-in replications") {
  const auto nn = make_model("normal-normal", {{"sigma", 1}, {"n_obs", 4}});
  ParamDraws point(std::vector<double>(4000, 0.25), 1, DrawSource::posterior);
  const auto reps = posterior_predictive_sample(*nn, point, 4000, 4, 8);
  std::vector<double> means;
  for (const auto& r : reps) means.push_back(mean(r.values()));
  CHECK(mean(means) == Approx(0.25).margin(0.03));
  CHECK(variance(means) == Approx(0.25).epsilon(0.06));
}

TEST_CASE("posterior uncertainty widens replication means") {
  const auto nn = make_model("normal-normal", {{"mu0", 0}, {"tau0", 1}, {"sigma", 1}, {"n_obs", 5}});
  const Dataset y({0.3, -0.2, 0.8, 0.1, 0.5});
  const auto post = approximate(Approximator::exact_conjugate(20000), *nn, y, 9);
  const auto reps = posterior_predictive_sample(*nn, post, 2000, 5, 10);
  std::vector<double> means;
  for (const auto& r : reps) means.push_back(mean(r.values()));
  const double tau_n2 = 1.0 / (1.0 + 5.0);
  CHECK(variance(means) > 1.0 / 5 + 0.5 * tau_n2);
}

TEST_CASE("ppp ranks") {
  const std::vector<double> reps{1, 2, 3, 4, 5};
  CHECK(posterior_predictive_pvalue(0.0, reps, Side::lower) == 0.0);
  CHECK(posterior_predictive_pvalue(2.5, std::vector<double>{1, 2, 3, 4}, Side::lower) == 0.5);
}

TEST_CASE("well-specified ppp on the variance stays central") {
  const auto nn = make_model("normal-normal", {{"sigma", 1}, {"n_obs", 20}});
  const auto var = make_data_statistic("variance");
  int central = 0;
  for (Seed t = 0; t < 200; ++t) {
    const auto theta = sample_prior(*nn, derive_seed(500, t), 1);
    const auto y = simulate_data(*nn, theta.row(0), derive_seed(600, t));
    const auto post = approximate(Approximator::exact_conjugate(500), *nn, y, derive_seed(700, t));
    const auto r = posterior_predictive_check(*nn, post, var, y, 500, derive_seed(800, t));
    central += *r.ppp >= 0.05 && *r.ppp <= 0.95;
  }
  // With sigma known the replicated variance does not depend on theta, so the ppp is exactly
  // uniform and the central fraction is 0.9 in expectation; allow three binomial SEs.
  CHECK(central >= 180 - 3 * std::sqrt(200 * 0.9 * 0.1));
}

TEST_CASE("posterior sbc") {
  const auto nn = make_model("normal-normal", {{"n_obs", 10}});
  const Dataset y({0.2, 1.1, -0.4, 0.9, 0.5, 1.3, 0.0, 0.7, 0.4, 0.8});
  PosteriorSbcConfig cfg;
  cfg.s = 500;
  cfg.d = 99;
  cfg.seed = 11;
  const auto exact = run_posterior_sbc(*nn, Approximator::exact_conjugate(99), y, cfg);
  CHECK(exact.targets[0].verdict.chi2_pvalue > 0.001);
  CHECK(exact.targets[0].verdict.ecdf_inside);

  const auto narrow = run_posterior_sbc(*nn, Approximator::perturbed_conjugate({0.0, 0.5}, 99), y, cfg);
  const auto& h = narrow.targets[0].histogram;
  CHECK(narrow.targets[0].verdict.chi2_pvalue < 0.01);
  CHECK(h.front() + h.back() > h[4] + h[5]);

  cfg.d = 1;
  cfg.s = 50;
  const auto coarse = run_posterior_sbc(*nn, Approximator::exact_conjugate(1), y, cfg);
  for (double p : coarse.targets[0].pvalues.values) CHECK((p == 0.0 || p == 1.0));
  CHECK(coarse.targets[0].pvalues.granularity == 1u);
}
