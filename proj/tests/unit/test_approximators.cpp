#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "simflow/approximators.hpp"
#include "simflow/errors.hpp"
#include "simflow/summary.hpp"

using namespace simflow;
using Catch::Approx;

namespace {

// Delegates to beta-binomial but refuses every density evaluation.
class LikelihoodFreeBinomial : public Model {
 public:
  LikelihoodFreeBinomial() : inner_(make_model("beta-binomial", {{"a", 1}, {"b", 1}, {"trials", 10}})) {}
  const ModelSpec& spec() const noexcept override { return spec_; }
  std::size_t param_dim() const noexcept override { return 1; }
  DataShape data_shape() const noexcept override { return inner_->data_shape(); }
  Capabilities capabilities() const noexcept override { return {true, false, false, false, false}; }
  bool in_support(std::span<const double> t) const override { return inner_->in_support(t); }
  std::vector<double> draw_prior(Rng& rng) const override { return inner_->draw_prior(rng); }
  Dataset simulate(std::span<const double> t, std::size_t n, Rng& rng) const override {
    return inner_->simulate(t, n, rng);
  }
  double log_likelihood(std::span<const double>, const Dataset&) const override {
    FAIL("likelihood evaluated");
    return 0.0;
  }

 private:
  ModelPtr inner_;
  ModelSpec spec_{"likelihood-free", {}};
};

double draw_mean(const ParamDraws& d) { return d.mean(0); }
double draw_se(const ParamDraws& d) { return sd(d.column(0)) / std::sqrt(double(d.size())); }

}  // namespace

TEST_CASE("exact conjugate draws") {
  const auto bb = make_model("beta-binomial", {{"a", 1}, {"b", 1}, {"trials", 10}});
  const auto d = approximate(Approximator::exact_conjugate(100000), *bb, Dataset({3}), 1);
  CHECK(d.size() == 100000);
  CHECK(std::abs(draw_mean(d) - 4.0 / 12) < 3 * draw_se(d));
}

TEST_CASE("perturbed conjugate shifts and scales") {
  const auto nn = make_model("normal-normal", {{"n_obs", 1}});
  const Dataset y({1});
  const auto post = analytic_posterior(*nn, y);
  const auto d = approximate(Approximator::perturbed_conjugate({0.5, 1.0}, 100000), *nn, y, 2);
  CHECK(draw_mean(d) == Approx(post.mean() + 0.5 * post.sd()).margin(4 * draw_se(d)));
  const auto narrow = approximate(Approximator::perturbed_conjugate({0.0, 0.5}, 100000), *nn, y, 2);
  CHECK(sd(narrow.column(0)) == Approx(0.5 * post.sd()).epsilon(0.01));
}

TEST_CASE("ABC with infinite tolerance recovers the prior") {
  const auto nn = make_model("normal-normal", {{"mu0", 1}, {"tau0", 2}});
  AbcConfig cfg{make_discrepancy("abs:mean"), std::numeric_limits<double>::infinity(), std::nullopt, 100000};
  const auto r = abc_rejection(*nn, Dataset({0.3, 0.1}), cfg, 20000, 3);
  CHECK(r.acceptance_rate == 1.0);
  CHECK(std::abs(draw_mean(r.draws) - 1.0) < 3 * 2.0 / std::sqrt(20000.0));
}

TEST_CASE("ABC at zero tolerance on counts is exact and likelihood-free") {
  LikelihoodFreeBinomial model;
  AbcConfig cfg{make_discrepancy("abs:sum"), 0.0, std::nullopt, 1'000'000};
  const auto r = abc_rejection(model, Dataset({3}), cfg, 5000, 4);
  REQUIRE(r.draws.size() == 5000);
  CHECK(std::abs(draw_mean(r.draws) - 1.0 / 3) < 3 * draw_se(r.draws));
  // Under a uniform prior every count is equally likely a priori.
  CHECK(r.acceptance_rate == Approx(1.0 / 11).margin(0.01));
}

TEST_CASE("ABC on normal data with a tight tolerance") {
  const auto nn = make_model("normal-normal", {{"n_obs", 10}});
  const Dataset y({0.2, 1.1, -0.4, 0.9, 0.5, 1.3, 0.0, 0.7, 0.4, 0.8});
  AbcConfig cfg{make_discrepancy("abs:mean"), 0.01 / std::sqrt(10.0), std::nullopt, 5'000'000};
  const auto r = abc_rejection(*nn, y, cfg, 2000, 5);
  CHECK(draw_mean(r.draws) == Approx(analytic_posterior(*nn, y).mean()).margin(0.05));
}

TEST_CASE("ABC acceptance is monotone in tolerance on a fixed pool") {
  const auto nn = make_model("normal-normal");
  const Dataset y({0.5, 0.5, 0.5});
  const auto dist = abc_proposal_distances(*nn, y, make_discrepancy("abs:mean"), 5000, 6);
  double previous = 1.0;
  for (double eps : {10.0, 1.0, 0.5, 0.1, 0.01}) {
    std::size_t accepted = 0;
    for (double v : dist) accepted += v <= eps;
    const double rate = double(accepted) / dist.size();
    CHECK(rate <= previous);
    previous = rate;
  }
}

TEST_CASE("ABC quantile mode keeps the best fraction") {
  const auto nn = make_model("normal-normal");
  AbcConfig cfg{make_discrepancy("abs:mean"), std::nullopt, 0.1, 10000};
  const auto r = abc_rejection(*nn, Dataset({0.0}), cfg, 1000, 7);
  CHECK(r.draws.size() == 1000);
  CHECK(r.proposals == 10000);
}

TEST_CASE("ABC budget exhaustion") {
  const auto nn = make_model("normal-normal");
  AbcConfig cfg{make_discrepancy("abs:mean"), 1e-9, std::nullopt, 500};
  try {
    abc_rejection(*nn, Dataset({0.0}), cfg, 100, 8);
    FAIL("expected a budget error");
  } catch (const BudgetError& e) {
    CHECK(e.proposals() == 500);
    CHECK(e.accepted() < 100);
  }
}

TEST_CASE("ABC config needs exactly one acceptance rule") {
  AbcConfig both{make_discrepancy("abs:mean"), 1.0, 0.5, 10};
  CHECK_THROWS_AS(both.validate(), ValidationError);
  AbcConfig neither{make_discrepancy("abs:mean"), std::nullopt, std::nullopt, 10};
  CHECK_THROWS_AS(neither.validate(), ValidationError);
}

TEST_CASE("random-walk Metropolis on conjugate oracles") {
  const auto nn = make_model("normal-normal", {{"n_obs", 1}});
  const auto r = rwm_sample(*nn, Dataset({1}), 4, 6000, 1000, 1.0, 9);
  CHECK(r.draws.size() == 20000);
  CHECK(r.draws.mean() == Approx(0.5).margin(0.02));
  CHECK(r.draws.has_log_densities());

  const auto bb = make_model("beta-binomial", {{"trials", 10}});
  const auto rb = rwm_sample(*bb, Dataset({3}), 4, 6000, 1000, 1.0, 10);
  CHECK(rb.draws.mean() == Approx(1.0 / 3).margin(0.02));
  for (std::size_t s = 0; s < rb.draws.size(); ++s) REQUIRE((rb.draws(s) > 0 && rb.draws(s) < 1));
}

TEST_CASE("tiny RWM steps accept nearly everything and warn") {
  const auto nn = make_model("normal-normal", {{"n_obs", 1}});
  const auto r = rwm_sample(*nn, Dataset({1}), 2, 500, 100, 1e-8, 11);
  CHECK(r.acceptance_rate > 0.99);
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("approximator compatibility") {
  const auto ln = make_model("lognormal-two-group");
  CHECK_THROWS_AS(Approximator::exact_conjugate(10).check_compatible(*ln), CapabilityError);
  LikelihoodFreeBinomial lf;
  CHECK_THROWS_AS(Approximator::random_walk_metropolis({}, 10).check_compatible(lf), CapabilityError);
}

TEST_CASE("approximate is deterministic in the seed") {
  const auto nn = make_model("normal-normal");
  const Dataset y({0.1, 0.2});
  const auto a = Approximator::random_walk_metropolis({2, 100, 1, 0.5}, 50);
  CHECK(approximate(a, *nn, y, 12).values()[7] == approximate(a, *nn, y, 12).values()[7]);
}
