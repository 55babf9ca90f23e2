#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "simflow/data.hpp"
#include "simflow/errors.hpp"
#include "simflow/summary.hpp"

using namespace simflow;

TEST_CASE("type-7 quantiles match R's default") {
  std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(quantile_type7(x, 0.1) == Catch::Approx(1.9));
  CHECK(quantile_type7(x, 0.5) == Catch::Approx(5.5));
  CHECK(quantile_type7(x, 0.0) == 1.0);
  CHECK(quantile_type7(x, 1.0) == 10.0);
  std::vector<double> y;
  for (int i = 100; i >= 1; --i) y.push_back(i);
  CHECK(quantile_type7(y, 0.05) == Catch::Approx(5.95));
  const std::vector<double> probs{0.25, 0.75};
  const auto q = quantiles_type7(x, probs);
  CHECK(q[0] == Catch::Approx(3.25));
  CHECK(q[1] == Catch::Approx(7.75));
}

TEST_CASE("moments and helpers") {
  std::vector<double> x{2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(mean(x) == Catch::Approx(5.0));
  CHECK(variance(x) == Catch::Approx(32.0 / 7));
  CHECK(variance(std::vector<double>{3.0}) == 0.0);
  std::vector<double> lx{std::log(1.0), std::log(2.0), std::log(3.0)};
  CHECK(log_sum_exp(lx) == Catch::Approx(std::log(6.0)));
  std::vector<double> huge{1000.0, 1000.0};
  CHECK(log_sum_exp(huge) == Catch::Approx(1000.0 + std::log(2.0)));
  CHECK(log_sum_exp(std::vector<double>{}) == -std::numeric_limits<double>::infinity());
  std::vector<double> xs{1, 2, 3, 4}, ys{3, 5, 7, 9};
  CHECK(ols_slope(xs, ys) == Catch::Approx(2.0));
  std::vector<double> alt{1, -1, 1, -1, 1, -1};
  CHECK(lag1_autocorrelation(alt) < -0.8);
}

TEST_CASE("dataset CSV round trip") {
  Dataset d({1.5, -2.0, 3.25, 0.0}, 1, std::vector<int>{0, 0, 1, 1});
  const auto text = format_dataset_csv(d);
  CHECK(parse_dataset_csv(text) == d);
  CHECK(d.group_values(1) == std::vector<double>{3.25, 0.0});

  Dataset two({1, 2, 3, 4, 5, 6}, 2);
  CHECK(two.size() == 3);
  CHECK(parse_dataset_csv(format_dataset_csv(two)) == two);
  CHECK(parse_dataset_csv("y\n1\n2\n").size() == 2);
  CHECK_THROWS_AS(parse_dataset_csv("y\n1\nabc\n"), ValidationError);
}

TEST_CASE("concat keeps order and labels") {
  Dataset a({1, 2}, 1, std::vector<int>{0, 1});
  Dataset b({3}, 1, std::vector<int>{1});
  const auto c = Dataset::concat(a, b);
  CHECK(c.size() == 3);
  CHECK(c(2) == 3.0);
  CHECK(c.groups() == std::vector<int>{0, 1, 1});
  CHECK(Dataset::concat(Dataset{}, b) == b);
}

TEST_CASE("param draws columns") {
  ParamDraws d({1, 10, 2, 20, 3, 30}, 2, DrawSource::posterior);
  CHECK(d.size() == 3);
  CHECK(d.column(1) == std::vector<double>{10, 20, 30});
  CHECK(d.mean(0) == Catch::Approx(2.0));
  d.truncate(2);
  CHECK(d.size() == 2);
}
