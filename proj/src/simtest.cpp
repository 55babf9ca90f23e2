#include "simflow/simtest.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "simflow/errors.hpp"
#include "simflow/parallel.hpp"
#include "simflow/summary.hpp"

namespace simflow {

std::string to_string(Side side) {
  switch (side) {
    case Side::lower: return "lower";
    case Side::upper: return "upper";
    case Side::two_sided: return "two_sided";
  }
  return "unknown";
}

Side parse_side(const std::string& text) {
  if (text == "lower") return Side::lower;
  if (text == "upper") return Side::upper;
  if (text == "two_sided" || text == "two-sided") return Side::two_sided;
  throw ValidationError("side must be lower, upper or two_sided, got " + text);
}

NullSample simulate_null(const Model& model, std::span<const double> theta0, const DataStatistic& stat,
                         std::size_t s, Seed seed, std::size_t n) {
  if (s == 0) throw ValidationError("simulate_null: need at least one draw");
  if (theta0.size() != model.param_dim() || !model.in_support(theta0)) {
    throw DomainError(fmt::format("null parameter outside the domain of '{}'", model.name()));
  }
  const std::size_t per_group = n == 0 ? model.data_shape().n_per_group : n;
  NullSample out;
  out.values.resize(s);
  std::vector<std::size_t> retries(s, 0);
  parallel_for(s, [&](std::size_t i) {
    for (std::size_t attempt = 0; attempt <= kNullRetryCap; ++attempt) {
      Rng rng(derive_seed(seed, {i, attempt}));
      const double t = stat(model.simulate(theta0, per_group, rng));
      if (std::isfinite(t)) {
        out.values[i] = t;
        retries[i] = attempt;
        return;
      }
    }
    throw Error(fmt::format("statistic '{}' undefined on null draw {} after {} retries", stat.name, i, kNullRetryCap));
  });
  for (auto r : retries) out.retries += r;
  return out;
}

double simulation_pvalue(double observed, std::span<const double> null_samples, Side side, Seed tie_seed) {
  if (null_samples.empty()) throw ValidationError("simulation p-value: empty null sample");
  std::size_t below = 0, above = 0, ties = 0;
  for (double t : null_samples) {
    if (t < observed) {
      ++below;
    } else if (t > observed) {
      ++above;
    } else {
      ++ties;
    }
  }
  std::size_t ties_low = 0;
  if (ties > 0) {
    Rng rng(tie_seed);
    for (std::size_t i = 0; i < ties; ++i) ties_low += rng() >> 63;
  }
  const double s = static_cast<double>(null_samples.size());
  const double lower = static_cast<double>(below + ties_low) / s;
  const double upper = static_cast<double>(above + (ties - ties_low)) / s;
  switch (side) {
    case Side::lower: return lower;
    case Side::upper: return upper;
    case Side::two_sided: return std::min(1.0, 2.0 * std::min(lower, upper));
  }
  return lower;
}

bool critical_value_is_unstable(std::size_t s, double alpha) {
  return static_cast<double>(s) * std::min(alpha, 1.0 - alpha) < 5.0;
}

Threshold critical_value(std::span<const double> null_samples, double alpha, Side side) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("critical value: alpha must lie in (0, 1)");
  if (null_samples.empty()) throw ValidationError("critical value: empty null sample");
  std::vector<double> sorted(null_samples.begin(), null_samples.end());
  std::sort(sorted.begin(), sorted.end());
  Threshold t;
  switch (side) {
    case Side::lower: t.lower = quantile_type7_sorted(sorted, alpha); break;
    case Side::upper: t.upper = quantile_type7_sorted(sorted, 1.0 - alpha); break;
    case Side::two_sided:
      t.lower = quantile_type7_sorted(sorted, alpha / 2.0);
      t.upper = quantile_type7_sorted(sorted, 1.0 - alpha / 2.0);
      break;
  }
  return t;
}

NullSummary summarize_null(std::span<const double> null_samples) {
  NullSummary summary;
  summary.count = null_samples.size();
  if (null_samples.empty()) return summary;
  summary.mean = mean(null_samples);
  summary.sd = sd(null_samples);
  const std::vector<double> probs{0.001, 0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99, 0.999};
  const auto qs = quantiles_type7(null_samples, probs);
  for (std::size_t i = 0; i < probs.size(); ++i) summary.quantiles[probs[i]] = qs[i];
  return summary;
}

TestReport run_simulation_test(const Model& model, std::span<const double> theta0, const DataStatistic& stat,
                               const Dataset& observed, Side side, std::size_t s, Seed seed,
                               std::vector<double> alphas) {
  TestReport report;
  report.statistic = stat.name;
  report.side = side;
  report.observed_stat = stat(observed);
  if (!std::isfinite(report.observed_stat)) throw ValidationError("statistic is undefined on the observed data");
  if (s < 100) report.notes.push_back(fmt::format("S = {} is below the recommended minimum of 100", s));

  auto null = simulate_null(model, theta0, stat, s, derive_seed(seed, 0), per_group_count(model, observed));
  report.retries = null.retries;
  report.p_value = simulation_pvalue(report.observed_stat, null.values, side, derive_seed(seed, 1));
  for (double alpha : alphas) {
    report.critical_values[alpha] = critical_value(null.values, alpha, side);
    if (critical_value_is_unstable(s, alpha)) {
      report.notes.push_back(fmt::format("critical value at alpha = {} rests on fewer than 5 null draws", alpha));
    }
  }
  report.null_summary = summarize_null(null.values);
  report.null_samples = std::move(null.values);
  if (side == Side::two_sided) report.notes.push_back("two-sided p-value is 2 * min(lower, upper), capped at 1");
  if (report.p_value == 0.0) {
    report.notes.push_back(fmt::format("p = 0 means below the resolution 1/S = {}", 1.0 / static_cast<double>(s)));
  }
  return report;
}

}  // namespace simflow
