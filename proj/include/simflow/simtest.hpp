#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simflow/model.hpp"
#include "simflow/rng.hpp"
#include "simflow/statistic.hpp"

namespace simflow {

enum class Side { lower, upper, two_sided };

std::string to_string(Side side);
Side parse_side(const std::string& text);

struct NullSample {
  std::vector<double> values;
  std::size_t retries = 0;  // draws on which the statistic was undefined and was resimulated
};

inline constexpr std::size_t kNullRetryCap = 100;

/// S statistics T(y0) with y0 ~ pi(y | theta0). A non-finite statistic is resimulated from a fresh
/// stream, at most kNullRetryCap times per draw.
NullSample simulate_null(const Model& model, std::span<const double> theta0, const DataStatistic& stat,
                         std::size_t s, Seed seed, std::size_t n = 0);

/// Normalized rank of the observed statistic among the null draws.
///   lower:     (#{T0 < T} + ties) / S
///   upper:     (#{T0 > T} + ties) / S
///   two_sided: min(1, 2 min(lower, upper))
/// Each tie counts with probability 1/2, drawn from tie_seed. No +1 correction: 0 means the
/// observation is beyond the resolution 1/S of the null sample.
double simulation_pvalue(double observed, std::span<const double> null_samples, Side side, Seed tie_seed = 0);

struct Threshold {
  std::optional<double> lower;  // reject when T <= lower
  std::optional<double> upper;  // reject when T >= upper
};

/// Type-7 empirical quantile at alpha (lower), 1 - alpha (upper), or alpha/2 and 1 - alpha/2.
Threshold critical_value(std::span<const double> null_samples, double alpha, Side side);

/// True when S * min(alpha, 1 - alpha) < 5, i.e. the threshold rests on very few null draws.
bool critical_value_is_unstable(std::size_t s, double alpha);

struct NullSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;
  std::map<double, double> quantiles;
};

struct TestReport {
  std::string statistic;
  Side side = Side::lower;
  double observed_stat = 0.0;
  double p_value = 1.0;
  std::map<double, Threshold> critical_values;
  NullSummary null_summary;
  std::vector<double> null_samples;
  std::size_t retries = 0;
  std::vector<std::string> notes;
};

NullSummary summarize_null(std::span<const double> null_samples);

/// Full simulation-based test of an observed dataset against the null theta0.
TestReport run_simulation_test(const Model& model, std::span<const double> theta0, const DataStatistic& stat,
                               const Dataset& observed, Side side, std::size_t s, Seed seed,
                               std::vector<double> alphas = {0.01, 0.05, 0.1});

}  // namespace simflow
