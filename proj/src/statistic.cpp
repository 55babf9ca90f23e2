#include "simflow/statistic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "simflow/errors.hpp"
#include "simflow/summary.hpp"

namespace simflow {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> first_column(const Dataset& y) {
  if (y.obs_dim() == 1) return {y.values().begin(), y.values().end()};
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y(i, 0);
  return out;
}

double pooled_t(const Dataset& y) {
  const auto a = y.group_values(0);
  const auto b = y.group_values(1);
  if (a.size() < 2 || b.size() < 2) return kNaN;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double pooled = ((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / (na + nb - 2.0);
  if (!(pooled > 0.0)) return kNaN;
  return (mean(a) - mean(b)) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
}

}  // namespace

ParamStatistic ParamStatistic::coordinate(std::size_t index) {
  return {fmt::format("theta[{}]", index), [index](std::span<const double> theta) {
            if (index >= theta.size()) throw ValidationError("param statistic: coordinate out of range");
            return theta[index];
          }};
}

DiscrepancyStatistic DiscrepancyStatistic::absolute_difference(DataStatistic stat) {
  std::string name = "abs:" + stat.name;
  return {std::move(name), [stat = std::move(stat)](const Dataset& obs, const Dataset& rep) {
            return std::abs(stat(obs) - stat(rep));
          }};
}

DiscrepancyStatistic DiscrepancyStatistic::difference(DataStatistic stat) {
  std::string name = "diff:" + stat.name;
  return {std::move(name),
          [stat = std::move(stat)](const Dataset& obs, const Dataset& rep) { return stat(rep) - stat(obs); }};
}

DataStatistic make_data_statistic(const std::string& name) {
  if (name == "mean") return {name, [](const Dataset& y) { return mean(first_column(y)); }};
  if (name == "variance") return {name, [](const Dataset& y) { return variance(first_column(y)); }};
  if (name == "sd") return {name, [](const Dataset& y) { return sd(first_column(y)); }};
  if (name == "sum") {
    return {name, [](const Dataset& y) {
              const auto v = first_column(y);
              return std::accumulate(v.begin(), v.end(), 0.0);
            }};
  }
  if (name == "max") {
    return {name, [](const Dataset& y) {
              const auto v = first_column(y);
              return v.empty() ? kNaN : *std::max_element(v.begin(), v.end());
            }};
  }
  if (name == "min") {
    return {name, [](const Dataset& y) {
              const auto v = first_column(y);
              return v.empty() ? kNaN : *std::min_element(v.begin(), v.end());
            }};
  }
  if (name == "lag1_autocorrelation") {
    return {name, [](const Dataset& y) { return lag1_autocorrelation(first_column(y)); }};
  }
  if (name == "mean_difference") {
    return {name, [](const Dataset& y) {
              const auto a = y.group_values(0);
              const auto b = y.group_values(1);
              if (a.empty() || b.empty()) return kNaN;
              return mean(a) - mean(b);
            }};
  }
  if (name == "pooled_t") return {name, pooled_t};
  if (name == "variance_ratio") {
    return {name, [](const Dataset& y) {
              const double vb = variance(y.group_values(1));
              if (!(vb > 0.0)) return kNaN;
              return variance(y.group_values(0)) / vb;
            }};
  }
  throw ValidationError("unknown data statistic: " + name);
}

DataStatistic constant_statistic(double value) {
  return {fmt::format("constant({})", value), [value](const Dataset&) { return value; }};
}

ParamStatistic make_param_statistic(const std::string& name) {
  if (name == "theta") return ParamStatistic::coordinate(0);
  if (name.rfind("theta[", 0) == 0 && name.back() == ']') {
    try {
      return ParamStatistic::coordinate(std::stoul(name.substr(6, name.size() - 7)));
    } catch (const std::logic_error&) {
      throw ValidationError("bad parameter statistic: " + name);
    }
  }
  if (name == "exp_theta") return {name, [](std::span<const double> t) { return std::exp(t[0]); }};
  if (name == "logit_theta") {
    return {name, [](std::span<const double> t) { return std::log(t[0] / (1.0 - t[0])); }};
  }
  throw ValidationError("unknown parameter statistic: " + name);
}

DiscrepancyStatistic make_discrepancy(const std::string& name) {
  const auto colon = name.find(':');
  if (colon == std::string::npos) throw ValidationError("discrepancy must be abs:<stat> or diff:<stat>, got " + name);
  const auto kind = name.substr(0, colon);
  auto stat = make_data_statistic(name.substr(colon + 1));
  if (kind == "abs") return DiscrepancyStatistic::absolute_difference(std::move(stat));
  if (kind == "diff") return DiscrepancyStatistic::difference(std::move(stat));
  throw ValidationError("unknown discrepancy kind: " + kind);
}

}  // namespace simflow
