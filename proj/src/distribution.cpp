#include "simflow/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "simflow/errors.hpp"
#include "simflow/summary.hpp"

namespace simflow {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(fmt::format("distribution: {} must be positive and finite", what));
}

}  // namespace

Distribution Distribution::normal(double mean, double sd) {
  require_positive(sd, "normal sd");
  if (!std::isfinite(mean)) throw DomainError("distribution: normal mean must be finite");
  return Distribution(Family::normal, {mean, sd});
}

Distribution Distribution::student_t(double df, double location, double scale) {
  require_positive(df, "t degrees of freedom");
  require_positive(scale, "t scale");
  return Distribution(Family::student_t, {df, location, scale});
}

Distribution Distribution::beta(double a, double b) {
  require_positive(a, "beta a");
  require_positive(b, "beta b");
  return Distribution(Family::beta, {a, b});
}

Distribution Distribution::gamma(double shape, double rate) {
  require_positive(shape, "gamma shape");
  require_positive(rate, "gamma rate");
  return Distribution(Family::gamma, {shape, rate});
}

Distribution Distribution::empirical(std::vector<double> draws) {
  if (draws.empty()) throw ValidationError("distribution: empirical needs at least one draw");
  Distribution d(Family::empirical, {});
  std::sort(draws.begin(), draws.end());
  d.sorted_ = std::move(draws);
  return d;
}

std::string Distribution::family_name() const {
  switch (family_) {
    case Family::normal: return "normal";
    case Family::student_t: return "student_t";
    case Family::beta: return "beta";
    case Family::gamma: return "gamma";
    case Family::empirical: return "empirical";
  }
  return "unknown";
}

double Distribution::mean() const {
  switch (family_) {
    case Family::normal: return params_[0];
    case Family::student_t:
      return params_[0] > 1.0 ? params_[1] : std::numeric_limits<double>::quiet_NaN();
    case Family::beta: return params_[0] / (params_[0] + params_[1]);
    case Family::gamma: return params_[0] / params_[1];
    case Family::empirical: return simflow::mean(sorted_);
  }
  return 0.0;
}

double Distribution::sd() const {
  switch (family_) {
    case Family::normal: return params_[1];
    case Family::student_t:
      return params_[0] > 2.0 ? params_[2] * std::sqrt(params_[0] / (params_[0] - 2.0))
                              : std::numeric_limits<double>::quiet_NaN();
    case Family::beta: {
      const double a = params_[0], b = params_[1];
      return std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1.0)));
    }
    case Family::gamma: return std::sqrt(params_[0]) / params_[1];
    case Family::empirical: return simflow::sd(sorted_);
  }
  return 0.0;
}

double Distribution::cdf(double x) const {
  namespace bm = boost::math;
  if (std::isnan(x)) throw DomainError("distribution: cdf of NaN");
  switch (family_) {
    case Family::normal:
      if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
      return bm::cdf(bm::normal(params_[0], params_[1]), x);
    case Family::student_t:
      if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
      return bm::cdf(bm::students_t(params_[0]), (x - params_[1]) / params_[2]);
    case Family::beta:
      if (x <= 0.0) return 0.0;
      if (x >= 1.0) return 1.0;
      return bm::cdf(bm::beta_distribution<>(params_[0], params_[1]), x);
    case Family::gamma:
      if (x <= 0.0) return 0.0;
      if (std::isinf(x)) return 1.0;
      return bm::cdf(bm::gamma_distribution<>(params_[0], 1.0 / params_[1]), x);
    case Family::empirical: {
      const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
      return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
    }
  }
  return 0.0;
}

double Distribution::quantile(double p) const {
  namespace bm = boost::math;
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("distribution: quantile level outside [0, 1]");
  switch (family_) {
    case Family::normal:
      if (p == 0.0) return -kInf;
      if (p == 1.0) return kInf;
      return bm::quantile(bm::normal(params_[0], params_[1]), p);
    case Family::student_t:
      if (p == 0.0) return -kInf;
      if (p == 1.0) return kInf;
      return params_[1] + params_[2] * bm::quantile(bm::students_t(params_[0]), p);
    case Family::beta: return bm::quantile(bm::beta_distribution<>(params_[0], params_[1]), p);
    case Family::gamma:
      if (p == 1.0) return kInf;
      return bm::quantile(bm::gamma_distribution<>(params_[0], 1.0 / params_[1]), p);
    case Family::empirical: return quantile_type7_sorted(sorted_, p);
  }
  return 0.0;
}

double Distribution::sample(Rng& rng) const {
  switch (family_) {
    case Family::normal: return params_[0] + params_[1] * rng.normal();
    case Family::student_t: {
      const double chi2 = 2.0 * sample_standard_gamma(0.5 * params_[0], rng);
      return params_[1] + params_[2] * rng.normal() / std::sqrt(chi2 / params_[0]);
    }
    case Family::beta: {
      const double x = sample_standard_gamma(params_[0], rng);
      const double y = sample_standard_gamma(params_[1], rng);
      return x / (x + y);
    }
    case Family::gamma: return sample_standard_gamma(params_[0], rng) / params_[1];
    case Family::empirical: return sorted_[rng.below(sorted_.size())];
  }
  return 0.0;
}

double Distribution::support_lower() const {
  switch (family_) {
    case Family::beta:
    case Family::gamma: return 0.0;
    case Family::empirical: return sorted_.front();
    default: return -kInf;
  }
}

double Distribution::support_upper() const {
  switch (family_) {
    case Family::beta: return 1.0;
    case Family::empirical: return sorted_.back();
    default: return kInf;
  }
}

std::string Distribution::describe() const {
  switch (family_) {
    case Family::normal: return fmt::format("Normal(mean={:.6g}, sd={:.6g})", params_[0], params_[1]);
    case Family::student_t:
      return fmt::format("StudentT(df={:.6g}, location={:.6g}, scale={:.6g})", params_[0], params_[1], params_[2]);
    case Family::beta: return fmt::format("Beta({:.6g}, {:.6g})", params_[0], params_[1]);
    case Family::gamma: return fmt::format("Gamma(shape={:.6g}, rate={:.6g})", params_[0], params_[1]);
    case Family::empirical: return fmt::format("Empirical(n={})", sorted_.size());
  }
  return "unknown";
}

double sample_standard_gamma(double shape, Rng& rng) {
  if (shape < 1.0) {
    const double boosted = sample_standard_gamma(shape + 1.0, rng);
    return boosted * std::pow(rng.uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace simflow
