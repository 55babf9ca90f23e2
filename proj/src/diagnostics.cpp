#include "simflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include "simflow/errors.hpp"
#include "simflow/parallel.hpp"

namespace simflow {
namespace {

// Above this many support cells a declared granularity is treated as continuous for the band grid.
constexpr std::size_t kMaxDiscreteGrid = 1000;
constexpr std::size_t kContinuousGrid = 99;

struct BandGrid {
  bool discrete = false;
  std::size_t cells = 0;  // M + 1 when discrete
  std::vector<double> z;
};

BandGrid make_grid(std::size_t s, std::optional<std::size_t> granularity) {
  BandGrid g;
  if (granularity && *granularity + 1 <= kMaxDiscreteGrid) {
    g.discrete = true;
    g.cells = *granularity + 1;
    for (std::size_t j = 1; j < g.cells; ++j) g.z.push_back(static_cast<double>(j) / static_cast<double>(g.cells));
    return g;
  }
  const std::size_t k = std::min(s, kContinuousGrid);
  for (std::size_t i = 1; i <= k; ++i) g.z.push_back(static_cast<double>(i) / static_cast<double>(k + 1));
  return g;
}

std::size_t to_rank(double p, std::size_t granularity) {
  const double r = std::round(p * static_cast<double>(granularity));
  return static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(granularity)));
}

// Counts below each grid point: #{rank < j} for discrete data, #{p <= z} otherwise.
std::vector<std::size_t> grid_counts(std::span<const double> values, const BandGrid& grid,
                                     std::optional<std::size_t> granularity) {
  std::vector<std::size_t> counts(grid.z.size(), 0);
  if (grid.discrete) {
    std::vector<std::size_t> per_cell(grid.cells, 0);
    for (double p : values) ++per_cell[to_rank(p, *granularity)];
    std::size_t running = 0;
    for (std::size_t j = 1; j < grid.cells; ++j) {
      running += per_cell[j - 1];
      counts[j - 1] = running;
    }
    return counts;
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < grid.z.size(); ++i) {
    counts[i] = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), grid.z[i]) - sorted.begin());
  }
  return counts;
}

// Lower CDF P(X <= c) and upper tail P(X >= c) of Binomial(n, z) for c = 0..n.
void binomial_tails(std::size_t n, double z, std::vector<double>& lower, std::vector<double>& upper) {
  std::vector<double> pmf(n + 1);
  const double nn = static_cast<double>(n);
  const double lz = std::log(z), l1z = std::log1p(-z);
  for (std::size_t c = 0; c <= n; ++c) {
    const double cc = static_cast<double>(c);
    pmf[c] = std::exp(std::lgamma(nn + 1.0) - std::lgamma(cc + 1.0) - std::lgamma(nn - cc + 1.0) + cc * lz + (nn - cc) * l1z);
  }
  lower.assign(n + 1, 0.0);
  upper.assign(n + 1, 0.0);
  double acc = 0.0;
  for (std::size_t c = 0; c <= n; ++c) lower[c] = std::min(1.0, acc += pmf[c]);
  acc = 0.0;
  for (std::size_t c = n + 1; c-- > 0;) upper[c] = std::min(1.0, acc += pmf[c]);
}

EcdfBand compute_band(std::size_t s, std::optional<std::size_t> granularity, double coverage, Seed seed,
                      std::size_t replicates) {
  const BandGrid grid = make_grid(s, granularity);
  const std::size_t k = grid.z.size();

  std::vector<std::vector<std::size_t>> counts(replicates);
  parallel_for(replicates, [&](std::size_t r) {
    Rng rng(derive_seed(seed, r));
    std::vector<double> sample(s);
    if (grid.discrete) {
      for (auto& v : sample) v = static_cast<double>(rng.below(grid.cells)) / static_cast<double>(*granularity);
    } else {
      for (auto& v : sample) v = rng.uniform();
    }
    counts[r] = grid_counts(sample, grid, granularity);
  });

  // Smallest pointwise tail probability of each replicate trajectory.
  std::vector<double> min_tail(replicates, 1.0);
  std::vector<std::vector<double>> lower_tails(k), upper_tails(k);
  for (std::size_t j = 0; j < k; ++j) {
    binomial_tails(s, grid.z[j], lower_tails[j], upper_tails[j]);
    for (std::size_t r = 0; r < replicates; ++r) {
      const std::size_t c = counts[r][j];
      min_tail[r] = std::min({min_tail[r], lower_tails[j][c], upper_tails[j][c]});
    }
  }

  auto covered = [&](double gamma) {
    std::size_t inside = 0;
    for (double t : min_tail) inside += t >= gamma / 2.0 ? 1 : 0;
    return static_cast<double>(inside) / static_cast<double>(replicates);
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (covered(mid) >= coverage) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double gamma = lo;

  EcdfBand band;
  band.sample_size = s;
  band.granularity = granularity;
  band.coverage = coverage;
  band.pointwise_level = gamma;
  band.grid = grid.z;
  const double n = static_cast<double>(s);
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t lower_count = 0;
    while (lower_count < s && lower_tails[j][lower_count] < gamma / 2.0) ++lower_count;
    std::size_t upper_count = s;
    while (upper_count > 0 && upper_tails[j][upper_count] < gamma / 2.0) --upper_count;
    band.lower.push_back(std::min(0.0, static_cast<double>(lower_count) / n - grid.z[j]));
    band.upper.push_back(std::max(0.0, static_cast<double>(upper_count) / n - grid.z[j]));
  }
  return band;
}

}  // namespace

void PValueSet::validate() const {
  if (values.empty()) throw ValidationError("p-value set is empty");
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(fmt::format("p-value {} outside [0, 1]", v));
  }
  if (granularity && *granularity == 0) throw ValidationError("p-value granularity must be positive");
}

EcdfBand ecdf_band(std::size_t s, std::optional<std::size_t> granularity, double coverage, Seed seed,
                   std::size_t replicates) {
  if (s < 10) throw ValidationError("ecdf band: need at least 10 values");
  if (!(coverage > 0.0 && coverage < 1.0)) throw ValidationError("ecdf band: coverage must lie in (0, 1)");
  if (replicates < 10) throw ValidationError("ecdf band: need at least 10 calibration replicates");

  using Key = std::tuple<std::size_t, std::size_t, double, Seed, std::size_t>;
  static std::mutex cache_mutex;
  static std::map<Key, EcdfBand> cache;
  const Key key{s, granularity.value_or(0), coverage, seed, replicates};
  {
    std::lock_guard lock(cache_mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  EcdfBand band = compute_band(s, granularity, coverage, derive_seed(seed, {s, granularity.value_or(0)}), replicates);
  std::lock_guard lock(cache_mutex);
  return cache.emplace(key, std::move(band)).first->second;
}

EcdfBandReport ecdf_band_report(const PValueSet& p, const EcdfBand& band) {
  p.validate();
  if (p.values.size() != band.sample_size) throw ValidationError("ecdf band: sample size mismatch");
  const BandGrid grid = make_grid(band.sample_size, band.granularity);
  const auto counts = grid_counts(p.values, grid, band.granularity);
  EcdfBandReport report;
  report.grid = band.grid;
  report.lower = band.lower;
  report.upper = band.upper;
  report.coverage = band.coverage;
  const double n = static_cast<double>(band.sample_size);
  for (std::size_t j = 0; j < grid.z.size(); ++j) {
    const double diff = static_cast<double>(counts[j]) / n - grid.z[j];
    report.ecdf_diff.push_back(diff);
    // Bounds are multiples of 1/n offset by z; compare with a tolerance for rounding.
    if (diff < band.lower[j] - 1e-9 || diff > band.upper[j] + 1e-9) report.inside = false;
  }
  return report;
}

std::vector<std::size_t> rank_histogram(const PValueSet& p, std::size_t bins) {
  if (bins < 2) throw ValidationError("histogram: need at least 2 bins");
  std::vector<std::size_t> counts(bins, 0);
  for (double v : p.values) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(fmt::format("p-value {} outside [0, 1]", v));
    const auto b = std::min(static_cast<std::size_t>(v * static_cast<double>(bins)), bins - 1);
    ++counts[b];
  }
  return counts;
}

double chi_squared_sf(double statistic, double df) {
  if (std::isinf(statistic)) return 0.0;
  if (statistic <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), statistic));
}

double kolmogorov_pvalue(double statistic, double effective_n) {
  const double root = std::sqrt(effective_n);
  const double lambda = (root + 0.12 + 0.11 / root) * statistic;
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.0) {
    // P(K <= lambda) = sqrt(2 pi) / lambda * sum exp(-(2k - 1)^2 pi^2 / (8 lambda^2))
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double term = std::exp(-(2.0 * k - 1.0) * (2.0 * k - 1.0) * std::numbers::pi * std::numbers::pi /
                                   (8.0 * lambda * lambda));
      cdf += term;
      if (term < 1e-300) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw ValidationError("ks: empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, kolmogorov_pvalue(d, n)};
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("ks: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return {d, kolmogorov_pvalue(d, nx * ny / (nx + ny))};
}

UniformityVerdict uniformity_test(const PValueSet& p, std::size_t bins, double coverage, Seed seed) {
  p.validate();
  if (bins < 2) throw ValidationError("uniformity test: need at least 2 bins");
  if (p.values.size() < bins) throw ValidationError("uniformity test: fewer values than bins");

  UniformityVerdict verdict;
  verdict.bins = bins;
  const double n = static_cast<double>(p.values.size());

  // Chi-squared with expected counts from the (possibly discrete) uniform null.
  const auto observed = rank_histogram(p, bins);
  std::vector<double> expected(bins, n / static_cast<double>(bins));
  if (p.granularity) {
    const std::size_t m = *p.granularity;
    std::fill(expected.begin(), expected.end(), 0.0);
    for (std::size_t r = 0; r <= m; ++r) {
      const double v = static_cast<double>(r) / static_cast<double>(m);
      expected[std::min(static_cast<std::size_t>(v * static_cast<double>(bins)), bins - 1)] += n / static_cast<double>(m + 1);
    }
  }
  double chi2 = 0.0;
  std::size_t classes = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (expected[b] > 0.0) {
      ++classes;
      const double diff = static_cast<double>(observed[b]) - expected[b];
      chi2 += diff * diff / expected[b];
    } else if (observed[b] > 0) {
      chi2 = std::numeric_limits<double>::infinity();
    }
  }
  verdict.chi2_stat = chi2;
  verdict.chi2_df = classes > 1 ? classes - 1 : 1;
  verdict.chi2_pvalue = chi_squared_sf(chi2, static_cast<double>(verdict.chi2_df));

  // KS, spreading discrete values uniformly over their support cell.
  std::vector<double> continuous = p.values;
  if (p.granularity) {
    Rng rng(derive_seed(seed, 0x4B53));
    const double cells = static_cast<double>(*p.granularity + 1);
    for (auto& v : continuous) v = (static_cast<double>(to_rank(v, *p.granularity)) + rng.uniform()) / cells;
  }
  const auto ks = ks_test(continuous, [](double x) { return std::clamp(x, 0.0, 1.0); });
  verdict.ks_stat = ks.statistic;
  verdict.ks_pvalue = ks.pvalue;

  if (p.values.size() >= 10) {
    verdict.band = ecdf_band_report(p, ecdf_band(p.values.size(), p.granularity, coverage, seed));
    verdict.ecdf_inside = verdict.band.inside;
  }
  return verdict;
}

}  // namespace simflow
