#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "simflow/rng.hpp"

namespace simflow {

/// Simulation-based p-values or normalized ranks. With a granularity M the support is the
/// discrete grid {0, 1/M, ..., 1}.
struct PValueSet {
  std::vector<double> values;
  std::optional<std::size_t> granularity;

  void validate() const;
};

/// Simultaneous band for ECDF(z) - z under uniformity, calibrated by Monte Carlo.
struct EcdfBand {
  std::size_t sample_size = 0;
  std::optional<std::size_t> granularity;
  double coverage = 0.95;
  double pointwise_level = 0.0;  // gamma: two-sided pointwise tail level giving the simultaneous coverage
  std::vector<double> grid;
  std::vector<double> lower;  // bounds on ECDF(z) - z
  std::vector<double> upper;
};

struct EcdfBandReport {
  std::vector<double> grid;
  std::vector<double> ecdf_diff;
  std::vector<double> lower;
  std::vector<double> upper;
  double coverage = 0.95;
  bool inside = true;
};

struct UniformityVerdict {
  double chi2_stat = 0.0;
  double chi2_pvalue = 1.0;
  std::size_t chi2_df = 0;
  double ks_stat = 0.0;
  double ks_pvalue = 1.0;
  bool ecdf_inside = true;
  std::size_t bins = 10;
  EcdfBandReport band;
};

struct KsResult {
  double statistic = 0.0;
  double pvalue = 1.0;
};

inline constexpr std::size_t kDefaultBins = 10;
inline constexpr double kDefaultCoverage = 0.95;
inline constexpr std::size_t kBandReplicates = 1000;
inline constexpr Seed kDefaultDiagnosticSeed = 0x5BC0FFEEULL;

/// Chi-squared (equal-width bins, bins - 1 df or the number of occupied support classes - 1 when a
/// granularity is declared), Kolmogorov-Smirnov against Uniform(0, 1) (discrete values are spread
/// uniformly over their support cell first) and the simultaneous ECDF band verdict.
UniformityVerdict uniformity_test(const PValueSet& p, std::size_t bins = kDefaultBins,
                                  double coverage = kDefaultCoverage, Seed seed = kDefaultDiagnosticSeed);

/// Band for samples of size s. Deterministic in (s, granularity, coverage, seed); results are cached.
EcdfBand ecdf_band(std::size_t s, std::optional<std::size_t> granularity = std::nullopt,
                   double coverage = kDefaultCoverage, Seed seed = kDefaultDiagnosticSeed,
                   std::size_t replicates = kBandReplicates);

/// ECDF-difference trajectory of p on the band's grid, checked against the band.
EcdfBandReport ecdf_band_report(const PValueSet& p, const EcdfBand& band);

/// Counts per equal-width bin on [0, 1]; 1.0 falls in the last bin.
std::vector<std::size_t> rank_histogram(const PValueSet& p, std::size_t bins = kDefaultBins);

/// One-sample KS against a continuous CDF.
KsResult ks_test(std::span<const double> sample, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);
/// Asymptotic Kolmogorov tail probability with the Stephens small-sample correction.
double kolmogorov_pvalue(double statistic, double effective_n);

double chi_squared_sf(double statistic, double df);

}  // namespace simflow
