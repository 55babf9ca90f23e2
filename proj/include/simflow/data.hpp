#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace simflow {

/// N observations of dimension obs_dim, stored row-major. Counts are stored as integral reals.
/// Multi-group models attach one integer label per observation.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<double> values, std::size_t obs_dim = 1,
                   std::optional<std::vector<int>> groups = std::nullopt);

  std::size_t size() const noexcept { return obs_dim_ == 0 ? 0 : values_.size() / obs_dim_; }
  bool empty() const noexcept { return values_.empty(); }
  std::size_t obs_dim() const noexcept { return obs_dim_; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * obs_dim_, obs_dim_}; }
  double operator()(std::size_t i, std::size_t j = 0) const { return values_[i * obs_dim_ + j]; }

  bool has_groups() const noexcept { return groups_.has_value(); }
  const std::vector<int>& groups() const;

  /// Values of the first coordinate for observations with the given label.
  std::vector<double> group_values(int label) const;

  /// (y_obs, y') in that order; labels are kept when both sides carry them.
  static Dataset concat(const Dataset& first, const Dataset& second);

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<double> values_;
  std::size_t obs_dim_ = 1;
  std::optional<std::vector<int>> groups_;
};

enum class DrawSource { prior, posterior, approximate_posterior };

std::string to_string(DrawSource source);

/// S x dim matrix of parameter draws. Samplers that evaluate densities attach the per-draw
/// log-prior and log-likelihood so draws can be reweighted later.
class ParamDraws {
 public:
  ParamDraws() = default;
  ParamDraws(std::size_t dim, DrawSource source);
  ParamDraws(std::vector<double> values, std::size_t dim, DrawSource source);

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  DrawSource source() const noexcept { return source_; }

  std::span<const double> row(std::size_t s) const { return {values_.data() + s * dim_, dim_}; }
  double operator()(std::size_t s, std::size_t j = 0) const { return values_[s * dim_ + j]; }
  std::span<const double> values() const noexcept { return values_; }

  std::vector<double> column(std::size_t j) const;
  double mean(std::size_t j = 0) const;

  void push_back(std::span<const double> theta);
  void reserve(std::size_t rows) { values_.reserve(rows * dim_); }
  void truncate(std::size_t rows);

  bool has_log_densities() const noexcept { return !log_prior.empty() && log_prior.size() == size(); }
  std::vector<double> log_prior;
  std::vector<double> log_likelihood;

 private:
  std::vector<double> values_;
  std::size_t dim_ = 0;
  DrawSource source_ = DrawSource::prior;
};

/// Dataset CSV: header `y` (or `y0,y1,...`) plus an optional `group` column, one row per observation.
Dataset read_dataset_csv(const std::filesystem::path& path);
Dataset parse_dataset_csv(const std::string& text);
std::string format_dataset_csv(const Dataset& data);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);

/// Splits one CSV line on commas and trims surrounding whitespace from each field.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace simflow
