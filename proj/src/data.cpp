#include "simflow/data.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "simflow/errors.hpp"

namespace simflow {

Dataset::Dataset(std::vector<double> values, std::size_t obs_dim, std::optional<std::vector<int>> groups)
    : values_(std::move(values)), obs_dim_(obs_dim), groups_(std::move(groups)) {
  if (obs_dim_ == 0) throw ValidationError("dataset: obs_dim must be positive");
  if (values_.size() % obs_dim_ != 0) throw ValidationError("dataset: value count is not a multiple of obs_dim");
  if (groups_ && groups_->size() != size()) throw ValidationError("dataset: group labels must have one entry per observation");
}

const std::vector<int>& Dataset::groups() const {
  if (!groups_) throw ValidationError("dataset has no group labels");
  return *groups_;
}

std::vector<double> Dataset::group_values(int label) const {
  const auto& labels = groups();
  std::vector<double> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (labels[i] == label) out.push_back((*this)(i, 0));
  }
  return out;
}

Dataset Dataset::concat(const Dataset& first, const Dataset& second) {
  if (first.empty()) return second;
  if (second.empty()) return first;
  if (first.obs_dim_ != second.obs_dim_) throw ValidationError("dataset concat: obs_dim mismatch");
  std::vector<double> values = first.values_;
  values.insert(values.end(), second.values_.begin(), second.values_.end());
  std::optional<std::vector<int>> groups;
  if (first.groups_ && second.groups_) {
    groups = *first.groups_;
    groups->insert(groups->end(), second.groups_->begin(), second.groups_->end());
  }
  return Dataset(std::move(values), first.obs_dim_, std::move(groups));
}

std::string to_string(DrawSource source) {
  switch (source) {
    case DrawSource::prior: return "prior";
    case DrawSource::posterior: return "posterior";
    case DrawSource::approximate_posterior: return "approximate_posterior";
  }
  return "unknown";
}

ParamDraws::ParamDraws(std::size_t dim, DrawSource source) : dim_(dim), source_(source) {
  if (dim_ == 0) throw ValidationError("param draws: dimension must be positive");
}

ParamDraws::ParamDraws(std::vector<double> values, std::size_t dim, DrawSource source)
    : values_(std::move(values)), dim_(dim), source_(source) {
  if (dim_ == 0 || values_.size() % dim_ != 0) throw ValidationError("param draws: bad shape");
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("param draws: non-finite entry");
  }
}

std::vector<double> ParamDraws::column(std::size_t j) const {
  std::vector<double> out(size());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = (*this)(s, j);
  return out;
}

double ParamDraws::mean(std::size_t j) const {
  double total = 0.0;
  for (std::size_t s = 0; s < size(); ++s) total += (*this)(s, j);
  return total / static_cast<double>(size());
}

void ParamDraws::push_back(std::span<const double> theta) {
  if (theta.size() != dim_) throw ValidationError("param draws: row dimension mismatch");
  values_.insert(values_.end(), theta.begin(), theta.end());
}

void ParamDraws::truncate(std::size_t rows) {
  if (rows >= size()) return;
  values_.resize(rows * dim_);
  if (log_prior.size() > rows) log_prior.resize(rows);
  if (log_likelihood.size() > rows) log_likelihood.resize(rows);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto first = field.find_first_not_of(" \t\r");
    const auto last = field.find_last_not_of(" \t\r");
    fields.push_back(first == std::string::npos ? std::string{} : field.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

Dataset parse_dataset_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("dataset csv: missing header");
  const auto header = split_csv_line(line);
  std::vector<std::size_t> value_cols;
  std::optional<std::size_t> group_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "group") {
      group_col = c;
    } else {
      value_cols.push_back(c);
    }
  }
  if (value_cols.empty()) throw ValidationError("dataset csv: no value columns");

  std::vector<double> values;
  std::vector<int> groups;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ValidationError(fmt::format("dataset csv: line {} has {} fields, expected {}", line_no, fields.size(),
                                        header.size()));
    }
    try {
      for (auto c : value_cols) values.push_back(std::stod(fields[c]));
      if (group_col) groups.push_back(std::stoi(fields[*group_col]));
    } catch (const std::logic_error&) {
      throw ValidationError(fmt::format("dataset csv: unparsable number on line {}", line_no));
    }
  }
  std::optional<std::vector<int>> labels;
  if (group_col) labels = std::move(groups);
  return Dataset(std::move(values), value_cols.size(), std::move(labels));
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset_csv(buffer.str());
}

std::string format_dataset_csv(const Dataset& data) {
  std::string out;
  for (std::size_t j = 0; j < data.obs_dim(); ++j) {
    if (j > 0) out += ',';
    out += data.obs_dim() == 1 ? std::string("y") : fmt::format("y{}", j);
  }
  if (data.has_groups()) out += ",group";
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.obs_dim(); ++j) {
      if (j > 0) out += ',';
      out += fmt::format("{:.17g}", data(i, j));
    }
    if (data.has_groups()) out += fmt::format(",{}", data.groups()[i]);
    out += '\n';
  }
  return out;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write dataset file: " + path.string());
  out << format_dataset_csv(data);
}

}  // namespace simflow
