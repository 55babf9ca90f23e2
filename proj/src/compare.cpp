#include "simflow/compare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "simflow/errors.hpp"
#include "simflow/parallel.hpp"
#include "simflow/summary.hpp"

namespace simflow {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

EvidenceEstimate marginal_likelihood_mc(const Model& model, const Dataset& y_obs, std::size_t s, Seed seed) {
  const auto caps = model.capabilities();
  if (!caps.prior || !caps.log_likelihood) {
    throw CapabilityError(fmt::format("model '{}' needs a prior and a likelihood for evidence estimation", model.name()));
  }
  if (s < 2) throw ValidationError("evidence estimation needs S >= 2");
  std::vector<double> ll(s);
  parallel_for(s, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    ll[i] = model.log_likelihood(model.draw_prior(rng), y_obs);
  });

  EvidenceEstimate e;
  e.s = s;
  const double top = *std::max_element(ll.begin(), ll.end());
  if (!std::isfinite(top)) {
    e.log_evidence = -kInf;
    e.mc_se = kInf;
    e.diagnostic = fmt::format("all {} prior draws gave zero likelihood; the evidence is below the estimator's resolution", s);
    return e;
  }
  std::vector<double> w(s);
  for (std::size_t i = 0; i < s; ++i) w[i] = std::exp(ll[i] - top);
  const double w_mean = mean(w);
  e.log_evidence = top + std::log(w_mean);
  e.mc_se = sd(w) / (std::sqrt(static_cast<double>(s)) * w_mean);
  return e;
}

void ModelSet::validate() const {
  if (models.empty()) throw ValidationError("model set is empty");
  if (prior_probs.size() != models.size()) throw ValidationError("model set: one prior probability per model");
  double total = 0.0;
  for (double p : prior_probs) {
    if (!(p >= 0.0)) throw ValidationError("model set: prior probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("model set: prior probabilities must sum to 1");
}

ModelComparison posterior_model_probs(const ModelSet& set, const Dataset& y_obs, std::size_t s, Seed seed) {
  set.validate();
  const std::size_t l = set.models.size();
  ModelComparison out;
  for (std::size_t i = 0; i < l; ++i) {
    out.names.push_back(set.models[i]->name());
    out.evidence.push_back(marginal_likelihood_mc(*set.models[i], y_obs, s, derive_seed(seed, i)));
  }

  std::vector<double> log_post(l, -kInf);
  for (std::size_t i = 0; i < l; ++i) {
    if (set.prior_probs[i] > 0.0) log_post[i] = std::log(set.prior_probs[i]) + out.evidence[i].log_evidence;
  }
  const double norm = log_sum_exp(log_post);
  if (!std::isfinite(norm)) throw Error("every model with positive prior mass has zero estimated evidence");
  for (double v : log_post) out.probabilities.push_back(std::exp(v - norm));

  out.log_bayes_factors.assign(l, std::vector<double>(l, 0.0));
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      const double a = out.evidence[i].log_evidence, b = out.evidence[j].log_evidence;
      out.log_bayes_factors[i][j] = (a == b) ? 0.0 : a - b;
    }
  }
  return out;
}

double WeightedDraws::mean(std::size_t j) const {
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) total += weights[i] * draws(i, j);
  return total;
}

double WeightedDraws::quantile(double p, std::size_t j) const {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("weighted quantile: p must lie in [0, 1]");
  if (weights.empty()) throw ValidationError("weighted quantile: no draws");
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return draws(a, j) < draws(b, j); });
  double cumulative = 0.0;
  for (std::size_t i : order) {
    cumulative += weights[i];
    if (cumulative >= p) return draws(i, j);
  }
  return draws(order.back(), j);
}

WeightedDraws power_scale_weights(const ParamDraws& draws, double alpha_prior, double alpha_lik) {
  if (!(alpha_prior > 0.0) || !(alpha_lik > 0.0)) throw ValidationError("power-scaling exponents must be positive");
  if (!draws.has_log_densities() || draws.log_likelihood.size() != draws.size()) {
    throw CapabilityError("power scaling needs per-draw log prior and log likelihood");
  }
  const std::size_t s = draws.size();
  WeightedDraws out;
  out.draws = draws;
  out.log_weights.resize(s);
  for (std::size_t i = 0; i < s; ++i) {
    double lw = 0.0;
    if (alpha_prior != 1.0) lw += (alpha_prior - 1.0) * draws.log_prior[i];
    if (alpha_lik != 1.0) lw += (alpha_lik - 1.0) * draws.log_likelihood[i];
    out.log_weights[i] = lw;
  }
  const double norm = log_sum_exp(out.log_weights);
  if (!std::isfinite(norm)) throw Error("power-scaling weights are all zero");
  // ESS from weights scaled to a maximum of 1, so equal log weights give exactly S.
  const double top = *std::max_element(out.log_weights.begin(), out.log_weights.end());
  double sum = 0.0;
  double sum_sq = 0.0;
  out.weights.resize(s);
  for (std::size_t i = 0; i < s; ++i) {
    const double w = std::exp(out.log_weights[i] - top);
    sum += w;
    sum_sq += w * w;
    out.weights[i] = w;
  }
  for (std::size_t i = 0; i < s; ++i) {
    out.weights[i] /= sum;
    out.log_weights[i] -= norm;
  }
  out.ess = sum * sum / sum_sq;
  return out;
}

std::vector<SweepRow> sensitivity_sweep(const SweepPipeline& pipeline, const std::vector<SweepPoint>& grid, Seed seed) {
  if (grid.empty()) throw ValidationError("sensitivity sweep: empty grid");
  std::vector<SweepRow> rows(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.point = grid[i];
    row.seed = derive_seed(seed, i);
    try {
      row.outputs = pipeline(row.point, row.seed);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });
  return rows;
}

std::vector<SweepPoint> grid_product(const std::map<std::string, std::vector<double>>& axes) {
  std::vector<SweepPoint> out{SweepPoint{}};
  for (const auto& [key, values] : axes) {
    if (values.empty()) throw ValidationError("sensitivity grid: axis '" + key + "' has no values");
    std::vector<SweepPoint> next;
    for (const auto& point : out) {
      for (double v : values) {
        SweepPoint p = point;
        p[key] = v;
        next.push_back(std::move(p));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::set<std::string> inputs, outputs;
  for (const auto& row : rows) {
    for (const auto& [k, v] : row.point) inputs.insert(k);
    for (const auto& [k, v] : row.outputs) outputs.insert(k);
  }
  std::string text;
  std::vector<std::string> header(inputs.begin(), inputs.end());
  header.insert(header.end(), outputs.begin(), outputs.end());
  header.push_back("error");
  text += fmt::format("{}\n", fmt::join(header, ","));
  for (const auto& row : rows) {
    std::vector<std::string> cells;
    for (const auto& k : inputs) {
      auto it = row.point.find(k);
      cells.push_back(it == row.point.end() ? "" : fmt::format("{}", it->second));
    }
    for (const auto& k : outputs) {
      auto it = row.outputs.find(k);
      cells.push_back(it == row.outputs.end() ? "" : fmt::format("{}", it->second));
    }
    std::string err = row.error.value_or("");
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    cells.push_back(err);
    text += fmt::format("{}\n", fmt::join(cells, ","));
  }
  return text;
}

}  // namespace simflow
