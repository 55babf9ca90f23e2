#include "report.hpp"

#include <fmt/format.h>

#include "simflow/summary.hpp"

namespace simflow::cli {
namespace {

std::string csv_number(double v) { return fmt::format("{}", v); }

}  // namespace

json to_json(const UniformityVerdict& v) {
  return {{"chi2_stat", v.chi2_stat},
          {"chi2_pvalue", v.chi2_pvalue},
          {"chi2_df", v.chi2_df},
          {"ks_stat", v.ks_stat},
          {"ks_pvalue", v.ks_pvalue},
          {"ecdf_inside", v.ecdf_inside},
          {"bins", v.bins},
          {"band",
           {{"coverage", v.band.coverage},
            {"grid", v.band.grid},
            {"ecdf_diff", v.band.ecdf_diff},
            {"lower", v.band.lower},
            {"upper", v.band.upper}}}};
}

json to_json(const CalibrationResult& r) {
  json out;
  json targets = json::array();
  for (const auto& t : r.targets) {
    json item{{"name", t.name},
              {"pvalues", t.pvalues.values},
              {"verdict", to_json(t.verdict)},
              {"histogram", t.histogram}};
    item["granularity"] = t.pvalues.granularity ? json(*t.pvalues.granularity) : json(nullptr);
    targets.push_back(std::move(item));
  }
  out["targets"] = std::move(targets);
  out["metadata"] = r.metadata;
  out["warnings"] = r.warnings;
  if (r.interval_coverage) {
    out["interval"] = {{"level", *r.interval_level}, {"coverage", *r.interval_coverage}};
    out["skipped"] = r.skipped;
  }
  return out;
}

json to_json(const TestReport& r) {
  json critical = json::object();
  for (const auto& [alpha, t] : r.critical_values) {
    critical[fmt::format("{}", alpha)] = {{"lower", t.lower ? json(*t.lower) : json(nullptr)},
                                          {"upper", t.upper ? json(*t.upper) : json(nullptr)}};
  }
  json quantiles = json::object();
  for (const auto& [p, q] : r.null_summary.quantiles) quantiles[fmt::format("{}", p)] = q;
  return {{"statistic", r.statistic},
          {"side", to_string(r.side)},
          {"observed_stat", r.observed_stat},
          {"p_value", r.p_value},
          {"critical_values", critical},
          {"null_summary",
           {{"count", r.null_summary.count},
            {"mean", r.null_summary.mean},
            {"sd", r.null_summary.sd},
            {"quantiles", quantiles}}},
          {"null_samples", r.null_samples},
          {"retries", r.retries},
          {"notes", r.notes}};
}

json to_json(const PredictiveResult& r) {
  json out{{"replication_stats", r.replication_stats}, {"side", to_string(r.side)}};
  out["observed_stat"] = r.observed_stat ? json(*r.observed_stat) : json(nullptr);
  out["ppp"] = r.ppp ? json(*r.ppp) : json(nullptr);
  out["fraction_in_region"] = r.fraction_in_region ? json(*r.fraction_in_region) : json(nullptr);
  return out;
}

json to_json(const EvidenceEstimate& e) {
  json out{{"mc_se", std::isfinite(e.mc_se) ? json(e.mc_se) : json("inf")}, {"s", e.s}, {"diagnostic", e.diagnostic}};
  out["log_evidence"] = std::isfinite(e.log_evidence) ? json(e.log_evidence) : json("-inf");
  return out;
}

json summarize_values(const std::vector<double>& values) {
  if (values.empty()) return {{"count", 0}};
  const std::vector<double> probs{0.05, 0.25, 0.5, 0.75, 0.95};
  const auto q = quantiles_type7(values, probs);
  json quantiles = json::object();
  for (std::size_t i = 0; i < probs.size(); ++i) quantiles[fmt::format("{}", probs[i])] = q[i];
  return {{"count", values.size()},
          {"mean", mean(values)},
          {"sd", values.size() > 1 ? sd(values) : 0.0},
          {"quantiles", quantiles}};
}

json summarize_draws(const ParamDraws& draws) {
  json out = json::array();
  for (std::size_t j = 0; j < draws.dim(); ++j) out.push_back(summarize_values(draws.column(j)));
  return out;
}

std::string pvalues_csv(const CalibrationResult& r) {
  std::string text = "target,s,p\n";
  for (const auto& t : r.targets) {
    for (std::size_t s = 0; s < t.pvalues.values.size(); ++s) {
      text += fmt::format("{},{},{}\n", t.name, s, csv_number(t.pvalues.values[s]));
    }
  }
  return text;
}

std::string column_csv(const std::string& header, const std::vector<double>& values) {
  std::string text = header + "\n";
  for (double v : values) text += csv_number(v) + "\n";
  return text;
}

std::string draws_csv(const ParamDraws& draws) {
  std::string text;
  for (std::size_t j = 0; j < draws.dim(); ++j) text += fmt::format("{}theta{}", j == 0 ? "" : ",", j);
  text += "\n";
  for (std::size_t s = 0; s < draws.size(); ++s) {
    for (std::size_t j = 0; j < draws.dim(); ++j) text += fmt::format("{}{}", j == 0 ? "" : ",", csv_number(draws(s, j)));
    text += "\n";
  }
  return text;
}

}  // namespace simflow::cli
