#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "report.hpp"
#include "simflow/calibration.hpp"
#include "simflow/cli.hpp"
#include "simflow/compare.hpp"
#include "simflow/elicitation.hpp"
#include "simflow/errors.hpp"
#include "simflow/parallel.hpp"
#include "simflow/predictive.hpp"
#include "simflow/simtest.hpp"
#include "simflow/summary.hpp"

namespace simflow::cli {
namespace {

namespace fs = std::filesystem;

ModelPtr model_of(const RunConfig& config) { return make_model(model_spec(config)); }

Dataset data_of(const RunConfig& config) { return read_dataset_csv(config.require("pipeline", "data")); }

std::vector<double> theta_of(const RunConfig& config, const std::string& key, const Model& model) {
  if (config.has("pipeline", key)) return config.numbers("pipeline", key);
  auto fixed = model.fixed_theta();
  if (fixed.empty()) throw ValidationError(fmt::format("'{}' requires pipeline.{}", config.command, key));
  return fixed;
}

ParamSource source_of(const RunConfig& config, const std::string& key, const ModelPtr& model) {
  if (config.text("pipeline", key, "") == "prior") {
    if (!model->capabilities().prior) throw CapabilityError(fmt::format("model '{}' has no prior", model->name()));
    return ParamSource::from_prior(model);
  }
  auto theta = theta_of(config, key, *model);
  if (theta.size() != model->param_dim() || !model->in_support(theta)) {
    throw DomainError(fmt::format("pipeline.{} lies outside the domain of '{}'", key, model->name()));
  }
  return ParamSource::at(std::move(theta));
}

std::vector<ParamStatistic> targets_of(const RunConfig& config) {
  std::vector<ParamStatistic> out;
  for (const auto& name : config.list("pipeline", "targets")) out.push_back(make_param_statistic(name));
  return out;
}

CommandOutput cmd_sbc(const RunConfig& config, Seed seed) {
  const auto model = model_of(config);
  SbcConfig cfg;
  cfg.s = config.count("pipeline", "S", 1000);
  cfg.m = config.count("pipeline", "M", 99);
  cfg.targets = targets_of(config);
  cfg.seed = seed;
  cfg.bins = config.count("pipeline", "bins", kDefaultBins);
  cfg.coverage = config.number("pipeline", "coverage", kDefaultCoverage);
  const auto result = run_sbc(*model, make_approximator(config, cfg.m), cfg);
  CommandOutput out;
  out.results = to_json(result);
  out.warnings = result.warnings;
  out.files.push_back({"pvalues.csv", pvalues_csv(result)});
  return out;
}

CommandOutput cmd_post_sbc(const RunConfig& config, Seed seed) {
  const auto model = model_of(config);
  const Dataset y = config.has("pipeline", "data") ? data_of(config) : Dataset{};
  PosteriorSbcConfig cfg;
  cfg.s = config.count("pipeline", "S", 500);
  cfg.d = config.count("pipeline", "D", 99);
  cfg.n_rep = config.count("pipeline", "n_rep", 0);
  cfg.targets = targets_of(config);
  cfg.seed = seed;
  cfg.bins = config.count("pipeline", "bins", kDefaultBins);
  cfg.coverage = config.number("pipeline", "coverage", kDefaultCoverage);
  const auto result = run_posterior_sbc(*model, make_approximator(config, cfg.d), y, cfg);
  CommandOutput out;
  out.results = to_json(result);
  out.warnings = result.warnings;
  out.files.push_back({"pvalues.csv", pvalues_csv(result)});
  return out;
}

CommandOutput cmd_freq_calibrate(const RunConfig& config, Seed seed) {
  const auto model = model_of(config);
  const auto estimator = make_estimator(config.require("pipeline", "estimator"), model);
  const auto theta = theta_of(config, "theta", *model);
  const auto result = run_frequentist_calibration(*model, theta, estimator, config.count("pipeline", "S", 1000), seed,
                                                  config.number("pipeline", "interval", 0.9),
                                                  config.count("pipeline", "bins", kDefaultBins));
  CommandOutput out;
  out.results = to_json(result);
  out.results["theta"] = theta;
  out.warnings = result.warnings;
  out.files.push_back({"pvalues.csv", pvalues_csv(result)});
  return out;
}

CommandOutput cmd_power(const RunConfig& config, Seed seed) {
  const auto model = model_of(config);
  PowerTest test;
  test.statistic = make_data_statistic(config.require("pipeline", "statistic"));
  test.side = parse_side(config.text("pipeline", "side", "upper"));
  test.null_draws = config.count("pipeline", "null_draws", 10'000);
  const auto theta_star = source_of(config, "theta", model);
  const auto theta_null = source_of(config, "theta0", model);
  const std::string null_kind = config.text("pipeline", "null", "simulate");
  const double n = static_cast<double>(model->data_shape().n_per_group);
  if (null_kind == "z") {
    if (model->name() != "normal-normal" || test.statistic.name != "mean" || theta_null.prior) {
      throw ValidationError("null = z needs normal-normal, statistic = mean and a fixed theta0");
    }
    test.analytic_null = Distribution::normal(theta_null.fixed[0], model->spec().params.at("sigma") / std::sqrt(n));
  } else if (null_kind == "t") {
    if (test.statistic.name != "pooled_t" || model->data_shape().groups != 2) {
      throw ValidationError("null = t needs statistic = pooled_t on a two-group model");
    }
    test.analytic_null = Distribution::student_t(2.0 * n - 2.0, 0.0, 1.0);
  } else if (null_kind != "simulate") {
    throw ValidationError("pipeline.null must be simulate, z or t");
  }
  const double alpha = config.number("pipeline", "alpha", 0.05);
  const auto result = power_analysis(*model, theta_star, theta_null, test, alpha, config.count("pipeline", "S", 1000), seed);
  CommandOutput out;
  out.results = {{"power", result.power},
                 {"standard_error", result.standard_error},
                 {"alpha", result.alpha},
                 {"statistic", test.statistic.name},
                 {"side", to_string(test.side)},
                 {"null", null_kind},
                 {"pvalues", result.pvalues.values}};
  out.files.push_back({"pvalues.csv", column_csv("p", result.pvalues.values)});
  return out;
}

CommandOutput cmd_accuracy(const RunConfig& config, Seed seed) {
  const auto model = model_of(config);
  const auto estimator = make_estimator(config.require("pipeline", "estimator"), model);
  RunConfig c = config;
  if (!c.has("pipeline", "theta") && model->capabilities().prior) c.set("pipeline", "theta", "prior");
  const auto source = source_of(c, "theta", model);
  const auto distance = parse_distance(config.text("pipeline", "distance", "squared"));
  const auto result = estimator_accuracy(*model, source, estimator, distance, config.count("pipeline", "S", 1000), seed);
  CommandOutput out;
  out.results = {{"estimator", estimator.name},
                 {"distance", config.text("pipeline", "distance", "squared")},
                 {"mean_distance", result.mean_distance},
                 {"mc_se", result.mc_se},
                 {"S", result.s},
                 {"theta", source.prior ? json("prior") : json(source.fixed)}};
  return out;
}

CommandOutput cmd_test(const RunConfig& config, Seed seed) {
  const auto model = model_of(config);
  const auto theta0 = theta_of(config, "theta0", *model);
  const auto stat = make_data_statistic(config.require("pipeline", "statistic"));
  Dataset y;
  if (config.has("pipeline", "data")) {
    y = data_of(config);
  } else {
    y = simulate_data(*model, config.numbers("pipeline", "theta_obs"), derive_seed(seed, 2));
  }
  std::vector<double> alphas{0.01, 0.05, 0.1};
  if (config.has("pipeline", "alphas")) alphas = config.numbers("pipeline", "alphas");
  const auto report = run_simulation_test(*model, theta0, stat, y, parse_side(config.text("pipeline", "side", "two_sided")),
                                          config.count("pipeline", "S", 1000), seed, alphas);
  CommandOutput out;
  out.results = to_json(report);
  out.warnings = report.notes;
  out.files.push_back({"null.csv", column_csv(stat.name, report.null_samples)});
  return out;
}

json overlay_of(const Model& model, const ParamDraws& draws, const Dataset& y, Seed seed) {
  const std::size_t reps = std::min<std::size_t>(200, draws.size());
  const auto sets = posterior_predictive_sample(model, draws, reps, per_group_count(model, y), seed);
  const std::size_t n = y.values().size();
  std::vector<std::vector<double>> by_rank(n);
  for (const auto& d : sets) {
    std::vector<double> v(d.values().begin(), d.values().end());
    if (v.size() != n) return nullptr;
    std::sort(v.begin(), v.end());
    for (std::size_t i = 0; i < n; ++i) by_rank[i].push_back(v[i]);
  }
  std::vector<double> obs(y.values().begin(), y.values().end()), lower(n), upper(n);
  std::sort(obs.begin(), obs.end());
  for (std::size_t i = 0; i < n; ++i) {
    lower[i] = quantile_type7(by_rank[i], 0.05);
    upper[i] = quantile_type7(by_rank[i], 0.95);
  }
  return {{"observed_sorted", obs}, {"lower", lower}, {"upper", upper}};
}

CommandOutput cmd_ppc(const RunConfig& config, Seed seed) {
  const auto model = model_of(config);
  const Dataset y = data_of(config);
  const std::string name = config.require("pipeline", "statistic");
  const std::size_t s = config.count("pipeline", "S", 1000);
  const Side side = parse_side(config.text("pipeline", "side", "lower"));
  const bool discrepancy = name.find(':') != std::string::npos;
  const std::string mode = config.text("pipeline", "mode", "plugin");

  PredictiveResult result;
  ParamDraws draws;
  if (mode == "plugin") {
    const auto theta = config.numbers("pipeline", "theta_hat");
    result = discrepancy ? frequentist_predictive_check(*model, theta, make_discrepancy(name), y, s, seed, side)
                         : frequentist_predictive_check(*model, theta, make_data_statistic(name), y, s, seed, side);
    draws = ParamDraws(theta.size(), DrawSource::posterior);
    for (std::size_t i = 0; i < 200; ++i) draws.push_back(theta);
  } else {
    draws = approximate(make_approximator(config, config.count("pipeline", "M", s)), *model, y, derive_seed(seed, 3));
    if (discrepancy) {
      const auto stat = make_discrepancy(name);
      const auto reps = posterior_predictive_sample(*model, draws, s, per_group_count(*model, y), seed);
      std::vector<double> t(s);
      for (std::size_t i = 0; i < s; ++i) t[i] = stat(y, reps[i]);
      result.side = side;
      result.observed_stat = stat(y, y);
      if (s > 1) result.ppp = posterior_predictive_pvalue(*result.observed_stat, t, side, derive_seed(seed, 2));
      result.replication_stats = std::move(t);
    } else {
      result = posterior_predictive_check(*model, draws, make_data_statistic(name), y, s, seed, side);
    }
  }
  CommandOutput out;
  out.results = to_json(result);
  out.results["statistic"] = name;
  out.results["mode"] = mode;
  if (auto overlay = overlay_of(*model, draws, y, derive_seed(seed, 4)); !overlay.is_null()) {
    out.results["overlay"] = overlay;
  }
  out.files.push_back({"replications.csv", column_csv(name, result.replication_stats)});
  return out;
}

CommandOutput cmd_prior_check(const RunConfig& config, Seed seed) {
  const auto model = model_of(config);
  const PlausibleRegion region{config.number("pipeline", "region_lower", 0.0), config.number("pipeline", "region_upper", 0.0)};
  const std::string name = config.require("pipeline", "statistic");
  const auto result = prior_pushforward_check(*model, make_data_statistic(name), region,
                                              config.count("pipeline", "S", 1000), seed);
  CommandOutput out;
  out.results = to_json(result);
  out.results["statistic"] = name;
  out.results["region"] = {{"lower", region.lower}, {"upper", region.upper}};
  out.files.push_back({"replications.csv", column_csv(name, result.replication_stats)});
  return out;
}

std::vector<double> read_expert_stats(const fs::path& path, const ElicitationProblem& problem,
                                      const std::vector<std::string>& target_names) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read expert statistics " + path.string());
  std::string line;
  std::getline(in, line);
  const auto header = split_csv_line(line);
  if (header != std::vector<std::string>{"target", "probe", "value"}) {
    throw ValidationError("expert statistics need the header target,probe,value");
  }
  std::map<std::pair<std::string, double>, double> table;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 3) throw ValidationError("expert statistics: expected 3 columns in '" + line + "'");
    table[{cells[0], parse_number(cells[1], "probe")}] = parse_number(cells[2], "value");
  }
  std::vector<double> out;
  for (const auto& t : target_names) {
    for (double p : problem.probes) {
      auto it = table.find({t, p});
      if (it == table.end()) throw ValidationError(fmt::format("expert statistics lack target {} at probe {}", t, p));
      out.push_back(it->second);
    }
  }
  return out;
}

CommandOutput cmd_elicit(const RunConfig& config, Seed seed) {
  ElicitationProblem problem;
  const auto spec = model_spec(config);
  problem.model = spec.name;
  problem.lambda_keys = config.list("pipeline", "lambda_keys");
  problem.fixed_params = spec.params;
  for (const auto& k : problem.lambda_keys) problem.fixed_params.erase(k);
  const auto target_names = config.list("pipeline", "targets");
  for (const auto& t : target_names) problem.targets.push_back(make_data_statistic(t));
  if (config.has("pipeline", "probes")) problem.probes = config.numbers("pipeline", "probes");
  problem.sims_per_eval = config.count("pipeline", "sims", 10'000);
  problem.jitter = config.number("pipeline", "jitter", 0.0);
  problem.expert_stats = read_expert_stats(config.require("pipeline", "expert"), problem, target_names);
  const auto lambda0 = config.numbers("pipeline", "lambda0");
  const auto result = elicit_prior(problem, lambda0, config.number("pipeline", "tolerance", 1e-3),
                                   config.count("pipeline", "max_iter", 200), seed);
  json lambda = json::object();
  for (std::size_t j = 0; j < problem.lambda_keys.size(); ++j) lambda[problem.lambda_keys[j]] = result.lambda_star[j];
  CommandOutput out;
  out.results = {{"lambda_star", lambda},
                 {"loss", result.loss},
                 {"loss_function", "squared_error_sum"},
                 {"loss_trace", result.loss_trace},
                 {"converged", result.converged},
                 {"iterations", result.iterations},
                 {"evaluations", result.evaluations},
                 {"identifiability", result.identifiability_note}};
  if (!result.converged) out.warnings.push_back("Nelder-Mead stopped at max_iter before converging");
  return out;
}

CommandOutput cmd_abc(const RunConfig& config, Seed seed) {
  const auto model = model_of(config);
  const Dataset y = data_of(config);
  AbcConfig abc{make_discrepancy(config.text("approximator", "distance", "abs:mean")), std::nullopt, std::nullopt,
                config.count("approximator", "max_proposals", 1'000'000)};
  if (config.has("approximator", "tolerance")) abc.tolerance = config.number("approximator", "tolerance", 0.0);
  if (config.has("approximator", "quantile")) abc.acceptance_quantile = config.number("approximator", "quantile", 0.0);
  abc.validate();
  const auto result = abc_rejection(*model, y, abc, config.count("pipeline", "M", 1000), seed);
  CommandOutput out;
  out.results = {{"acceptance_rate", result.acceptance_rate},
                 {"proposals", result.proposals},
                 {"accepted", result.accepted},
                 {"epsilon", result.epsilon},
                 {"distance", abc.distance.name},
                 {"summary", summarize_draws(result.draws)}};
  out.files.push_back({"draws.csv", draws_csv(result.draws)});
  return out;
}

CommandOutput cmd_compare(const RunConfig& config, Seed seed) {
  ModelSet set;
  for (const auto& text : config.list("pipeline", "models", ';')) set.models.push_back(make_model(parse_model_spec(text)));
  if (config.has("pipeline", "prior_probs")) {
    set.prior_probs = config.numbers("pipeline", "prior_probs");
  } else {
    set.prior_probs.assign(set.models.size(), 1.0 / static_cast<double>(set.models.size()));
  }
  const auto result = posterior_model_probs(set, data_of(config), config.count("pipeline", "S", 100'000), seed);
  json evidence = json::array();
  for (const auto& e : result.evidence) evidence.push_back(to_json(e));
  CommandOutput out;
  out.results = {{"models", config.list("pipeline", "models", ';')},
                 {"prior_probs", set.prior_probs},
                 {"probabilities", result.probabilities},
                 {"evidence", evidence}};
  json bf = json::array();
  for (const auto& row : result.log_bayes_factors) {
    json r = json::array();
    for (double v : row) r.push_back(std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : "-inf"));
    bf.push_back(r);
  }
  out.results["log_bayes_factors"] = bf;
  std::string csv = "model,prior_prob,log_evidence,mc_se,probability\n";
  const auto names = config.list("pipeline", "models", ';');
  for (std::size_t l = 0; l < names.size(); ++l) {
    csv += fmt::format("\"{}\",{},{},{},{}\n", names[l], set.prior_probs[l], result.evidence[l].log_evidence,
                       result.evidence[l].mc_se, result.probabilities[l]);
  }
  out.files.push_back({"models.csv", csv});
  for (const auto& e : result.evidence) {
    if (!e.diagnostic.empty()) out.warnings.push_back(e.diagnostic);
  }
  return out;
}

CommandOutput cmd_sensitivity(const RunConfig& config, Seed seed) {
  std::map<std::string, std::vector<double>> axes;
  for (const auto& axis : config.list("pipeline", "grid", ';')) {
    const auto eq = axis.find('=');
    if (eq == std::string::npos) throw ValidationError("pipeline.grid expects key=v1,v2;key2=...");
    axes[trim(axis.substr(0, eq))] = parse_numbers(axis.substr(eq + 1), "pipeline.grid");
  }
  const std::string target = config.text("pipeline", "target", "posterior");
  if (target != "posterior" && target != "sbc" && target != "evidence") {
    throw ValidationError("pipeline.target must be posterior, sbc or evidence");
  }
  const Dataset y = target == "sbc" ? Dataset{} : data_of(config);

  auto pipeline = [&](const SweepPoint& point, Seed cell_seed) -> SweepOutputs {
    RunConfig c = config;
    for (const auto& [key, value] : point) {
      const auto dot = key.find('.');
      if (dot == std::string::npos) {
        c.set("model", key, fmt::format("{}", value));
      } else {
        c.set(key.substr(0, dot), key.substr(dot + 1), fmt::format("{}", value));
      }
    }
    const auto model = model_of(c);
    if (target == "posterior") {
      if (c.has("approximator", "kind")) {
        const auto draws = approximate(make_approximator(c, c.count("pipeline", "M", 1000)), *model, y, cell_seed);
        const auto col = draws.column(0);
        return {{"posterior_mean", mean(col)}, {"posterior_sd", sd(col)}};
      }
      const auto post = analytic_posterior(*model, y);
      return {{"posterior_mean", post.mean()}, {"posterior_sd", post.sd()}};
    }
    if (target == "sbc") {
      SbcConfig cfg;
      cfg.s = c.count("pipeline", "S", 200);
      cfg.m = c.count("pipeline", "M", 99);
      cfg.seed = cell_seed;
      const auto r = run_sbc(*model, make_approximator(c, cfg.m), cfg);
      const auto& v = r.targets.front().verdict;
      return {{"chi2_pvalue", v.chi2_pvalue}, {"ks_pvalue", v.ks_pvalue}, {"ecdf_inside", v.ecdf_inside ? 1.0 : 0.0}};
    }
    const auto e = marginal_likelihood_mc(*model, y, c.count("pipeline", "S", 10'000), cell_seed);
    return {{"log_evidence", e.log_evidence}, {"mc_se", e.mc_se}};
  };

  const auto rows = sensitivity_sweep(pipeline, grid_product(axes), seed);
  CommandOutput out;
  json table = json::array();
  for (const auto& row : rows) {
    json r{{"point", row.point}, {"seed", row.seed}, {"outputs", row.outputs}};
    r["error"] = row.error ? json(*row.error) : json(nullptr);
    if (row.error) out.warnings.push_back(fmt::format("sweep cell failed: {}", *row.error));
    table.push_back(std::move(r));
  }
  out.results = {{"target", target}, {"rows", table}};
  out.files.push_back({"sweep.csv", format_sweep_csv(rows)});
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

bool is_validation(const std::exception& e) {
  return dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const CapabilityError*>(&e) ||
         dynamic_cast<const DomainError*>(&e);
}

struct Flags {
  std::string config_path, model, approximator, data, out_dir;
  std::optional<std::size_t> s, m, d;
  std::optional<std::string> seed;
  std::vector<std::string> params, sets;
  std::size_t threads = 0;
  bool dry_run = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config_path, "INI config file");
  sub->add_option("--model", f.model, "Model name");
  sub->add_option("--approximator", f.approximator, "exact, perturbed, rwm or abc");
  sub->add_option("--S", f.s, "Outer simulations");
  sub->add_option("--M", f.m, "Draws per dataset");
  sub->add_option("--D", f.d, "Augmented draws (post-sbc)");
  sub->add_option("--seed", f.seed, "Root seed (falls back to SIMFLOW_SEED)");
  sub->add_option("--param", f.params, "Model hyperparameter key=value");
  sub->add_option("--set", f.sets, "Any config value section.key=value");
  sub->add_option("--data", f.data, "Observed data CSV");
  sub->add_option("--out", f.out_dir, "Output directory");
  sub->add_option("--threads", f.threads, "Worker threads (0 = all cores)");
  sub->add_flag("--dry-run", f.dry_run, "Validate and print the seed plan");
}

RunConfig build_config(const std::string& command, const Flags& f) {
  RunConfig config = f.config_path.empty() ? RunConfig{} : load_config(f.config_path);
  config.command = command;
  if (!f.model.empty()) config.set("model", "name", f.model);
  if (!f.approximator.empty()) config.set("approximator", "kind", f.approximator);
  if (f.s) config.set("pipeline", "S", std::to_string(*f.s));
  if (f.m) config.set("pipeline", "M", std::to_string(*f.m));
  if (f.d) config.set("pipeline", "D", std::to_string(*f.d));
  if (f.seed) config.set("pipeline", "seed", *f.seed);
  if (!f.data.empty()) config.set("pipeline", "data", f.data);
  if (!f.out_dir.empty()) config.set("output", "dir", f.out_dir);
  for (const auto& kv : f.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--param expects key=value, got " + kv);
    config.set("model", trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('='), dot = kv.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw ValidationError("--set expects section.key=value, got " + kv);
    }
    config.set(trim(kv.substr(0, dot)), trim(kv.substr(dot + 1, eq - dot - 1)), trim(kv.substr(eq + 1)));
  }
  return config;
}

int run_pipeline(const std::string& command, const Flags& flags) {
  RunConfig config;
  SeedChoice seed;
  try {
    config = build_config(command, flags);
    validate_config(config);
    seed = resolve_seed(config);
  } catch (const std::exception& e) {
    std::cerr << "simflow " << command << ": " << e.what() << "\n";
    return kExitValidation;
  }
  set_thread_count(flags.threads);

  if (flags.dry_run) {
    json plan{{"command", command}, {"config", config_to_json(config)}, {"seed_source", seed.source},
              {"seed_plan", seed_plan(command, seed.root)}};
    std::cout << dump_report(plan);
    return kExitOk;
  }

  const fs::path out_dir = config.text("output", "dir", "simflow-out");
  const auto formats = config.has("output", "formats") ? config.list("output", "formats") : std::vector<std::string>{"json", "csv", "svg"};
  auto wants = [&](const std::string& f) { return std::find(formats.begin(), formats.end(), f) != formats.end(); };

  json report{{"schema_version", kSchemaVersion},
              {"command", command},
              {"config", config_to_json(config)},
              {"seeds", {{"root", seed.root}, {"source", seed.source}, {"plan", seed_plan(command, seed.root)}}}};
  json partial = json::object();
  CommandOutput output;
  int code = kExitOk;
  const auto start = std::chrono::steady_clock::now();
  try {
    output = execute(config, seed.root, partial);
    report["status"] = "ok";
    report["results"] = output.results;
  } catch (const BudgetError& e) {
    std::cerr << "simflow " << command << ": " << e.what() << "\n";
    report["status"] = "error";
    json err{{"type", "budget"},
             {"message", e.what()},
             {"acceptance_rate", e.acceptance_rate()},
             {"accepted", e.accepted()},
             {"proposals", e.proposals()}};
    if (e.failing_index != static_cast<std::size_t>(-1)) err["failing_index"] = e.failing_index;
    report["error"] = err;
    report["results"] = partial;
    code = kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "simflow " << command << ": " << e.what() << "\n";
    if (is_validation(e)) return kExitValidation;
    report["status"] = "error";
    report["error"] = {{"type", "runtime"}, {"message", e.what()}};
    report["results"] = partial;
    code = kExitRuntime;
  }
  report["warnings"] = output.warnings;
  report["timing"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  try {
    fs::create_directories(out_dir);
    write_file(out_dir / "report.json", dump_report(report));
    if (wants("csv")) {
      for (const auto& f : output.files) write_file(out_dir / f.name, f.content);
    }
    if (wants("svg") && code == kExitOk) {
      std::vector<std::string> warnings;
      for (const auto& fig : render_figures(report, warnings)) write_file(out_dir / fig.filename, fig.svg);
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "simflow " << command << ": " << e.what() << "\n";
    return kExitRuntime;
  }
  for (const auto& w : output.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << (out_dir / "report.json").string() << "\n";
  return code;
}

int run_render(const std::string& report_path, const std::string& out_dir) {
  json report;
  try {
    std::ifstream in(report_path);
    if (!in) throw ValidationError("cannot read report " + report_path);
    report = json::parse(in);
  } catch (const std::exception& e) {
    std::cerr << "simflow render: " << e.what() << "\n";
    return kExitValidation;
  }
  std::vector<std::string> warnings;
  const auto figures = render_figures(report, warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  try {
    const fs::path dir = out_dir.empty() ? fs::path(report_path).parent_path() : fs::path(out_dir);
    if (!dir.empty()) fs::create_directories(dir);
    for (const auto& fig : figures) {
      write_file(dir / fig.filename, fig.svg);
      std::cout << (dir / fig.filename).string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "simflow render: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

CommandOutput execute(const RunConfig& config, Seed seed, json& partial) {
  (void)partial;
  const auto& c = config.command;
  if (c == "sbc") return cmd_sbc(config, seed);
  if (c == "post-sbc") return cmd_post_sbc(config, seed);
  if (c == "freq-calibrate") return cmd_freq_calibrate(config, seed);
  if (c == "power") return cmd_power(config, seed);
  if (c == "accuracy") return cmd_accuracy(config, seed);
  if (c == "test") return cmd_test(config, seed);
  if (c == "ppc") return cmd_ppc(config, seed);
  if (c == "prior-check") return cmd_prior_check(config, seed);
  if (c == "elicit") return cmd_elicit(config, seed);
  if (c == "abc") return cmd_abc(config, seed);
  if (c == "compare") return cmd_compare(config, seed);
  if (c == "sensitivity") return cmd_sensitivity(config, seed);
  throw ValidationError("unknown command " + c);
}

int run(int argc, char** argv) {
  CLI::App app{"simflow: simulation-based calibration, testing and checking"};
  app.require_subcommand(1);
  const std::vector<std::pair<std::string, std::string>> commands{
      {"sbc", "Simulation-based calibration of a posterior approximator"},
      {"post-sbc", "Posterior SBC around observed data"},
      {"freq-calibrate", "Calibration of an estimator's sampling distribution"},
      {"power", "Power analysis of a test"},
      {"accuracy", "Point-estimator accuracy (MSE or MAE)"},
      {"test", "Simulation-based hypothesis test"},
      {"ppc", "Predictive check of observed data"},
      {"prior-check", "Prior pushforward check against a plausible region"},
      {"elicit", "Fit prior hyperparameters to expert statistics"},
      {"abc", "Rejection ABC"},
      {"compare", "Posterior model probabilities from Monte Carlo evidence"},
      {"sensitivity", "Re-run a pipeline over a hyperparameter grid"}};
  Flags flags;
  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const auto& [name, description] : commands) {
    auto* sub = app.add_subcommand(name, description);
    add_common(sub, flags);
    subs.emplace_back(name, sub);
  }
  std::string report_path, render_out;
  auto* render = app.add_subcommand("render", "Render SVG figures from a report");
  render->add_option("--report", report_path, "Report JSON")->required();
  render->add_option("--out", render_out, "Output directory (default: next to the report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }
  if (render->parsed()) return run_render(report_path, render_out);
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) return run_pipeline(name, flags);
  }
  return kExitValidation;
}

}  // namespace simflow::cli
