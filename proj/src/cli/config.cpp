#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "simflow/cli.hpp"
#include "simflow/errors.hpp"
#include "simflow/statistic.hpp"

namespace simflow::cli {

void RunConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = value;
}

bool RunConfig::has(const std::string& section, const std::string& key) const { return get(section, key).has_value(); }

std::optional<std::string> RunConfig::get(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return std::nullopt;
  auto k = s->second.find(key);
  if (k == s->second.end() || k->second.empty()) return std::nullopt;
  return k->second;
}

std::string RunConfig::require(const std::string& section, const std::string& key) const {
  auto v = get(section, key);
  if (!v) throw ValidationError(fmt::format("'{}' requires {}.{}", command, section, key));
  return *v;
}

std::string RunConfig::text(const std::string& section, const std::string& key, const std::string& fallback) const {
  return get(section, key).value_or(fallback);
}

double RunConfig::number(const std::string& section, const std::string& key, double fallback) const {
  auto v = get(section, key);
  return v ? parse_number(*v, section + "." + key) : fallback;
}

std::size_t RunConfig::count(const std::string& section, const std::string& key, std::size_t fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  const double d = parse_number(*v, section + "." + key);
  if (!(d >= 0.0) || d != std::floor(d)) throw ValidationError(fmt::format("{}.{} must be a count", section, key));
  return static_cast<std::size_t>(d);
}

std::vector<double> RunConfig::numbers(const std::string& section, const std::string& key) const {
  return parse_numbers(require(section, key), section + "." + key);
}

std::vector<std::string> RunConfig::list(const std::string& section, const std::string& key, char sep) const {
  auto v = get(section, key);
  if (!v) return {};
  return split(*v, sep);
}

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) throw ValidationError(fmt::format("{}: '{}' is not a number", what, text));
  return v;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& what, char sep) {
  std::vector<double> out;
  for (const auto& item : split(text, sep)) out.push_back(parse_number(item, what));
  if (out.empty()) throw ValidationError(what + ": expected a list of numbers");
  return out;
}

RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(fmt::format("config line {}: {}", e.line(), e.message()));
  }
  RunConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ValidationError(fmt::format("config key '{}' lies outside any section", section));
    for (const auto& [key, value] : body) config.set(section, key, trim(value.data()));
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

ModelSpec model_spec(const RunConfig& config) {
  ModelSpec spec;
  spec.name = config.require("model", "name");
  auto it = config.sections().find("model");
  for (const auto& [key, value] : it->second) {
    if (key == "name") continue;
    spec.params[key] = parse_number(value, "model." + key);
  }
  return spec;
}

ModelSpec parse_model_spec(const std::string& text) {
  ModelSpec spec;
  const auto colon = text.find(':');
  spec.name = trim(text.substr(0, colon));
  if (colon != std::string::npos) {
    for (const auto& kv : split(text.substr(colon + 1), ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ValidationError("model spec expects key=value, got " + kv);
      spec.params[trim(kv.substr(0, eq))] = parse_number(kv.substr(eq + 1), spec.name);
    }
  }
  if (spec.name.empty()) throw ValidationError("empty model name in '" + text + "'");
  return spec;
}

Approximator make_approximator(const RunConfig& config, std::size_t draws) {
  const std::string kind = config.require("approximator", "kind");
  if (kind == "exact" || kind == "exact_conjugate") return Approximator::exact_conjugate(draws);
  if (kind == "perturbed" || kind == "perturbed_conjugate") {
    return Approximator::perturbed_conjugate(
        {config.number("approximator", "mean_shift", 0.0), config.number("approximator", "sd_scale", 1.0)}, draws);
  }
  if (kind == "rwm" || kind == "random_walk_metropolis") {
    RwmConfig rwm;
    rwm.chains = config.count("approximator", "chains", rwm.chains);
    rwm.warmup = config.count("approximator", "warmup", rwm.warmup);
    rwm.thin = config.count("approximator", "thin", rwm.thin);
    rwm.step_sd = config.number("approximator", "step_sd", rwm.step_sd);
    return Approximator::random_walk_metropolis(rwm, draws);
  }
  if (kind == "abc" || kind == "abc_rejection") {
    AbcConfig abc{make_discrepancy(config.text("approximator", "distance", "abs:mean")), std::nullopt, std::nullopt,
                  config.count("approximator", "max_proposals", 1'000'000)};
    if (config.has("approximator", "tolerance")) abc.tolerance = config.number("approximator", "tolerance", 0.0);
    if (config.has("approximator", "quantile")) abc.acceptance_quantile = config.number("approximator", "quantile", 0.0);
    abc.validate();
    return Approximator::abc_rejection(abc, draws);
  }
  throw ValidationError("unknown approximator kind '" + kind + "' (exact, perturbed, rwm, abc)");
}

SeedChoice resolve_seed(const RunConfig& config) {
  auto parse = [](const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 0);
    if (t.empty() || t[0] == '-' || end != t.c_str() + t.size() || errno == ERANGE) {
      throw ValidationError(fmt::format("{}: '{}' is not a 64-bit unsigned seed", what, text));
    }
    return static_cast<Seed>(v);
  };
  if (auto v = config.get("pipeline", "seed")) return {parse(*v, "pipeline.seed"), "config"};
  if (const char* env = std::getenv("SIMFLOW_SEED"); env && *env) return {parse(env, "SIMFLOW_SEED"), "SIMFLOW_SEED"};
  return {0, "default"};
}

json seed_plan(const std::string& command, Seed root) {
  json plan;
  plan["root"] = root;
  std::map<std::string, std::string> streams;
  if (command == "sbc") {
    streams = {{"theta*", "derive(root, {s, 0})"},
               {"y", "derive(root, {s, 1})"},
               {"approximator", "derive(root, {s, 2})"},
               {"ties", "derive(root, {s, 3, target})"}};
  } else if (command == "post-sbc") {
    streams = {{"theta'", "approximator draws with derive(root, 0)"},
               {"y'", "derive(root, {s, 1})"},
               {"approximator", "derive(root, {s, 2})"},
               {"ties", "derive(root, {s, 3, target})"}};
  } else if (command == "freq-calibrate" || command == "accuracy" || command == "prior-check") {
    streams = {{"simulation", "derive(root, s)"}};
  } else if (command == "power") {
    streams = {{"null", "derive(derive(root, 0), {i, attempt})"}, {"alternative", "derive(root, {1, s})"},
               {"ties", "derive(root, {2, s})"}};
  } else if (command == "test") {
    streams = {{"observed", "derive(root, 2) when simulated"}, {"null", "derive(derive(root, 0), {i, attempt})"},
               {"ties", "derive(root, 1)"}};
  } else if (command == "ppc") {
    streams = {{"posterior", "derive(root, 3)"}, {"replications", "derive(root, {0 or 1, s})"},
               {"ties", "derive(root, 1 or 2)"}};
  } else if (command == "elicit") {
    streams = {{"simulation", "derive(root, i) for every lambda (common random numbers)"}};
  } else if (command == "abc") {
    streams = {{"proposal", "derive(root, i)"}};
  } else if (command == "compare") {
    streams = {{"model l, draw s", "derive(derive(root, l), s)"}};
  } else if (command == "sensitivity") {
    streams = {{"cell", "derive(root, cell)"}};
  }
  plan["streams"] = streams;
  json first = json::array();
  for (std::uint64_t s = 0; s < 3; ++s) {
    first.push_back({{"index", s}, {"seed", derive_seed(root, s)}});
  }
  plan["first_derived"] = first;
  return plan;
}

void validate_config(const RunConfig& config) {
  const std::string& c = config.command;
  auto need = [&](const char* section, const char* key) { (void)config.require(section, key); };
  if (c != "compare") need("model", "name");
  if (c == "sbc" || c == "post-sbc") need("approximator", "kind");
  if (c == "freq-calibrate" || c == "accuracy") need("pipeline", "estimator");
  if (c == "power" || c == "test" || c == "prior-check" || c == "ppc") need("pipeline", "statistic");
  if (c == "power") need("pipeline", "theta");
  if (c == "test" && !config.has("pipeline", "data") && !config.has("pipeline", "theta_obs")) {
    throw ValidationError("'test' requires pipeline.data or pipeline.theta_obs");
  }
  if (c == "ppc") {
    need("pipeline", "data");
    const auto mode = config.text("pipeline", "mode", "plugin");
    if (mode == "plugin") {
      need("pipeline", "theta_hat");
    } else if (mode == "posterior") {
      need("approximator", "kind");
    } else {
      throw ValidationError("pipeline.mode must be plugin or posterior");
    }
  }
  if (c == "prior-check") {
    need("pipeline", "region_lower");
    need("pipeline", "region_upper");
  }
  if (c == "elicit") {
    need("pipeline", "lambda_keys");
    need("pipeline", "lambda0");
    need("pipeline", "targets");
    need("pipeline", "expert");
  }
  if (c == "abc") {
    need("pipeline", "data");
    if (!config.has("approximator", "tolerance") && !config.has("approximator", "quantile")) {
      throw ValidationError("'abc' requires approximator.tolerance or approximator.quantile");
    }
  }
  if (c == "compare") {
    need("pipeline", "models");
    need("pipeline", "data");
  }
  if (c == "sensitivity") need("pipeline", "grid");

  // Parse everything that can be parsed without simulating.
  if (config.has("model", "name")) (void)make_model(model_spec(config));
  if (config.has("approximator", "kind")) (void)make_approximator(config, 1);
  (void)resolve_seed(config);
}

json config_to_json(const RunConfig& config) {
  json out = json::object();
  for (const auto& [section, body] : config.sections()) {
    for (const auto& [key, value] : body) out[section][key] = value;
  }
  return out;
}

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

}  // namespace simflow::cli
