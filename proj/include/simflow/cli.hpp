#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "simflow/approximators.hpp"
#include "simflow/model.hpp"
#include "simflow/rng.hpp"

namespace simflow::cli {

using json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1.0";

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitRuntime = 3 };

/// Sectioned key-value configuration ([model], [approximator], [pipeline], [output]).
/// Flags override file values.
class RunConfig {
 public:
  std::string command;

  void set(const std::string& section, const std::string& key, const std::string& value);
  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::string require(const std::string& section, const std::string& key) const;

  std::string text(const std::string& section, const std::string& key, const std::string& fallback) const;
  double number(const std::string& section, const std::string& key, double fallback) const;
  std::size_t count(const std::string& section, const std::string& key, std::size_t fallback) const;
  std::vector<double> numbers(const std::string& section, const std::string& key) const;
  std::vector<std::string> list(const std::string& section, const std::string& key, char sep = ',') const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const noexcept { return sections_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

/// INI text: `[section]` headers and `key = value` lines; `;` starts a comment.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

double parse_number(const std::string& text, const std::string& what);
std::vector<double> parse_numbers(const std::string& text, const std::string& what, char sep = ',');
std::vector<std::string> split(const std::string& text, char sep);
std::string trim(const std::string& text);

/// Model from the [model] section: `name` plus numeric hyperparameters.
ModelSpec model_spec(const RunConfig& config);
/// `name:key=value,key=value`.
ModelSpec parse_model_spec(const std::string& text);
/// Approximator from the [approximator] section (kind = exact | perturbed | rwm | abc).
Approximator make_approximator(const RunConfig& config, std::size_t draws);

struct SeedChoice {
  Seed root = 0;
  std::string source;  // flag/config, SIMFLOW_SEED, or default
};

SeedChoice resolve_seed(const RunConfig& config);

/// Description of the streams a command derives from the root seed.
json seed_plan(const std::string& command, Seed root);

/// Required keys per subcommand, checked before any simulation.
void validate_config(const RunConfig& config);

struct OutputFile {
  std::string name;
  std::string content;
};

struct CommandOutput {
  json results = json::object();
  std::vector<OutputFile> files;
  std::vector<std::string> warnings;
};

/// Runs one pipeline subcommand. Throws on failure; a partial result may be left in `partial`.
CommandOutput execute(const RunConfig& config, Seed seed, json& partial);

json config_to_json(const RunConfig& config);

/// Serialized report: two-space indentation, keys sorted, doubles in shortest round-trip form.
std::string dump_report(const json& report);

struct Figure {
  std::string filename;
  std::string svg;
};

/// SVG panels for a report. Unknown or empty payloads are skipped with a warning.
std::vector<Figure> render_figures(const json& report, std::vector<std::string>& warnings);

/// Entry point of the `simflow` executable.
int run(int argc, char** argv);

}  // namespace simflow::cli
