#include <catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "simflow/cli.hpp"
#include "simflow/errors.hpp"

using namespace simflow;
using namespace simflow::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("simflow-test-cli-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, std::string* out = nullptr) {
  const std::string cmd = std::string(SIMFLOW_BIN) + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::string text;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) text += buf;
  const int status = ::pclose(pipe);
  if (out) *out = text;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string without_timing(const std::string& report) {
  std::istringstream in(report);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.find("\"timing\":") == std::string::npos) out += line + "\n";
  }
  return out;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    files[name] = name == "report.json" ? without_timing(slurp(e.path())) : slurp(e.path());
  }
  return files;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config("[model]\nname = normal-normal\ntau0 = 2\n; comment\n[pipeline]\nS = 50\nseed = 0x10\n");
  CHECK(c.text("model", "name", "") == "normal-normal");
  CHECK(c.number("model", "tau0", 0) == 2.0);
  CHECK(c.count("pipeline", "S", 0) == 50);
  CHECK(resolve_seed(c).root == 16);
  CHECK(resolve_seed(c).source == "config");
  CHECK_THROWS_AS(c.count("model", "name", 0), ValidationError);
  CHECK_THROWS_AS(parse_config("[a]\nb\n"), ValidationError);
  const auto spec = parse_model_spec("beta-binomial: a=2, b=3");
  CHECK(spec.name == "beta-binomial");
  CHECK(spec.params.at("b") == 3.0);
}

TEST_CASE("seed resolution falls back to the environment") {
  RunConfig c;
  ::unsetenv("SIMFLOW_SEED");
  CHECK(resolve_seed(c).source == "default");
  ::setenv("SIMFLOW_SEED", "77", 1);
  CHECK(resolve_seed(c).root == 77);
  CHECK(resolve_seed(c).source == "SIMFLOW_SEED");
  c.set("pipeline", "seed", "5");
  CHECK(resolve_seed(c).root == 5);
  ::setenv("SIMFLOW_SEED", "-3", 1);
  RunConfig bare;
  CHECK_THROWS_AS(resolve_seed(bare), ValidationError);
  ::unsetenv("SIMFLOW_SEED");
}

TEST_CASE("config validation per command") {
  RunConfig c;
  c.command = "sbc";
  c.set("model", "name", "normal-normal");
  CHECK_THROWS_AS(validate_config(c), ValidationError);
  c.set("approximator", "kind", "exact");
  CHECK_NOTHROW(validate_config(c));
  c.set("approximator", "kind", "variational");
  CHECK_THROWS_AS(validate_config(c), ValidationError);
}

TEST_CASE("sbc happy path") {
  const auto dir = scratch("sbc");
  const int code = run_cli("sbc --model normal-normal --approximator exact --S 200 --M 99 --seed 42 --out " +
                           dir.string());
  REQUIRE(code == kExitOk);
  const auto report = json::parse(slurp(dir / "report.json"));
  CHECK(report["schema_version"] == kSchemaVersion);
  CHECK(report["status"] == "ok");
  CHECK(report["seeds"]["root"] == 42);
  const auto& target = report["results"]["targets"][0];
  CHECK(target["verdict"].contains("chi2_pvalue"));
  CHECK(target["pvalues"].size() == 200);
  CHECK(fs::exists(dir / "pvalues.csv"));
  CHECK(fs::exists(dir / "sbc_theta_0.svg"));
}

TEST_CASE("missing model exits 2 without a report") {
  const auto dir = scratch("missing");
  CHECK(run_cli("sbc --approximator exact --out " + dir.string()) == kExitValidation);
  CHECK_FALSE(fs::exists(dir / "report.json"));
  CHECK(run_cli("sbc --model nope --approximator exact --out " + dir.string()) == kExitValidation);
}

TEST_CASE("ABC budget exhaustion exits 3 with diagnostics") {
  const auto dir = scratch("abc");
  std::ofstream(dir / "y.csv") << "y\n3\n";
  const int code = run_cli("abc --model beta-binomial --data " + (dir / "y.csv").string() +
                           " --M 1000 --set approximator.tolerance=0 --set approximator.distance=abs:sum"
                           " --set approximator.max_proposals=100 --seed 1 --out " + dir.string());
  CHECK(code == kExitRuntime);
  const auto report = json::parse(slurp(dir / "report.json"));
  CHECK(report["status"] == "error");
  CHECK(report["error"]["type"] == "budget");
  CHECK(report["error"].contains("acceptance_rate"));
  CHECK(report["error"]["proposals"] == 100);
}

TEST_CASE("reports and figures are identical across thread counts") {
  const auto dir = scratch("det");
  const std::string args = "sbc --model normal-normal --approximator perturbed --set approximator.sd_scale=0.7"
                           " --S 300 --M 49 --seed 9 --out " + dir.string();
  REQUIRE(run_cli(args + " --threads 1") == kExitOk);
  const auto one = snapshot(dir);
  REQUIRE(run_cli(args + " --threads 3") == kExitOk);
  const auto three = snapshot(dir);
  CHECK(one.size() >= 3);
  CHECK(one == three);
}

TEST_CASE("render reproduces pipeline figures") {
  const auto dir = scratch("render");
  const auto again = scratch("render-again");
  REQUIRE(run_cli("sbc --model beta-binomial --approximator exact --S 100 --M 19 --seed 3 --out " + dir.string()) ==
          kExitOk);
  REQUIRE(run_cli("render --report " + (dir / "report.json").string() + " --out " + again.string()) == kExitOk);
  CHECK(slurp(dir / "sbc_theta_0.svg") == slurp(again / "sbc_theta_0.svg"));
  CHECK(run_cli("render --report " + (dir / "absent.json").string()) == kExitValidation);
}

TEST_CASE("report round trip") {
  const auto dir = scratch("roundtrip");
  REQUIRE(run_cli("power --model normal-normal --param n_obs=25 --set pipeline.statistic=mean --set pipeline.theta=0.5"
                  " --set pipeline.theta0=0 --set pipeline.null=z --S 500 --seed 4 --out " + dir.string()) == kExitOk);
  const auto text = slurp(dir / "report.json");
  CHECK(dump_report(json::parse(text)) == text);
  const auto report = json::parse(text);
  CHECK(report["results"]["power"].get<double>() > 0.6);
}

TEST_CASE("dry run prints the seed plan") {
  std::string out;
  REQUIRE(run_cli("sbc --model normal-normal --approximator exact --seed 5 --dry-run", &out) == kExitOk);
  const auto plan = json::parse(out);
  CHECK(plan["seed_plan"]["root"] == 5);
  CHECK(plan["seed_plan"]["first_derived"][0]["seed"] == derive_seed(5, 0));
}

TEST_CASE("every subcommand runs end to end") {
  const auto dir = scratch("all");
  std::ofstream(dir / "y.csv") << "y\n0.3\n-0.1\n0.8\n0.5\n";
  std::ofstream(dir / "k.csv") << "y\n3\n";
  std::ofstream(dir / "two.csv") << "y,group\n1.2,0\n3.4,0\n0.5,0\n2.2,1\n9.1,1\n4.4,1\n";
  std::ofstream(dir / "expert.csv") << "target,probe,value\nsum,0.1,1\nsum,0.25,2\nsum,0.5,3\nsum,0.75,4\nsum,0.9,6\n";
  const std::string y = (dir / "y.csv").string(), k = (dir / "k.csv").string();
  const std::vector<std::string> runs{
      "post-sbc --model normal-normal --approximator exact --data " + y + " --S 100 --D 19",
      "freq-calibrate --model normal-normal --set pipeline.estimator=sample-mean --set pipeline.theta=0.2 --S 200",
      "accuracy --model normal-normal --set pipeline.estimator=sample-mean --S 200",
      "test --model lognormal-two-group --param n_per_group=3 --data " + (dir / "two.csv").string() +
          " --set pipeline.statistic=pooled_t --set pipeline.side=two_sided --S 200",
      "ppc --model normal-normal --data " + y + " --set pipeline.statistic=max --set pipeline.theta_hat=0.4 --S 100",
      "ppc --model normal-normal --approximator exact --data " + y +
          " --set pipeline.statistic=variance --set pipeline.mode=posterior --S 100",
      "prior-check --model normal-normal --set pipeline.statistic=mean --set pipeline.region_lower=-2"
      " --set pipeline.region_upper=2 --S 200",
      "elicit --model beta-binomial --set pipeline.lambda_keys=a,b --set pipeline.lambda0=1,1"
      " --set pipeline.targets=sum --set pipeline.expert=" + (dir / "expert.csv").string() +
          " --set pipeline.sims=500 --set pipeline.max_iter=20",
      "abc --model beta-binomial --data " + k + " --M 200 --set approximator.tolerance=0"
      " --set approximator.distance=abs:sum",
      "compare --data " + k + " --set \"pipeline.models=beta-binomial:a=1,b=1;beta-binomial:a=2,b=2\" --S 2000",
      "sensitivity --model normal-normal --data " + y + " --set pipeline.grid=tau0=0.5,1,2 --approximator exact",
  };
  for (const auto& args : runs) {
    INFO(args);
    CHECK(run_cli(args + " --seed 1 --out " + dir.string()) == kExitOk);
  }
}

TEST_CASE("figure rendering edge cases") {
  std::vector<std::string> warnings;
  json empty{{"command", "sbc"},
             {"status", "ok"},
             {"results", {{"targets", json::array({{{"name", "theta"}, {"pvalues", json::array()}}})}}}};
  CHECK(render_figures(empty, warnings).empty());
  CHECK(warnings.size() == 1);

  warnings.clear();
  json unknown{{"command", "mystery"}, {"status", "ok"}, {"results", json::object()}};
  CHECK(render_figures(unknown, warnings).empty());
  CHECK(warnings.size() == 1);

  warnings.clear();
  json test{{"command", "test"},
            {"status", "ok"},
            {"results", {{"observed_stat", 1.5}, {"null_samples", {0.1, 0.5, 0.9, 1.2, 0.3}}, {"p_value", 0.0}}}};
  const auto figs = render_figures(test, warnings);
  REQUIRE(figs.size() == 1);
  CHECK(figs[0].svg.rfind("<svg", 0) == 0);
  CHECK(figs[0].svg.find("#d62728") != std::string::npos);  // observed-statistic marker
}
