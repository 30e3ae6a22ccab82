#include "smoothquad/cli.hpp"

#include <catch_amalgamated.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

using namespace smoothquad;
using namespace smoothquad::cli;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "smoothquad");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code = main_entry(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("smoothquad-test-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSmallPrice = R"(experiment: price
name: small
model: {type: gbm, steps: 2, sigma: 0.4}
payoff: {type: call, strike: 100}
method: {name: asgq, budget: 20}
study: {reference: 15.8519}
)";

const char* kSmallStat = R"(experiment: stat-study
name: stat
preset: digital-gbm
model: {steps: 4}
method: {name: rqmc, shifts: 8}
study: {samples: [64, 128, 256]}
)";

}  // namespace

TEST_CASE("config parsing resolves a plan", "[cli]") {
  const auto c = parse_config(kSmallPrice);
  CHECK(c.kind == ExperimentKind::Price);
  CHECK(c.name == "small");
  CHECK(c.plan.model->grid().steps() == 2);
  CHECK(c.plan.payoff.name == "call");
  CHECK(c.plan.asgq.max_evaluations == 20);
  REQUIRE(c.study.reference);
  CHECK(*c.study.reference == 15.8519);

  Overrides ov;
  ov.seed = 7;
  ov.threads = 3;
  const auto o = parse_config(kSmallStat, ov);
  CHECK(o.seed == 7);
  CHECK(o.plan.lattice.seed == 7);
  CHECK(o.plan.threads == 3);
  CHECK(o.plan.lattice.n_shifts == 8);
  CHECK(*o.study.reference == 0.42074);  // from the preset
}

TEST_CASE("config errors name the offending field", "[cli]") {
  const auto field_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  CHECK(field_of("model: {type: gbm, sigma: -0.4}\npayoff: {type: call, strike: 100}\n") == "model.sigma");
  CHECK(field_of("model: {type: gbm, sigmaa: 0.4}\npayoff: {type: call, strike: 100}\n") == "model.sigmaa");
  CHECK(field_of("preset: no-such-preset\n") == "preset");
  CHECK(field_of("experiment: nonsense\n") == "experiment");
  CHECK(field_of("experiment: quad-study\npreset: call-gbm\nmethod: {name: asgq}\n") == "study.budgets");
  CHECK(field_of("bogus: 1\n") == "bogus");
  CHECK_THROWS_AS(parse_config("model: [unterminated\n"), ConfigError);
}

TEST_CASE("exit codes", "[cli]") {
  TempDir dir;
  const auto bad = dir.write("bad.cfg", "model: {type: gbm, sigma: -0.4}\npayoff: {type: call, strike: 100}\n");
  auto r = run_cli({"--config", bad.string(), "--out", dir.path.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("model.sigma") != std::string::npos);

  CHECK(run_cli({"--config", (dir.path / "missing.cfg").string()}).code == 2);
  CHECK(run_cli({"--show-preset", "nope"}).code == 2);
  CHECK(run_cli({"--format", "xml"}).code == 2);
  CHECK(run_cli({}).code == 2);

  r = run_cli({"--list-presets"});
  CHECK(r.code == 0);
  for (const auto& p : presets()) CHECK(r.out.find(p.name) != std::string::npos);
  CHECK(run_cli({"--show-preset", "heston-call"}).out.find("heston") != std::string::npos);
}

TEST_CASE("dry run validates and writes nothing", "[cli]") {
  TempDir dir;
  const auto cfg = dir.write("p.cfg", kSmallPrice);
  const auto out = dir.path / "out";
  const auto r = run_cli({"--config", cfg.string(), "--out", out.string(), "--dry-run"});
  CHECK(r.code == 0);
  CHECK_FALSE(fs::exists(out));
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["method"]["budget"] == 20);
}

TEST_CASE("price output schema and sidecar", "[cli]") {
  TempDir dir;
  const auto cfg = dir.write("p.cfg", kSmallPrice);
  const auto r = run_cli({"--config", cfg.string(), "--out", dir.path.string()});
  REQUIRE(r.code == 0);
  const auto csv = slurp(dir.path / "small.csv");
  CHECK(csv.substr(0, csv.find('\n')) ==
        "value,stat_error,work,budget_exhausted,reference,relative_error,bias,smoothing_error,quadrature_error");
  const auto meta = nlohmann::json::parse(slurp(dir.path / "small.meta.json"));
  CHECK(meta["seed"] == 42);
  CHECK(meta.contains("version"));
  CHECK(meta.contains("wall_seconds"));
  CHECK(meta["config_text"] == kSmallPrice);
}

TEST_CASE("same seed gives byte-identical output, another seed does not", "[cli]") {
  TempDir dir;
  const auto cfg = dir.write("s.cfg", kSmallStat);
  const auto a = dir.path / "a", b = dir.path / "b", c = dir.path / "c";
  REQUIRE(run_cli({"--config", cfg.string(), "--out", a.string()}).code == 0);
  REQUIRE(run_cli({"--config", cfg.string(), "--out", b.string(), "--threads", "4"}).code == 0);
  REQUIRE(run_cli({"--config", cfg.string(), "--out", c.string(), "--seed", "43"}).code == 0);
  const auto first = slurp(a / "stat.csv");
  CHECK(first.substr(0, first.find('\n')) == "series,axis,metric,aux,fit_slope,fit_r2");
  CHECK(first == slurp(b / "stat.csv"));
  CHECK(first != slurp(c / "stat.csv"));
}

TEST_CASE("jsonl output", "[cli]") {
  TempDir dir;
  const auto cfg = dir.write("s.cfg", kSmallStat);
  REQUIRE(run_cli({"--config", cfg.string(), "--out", dir.path.string(), "--format", "jsonl"}).code == 0);
  std::ifstream in(dir.path / "stat.jsonl");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["series"] == "smoothed");
    CHECK(j["metric"].is_number());
    ++rows;
  }
  CHECK(rows == 3);
}

TEST_CASE("thread count falls back to the environment", "[cli]") {
  TempDir dir;
  const auto cfg = dir.write("p.cfg", kSmallPrice);
  ::setenv("SMOOTHQUAD_THREADS", "3", 1);
  auto r = run_cli({"--config", cfg.string(), "--dry-run"});
  CHECK(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["threads"] == 3);
  r = run_cli({"--config", cfg.string(), "--dry-run", "--threads", "2"});
  CHECK(nlohmann::json::parse(r.out)["threads"] == 2);
  ::setenv("SMOOTHQUAD_THREADS", "zero", 1);
  CHECK(run_cli({"--config", cfg.string(), "--dry-run"}).code == 2);
  ::unsetenv("SMOOTHQUAD_THREADS");
}

TEST_CASE("every shipped config parses", "[cli]") {
  for (const auto& entry : fs::directory_iterator(SMOOTHQUAD_CONFIG_DIR)) {
    INFO(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path().string()));
  }
}

TEST_CASE("the installed binary runs end to end", "[cli]") {
  TempDir dir;
  const auto cfg = dir.write("p.cfg", kSmallPrice);
  const std::string cmd = std::string(SMOOTHQUAD_CLI_PATH) + " --config " + cfg.string() + " --out " +
                          dir.path.string() + " > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(dir.path / "small.csv"));
}
