#include "sescc/amplitude_io.hpp"
#include "sescc/cli/commands.hpp"
#include "sescc/cli/toml_lite.hpp"

#include "support/oracle_values.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace sescc;
using namespace sescc::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("sescc_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_quiet(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = run(args, out, err);
  if (err_text) *err_text = err.str();
  return rc;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  fs::create_directories(dir);
  const auto p = dir / "run.toml";
  std::ofstream(p) << text;
  return p;
}

RunConfig composite_config() {
  RunConfig c;
  c.model.kind = "composite";
  c.model.a.eps_d = {-1.0};
  c.model.a.V = {1.0};
  c.model.b.eps_d = {-1.5};
  c.model.b.V = {0.7};
  c.model.b.U = 2.0;
  c.model.lambda = 0.25;
  c.model.coupling = {{1, 5}, {3, 7}};
  c.reference = "10101010";
  c.subsystems = {SubsystemSpec{ActiveSpace{{0, 2}, {1, 3}}, "A"}};
  c.grid.probes = {1, 5};
  c.output.format = "json";
  c.validate();
  return c;
}

}  // namespace

TEST(Toml, ParsesSubset) {
  const auto j = parse_toml(R"(
# comment
title = "x # not a comment"
n = 3
x = -1.5e-2
flag = true
list = [1, 2,
        3]  # continued
pairs = [[1, 5], [3, 7]]
[a.b]
k = 'literal'
[[item]]
v = 1
[[item]]
v = 2
)");
  EXPECT_EQ(j["title"], "x # not a comment");
  EXPECT_EQ(j["n"], 3);
  EXPECT_DOUBLE_EQ(j["x"].get<double>(), -0.015);
  EXPECT_EQ(j["flag"], true);
  EXPECT_EQ(j["list"].size(), 3U);
  EXPECT_EQ(j["pairs"][1][0], 3);
  EXPECT_EQ(j["a"]["b"]["k"], "literal");
  EXPECT_EQ(j["item"].size(), 2U);
  EXPECT_EQ(j["item"][1]["v"], 2);
  EXPECT_EQ(parse_toml(write_toml(j)), j);
}

TEST(Toml, ErrorsCarryLineNumbers) {
  try {
    parse_toml("a = 1\na = 2\n");
    FAIL();
  } catch (const TomlError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(parse_toml("a = [1, 2"), TomlError);
  EXPECT_THROW(parse_toml("a = nope"), TomlError);
  EXPECT_THROW(parse_toml("[x\n"), TomlError);
  EXPECT_THROW(parse_toml("just text"), TomlError);
  EXPECT_THROW(parse_toml("s = \"open"), TomlError);
}

TEST(Config, RoundTripIsIdentity) {
  for (const auto& c : {paper_config(), composite_config()}) {
    const auto text = serialize_config(c);
    const auto back = parse_config(text);
    EXPECT_EQ(back, c);
    EXPECT_EQ(serialize_config(back), text);
    EXPECT_EQ(parse_config(serialize_config(back)), back);
  }
}

TEST(Config, RoundTripRandomized) {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = paper_config();
    c.model.siam.U = u(rng);
    c.model.siam.eps_c = u(rng) / 3.0;
    c.model.siam.V = {u(rng), u(rng)};
    c.solver.tol = std::pow(10.0, -4.0 - 8.0 * std::abs(u(rng)) / 5.0);
    c.grid.eta = std::abs(u(rng)) + 1e-3;
    c.sweep.U = {u(rng), u(rng), u(rng)};
    c.output.format = trial % 2 ? "json" : "csv";
    EXPECT_EQ(parse_config(serialize_config(c)), c);
  }
}

TEST(Config, Validation) {
  const auto base = serialize_config(paper_config());
  EXPECT_THROW(parse_config(base + "\nbogus = 1\n"), ConfigError);
  auto c = paper_config();
  c.reference = "10011";
  EXPECT_THROW(c.validate(), ConfigError);
  c = paper_config();
  c.electrons = 4;
  EXPECT_THROW(c.validate(), ConfigError);
  c = paper_config();
  c.subsystems[0].active.S = {7};
  EXPECT_THROW(c.validate(), ConfigError);
  c = paper_config();
  c.subsystems[0].active.R = {1};
  EXPECT_THROW(c.validate(), ConfigError);
  c = paper_config();
  c.output.format = "xml";
  EXPECT_THROW(c.validate(), ConfigError);
  c = paper_config();
  c.grid.eta = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, HashTracksContent) {
  auto c = paper_config();
  const auto h = config_hash(c);
  EXPECT_EQ(h.size(), 16U);
  EXPECT_EQ(config_hash(c), h);
  c.model.siam.U = 2.0;
  EXPECT_NE(config_hash(c), h);
}

TEST(Cli, SolveSeedPaper) {
  const auto dir = scratch("solve");
  ASSERT_EQ(run_quiet({"solve", "--seed-paper", "--out", dir.string(), "--format", "json"}), kOk);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  EXPECT_NEAR(report["energy"].get<double>(), -3.7572543, 1e-7);
  EXPECT_EQ(report["energy_label"], "exact");
  EXPECT_EQ(report["engine_version"], kEngineVersion);
  const auto hash = report["config_hash"].get<std::string>();
  EXPECT_EQ(hash, config_hash(parse_config(slurp(dir / "config.toml"))));
  const auto t = load_amplitudes(slurp(dir / "T.json"));
  for (std::size_t k = 0; k < 8; ++k)
    EXPECT_NEAR(t.at(Excitation::parse(std::string(oracle::kSignatures[k]))), oracle::kT[k], 1e-8);
  for (const char* f : {"T.json", "lambda.json", "S.json"})
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / f))["config_hash"], hash);
}

TEST(Cli, SolveFlagsZeroCrossAmplitudesAndTruncation) {
  const auto dir = scratch("v0");
  auto c = paper_config();
  c.model.siam.V = {0.0, 0.0};
  c.output.dir = (dir / "out").string();
  c.output.format = "json";
  const auto cfg_path = write_config(dir, serialize_config(c));
  ASSERT_EQ(run_quiet({"solve", "--config", cfg_path.string()}), kOk);
  auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
  EXPECT_TRUE(report["cross_amplitudes_zero"].get<bool>());
  EXPECT_EQ(report["zero_amplitudes"].size(), 8U);

  c = paper_config();
  c.rank_max = 1;
  c.output.dir = (dir / "trunc").string();
  c.output.format = "json";
  write_config(dir, serialize_config(c));
  ASSERT_EQ(run_quiet({"solve", "--config", cfg_path.string()}), kOk);
  report = nlohmann::json::parse(slurp(dir / "trunc" / "report.json"));
  EXPECT_EQ(report["energy_label"], "truncated");
  EXPECT_FALSE(report["cross_amplitudes_zero"].get<bool>());
  EXPECT_GT(std::abs(report["energy_error"].get<double>()), 1e-4);
}

TEST(Cli, CsvReportsCarryProvenance) {
  const auto dir = scratch("csv");
  ASSERT_EQ(run_quiet({"solve", "--seed-paper", "--out", dir.string()}), kOk);
  for (const char* f : {"report.csv", "amplitudes.csv"}) {
    const auto text = slurp(dir / f);
    EXPECT_NE(text.find("# engine_version=sescc"), std::string::npos);
    EXPECT_NE(text.find("# config_hash="), std::string::npos);
  }
  EXPECT_NE(slurp(dir / "report.csv").find("energy,-3.7572543\n"), std::string::npos);
}

TEST(Cli, FlowWritesTraceAndHeff) {
  const auto dir = scratch("flow");
  auto c = paper_config();
  c.sweep.U.clear();
  c.output.dir = (dir / "out").string();
  const auto cfg_path = write_config(dir, serialize_config(c));
  ASSERT_EQ(run_quiet({"flow", "--config", cfg_path.string(), "--format", "json"}), kOk);
  const auto heff = nlohmann::json::parse(slurp(dir / "out" / "heff_main.json"));
  EXPECT_EQ(heff["basis"][1], "0->1");
  for (int k = 0; k < 4; ++k)
    EXPECT_NEAR(heff["matrix"][k / 2][k % 2].get<double>(), oracle::kHeffBar[static_cast<std::size_t>(k)], 1e-8);
  std::istringstream trace(slurp(dir / "out" / "flow_trace.jsonl"));
  std::string line;
  ASSERT_TRUE(std::getline(trace, line));
  const auto rec = nlohmann::json::parse(line);
  for (const char* k : {"iteration", "subsystem", "energy", "residual", "config_hash", "engine_version"})
    EXPECT_TRUE(rec.contains(k)) << k;
  const auto report = nlohmann::json::parse(slurp(dir / "out" / "flow.json"));
  EXPECT_LT(report["deviation"].get<double>(), 1e-8);
  EXPECT_EQ(report["n_subsystems"], 5);
}

TEST(Cli, FlowWithoutSubsystemsUsesFullSpace) {
  const auto dir = scratch("flowfull");
  auto c = paper_config();
  c.subsystems.clear();
  c.add_external = false;
  c.sweep.U.clear();
  c.output.dir = (dir / "out").string();
  c.output.format = "json";
  const auto cfg_path = write_config(dir, serialize_config(c));
  ASSERT_EQ(run_quiet({"flow", "--config", cfg_path.string()}), kOk);
  const auto report = nlohmann::json::parse(slurp(dir / "out" / "flow.json"));
  EXPECT_NEAR(report["energy"].get<double>(), oracle::kE0, 1e-8);
}

TEST(Cli, SweepTable) {
  const auto dir = scratch("sweep");
  ASSERT_EQ(run_quiet({"sweep", "--seed-paper", "--out", dir.string()}), kOk);
  std::istringstream in(slurp(dir / "sweep.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#' && line[0] != 'U') ++rows;
  EXPECT_EQ(rows, 20);
}

TEST(Cli, SpectralThreeMethods) {
  const auto dir = scratch("spectral");
  auto c = paper_config();
  c.grid.omega_min = -7.5;
  c.grid.omega_max = 7.5;
  c.grid.step = 0.05;
  c.output.dir = dir.string();
  const auto cfg_path = write_config(dir / "cfg", serialize_config(c));
  ASSERT_EQ(run_quiet({"spectral", "--config", cfg_path.string()}), kOk);
  const auto csv = slurp(dir / "spectra.csv");
  EXPECT_NE(csv.find("omega,A_ccgf_1,A_ses_ccgf_1,A_ed_1"), std::string::npos);
  const auto report = slurp(dir / "spectral_report.csv");
  EXPECT_NE(report.find("max_pole_deviation_ccgf_vs_ed"), std::string::npos);

  ASSERT_EQ(run_quiet({"spectral", "--config", cfg_path.string(), "--format", "json", "--eta", "0.1"}), kOk);
  const auto j = nlohmann::json::parse(slurp(dir / "spectral_report.json"));
  EXPECT_DOUBLE_EQ(j["eta"].get<double>(), 0.1);
  EXPECT_LT(j["max_pole_deviation_ccgf_vs_ed"].get<double>(), 1e-6);
  EXPECT_LT(j["max_ses_pole_distance_to_hbar_spectrum"].get<double>(), 1e-8);
}

TEST(Cli, CompositeSolve) {
  const auto dir = scratch("composite");
  auto c = composite_config();
  c.output.dir = dir.string();
  const auto cfg_path = write_config(dir / "cfg", serialize_config(c));
  ASSERT_EQ(run_quiet({"solve", "--config", cfg_path.string()}), kOk);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  EXPECT_LT(std::abs(report["energy_error"].get<double>()), 1e-8);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("codes");
  std::string err;
  EXPECT_EQ(run_quiet({"solve"}, &err), kConfigError);
  EXPECT_EQ(run_quiet({"solve", "--config", (dir / "missing.toml").string()}, &err), kConfigError);
  EXPECT_NE(err.find("config error"), std::string::npos);
  const auto bad = write_config(dir, "reference = \"100110\"\n[model]\nU = \"one\"\n");
  EXPECT_EQ(run_quiet({"solve", "--config", bad.string()}), kConfigError);
  EXPECT_EQ(run_quiet({"solve", "--seed-paper", "--format", "xml"}), kConfigError);
  EXPECT_EQ(run_quiet({"launch", "--seed-paper"}), kConfigError);

  auto c = paper_config();
  c.solver.max_iter = 2;
  c.output.dir = (dir / "out").string();
  const auto slow = write_config(dir, serialize_config(c));
  EXPECT_EQ(run_quiet({"solve", "--config", slow.string()}, &err), kConvergenceError);
  EXPECT_NE(err.find("trace tail"), std::string::npos);

  std::ostringstream out, e2;
  EXPECT_EQ(run({"--help"}, out, e2), kOk);
  EXPECT_NE(out.str().find("spectral"), std::string::npos);
}
