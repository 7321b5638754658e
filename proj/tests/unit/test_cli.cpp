#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdfields/cli.hpp"
#include "sdfields/errors.hpp"

using namespace sdfields;
namespace fs = std::filesystem;

namespace {

const std::string kData = SDFIELDS_TEST_DATA;

std::string data(const std::string& name) { return kData + "/" + name; }

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sdfields_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Config, BasisDefaultsAreResolvedInPlace) {
  json j = json::parse(R"J({"family": "compound_poisson", "drift": "centered"})J");
  const LevyQuadruplet q = basis_from_json(j);
  EXPECT_EQ(j["rate"], 1.0);
  EXPECT_EQ(j["jumps"], "exponential");
  EXPECT_EQ(j["control"]["lo"][0], "-inf");
  EXPECT_TRUE(q.centered);
  EXPECT_TRUE(q.homogeneous);
  // Centering an Exp(1) law with rate 1: -integral over x > 1 of (x - 1) e^{-x}.
  EXPECT_NEAR(q.seed(point1(0.0))->gamma, -std::exp(-1.0), 1e-10);
  // Reading the resolved document again changes nothing.
  json again = j;
  basis_from_json(again);
  EXPECT_EQ(again, j);
}

TEST(Config, DiagnosticsNameTheField) {
  auto message = [](const std::string& text, auto reader) {
    json j = json::parse(text);
    try {
      reader(j);
    } catch (const ConfigParse& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_EQ(message(R"J({"family": "gamma", "rate": -1})J", [](json& j) { basis_from_json(j); }),
            "basis.rate: must be positive");
  EXPECT_EQ(message(R"J({"family": "stable"})J", [](json& j) { basis_from_json(j); }).substr(0, 13), "basis.family:");
  EXPECT_EQ(message(R"J({"family": "gamma", "alpha": -1.5})J", [](json& j) { kernel_from_json(j); }),
            "kernel.alpha: gamma kernel needs alpha > -1");
  EXPECT_NE(message(R"J({"family": "custom", "expr": "exp(-u)"})J", [](json& j) { kernel_from_json(j); })
                .find("not available"),
            std::string::npos);
  EXPECT_NE(message(R"J({"family": "custom", "density": "1 / x^3", "support": [0, 1]})J",
                    [](json& j) { basis_from_json(j); })
                .find("not a Lévy measure"),
            std::string::npos);
  EXPECT_EQ(message(R"J({"s_range": [0, 1], "ds": 1e-8})J", [](json& j) { grid_from_json(j); }),
            "grid: grid: more than 1e7 cells");
  try {
    parse_json_text("{\n  \"a\": 1,\n  \"b\": }", "doc.json");
    FAIL();
  } catch (const ConfigParse& e) {
    EXPECT_EQ(std::string(e.what()).substr(0, 13), "doc.json:3:8:");
  }
}

TEST(Config, IntervalsAndCustomObjects) {
  const Interval i = interval_from_json(json::parse(R"J([null, "inf"])J"), "x");
  EXPECT_TRUE(std::isinf(i.lo) && i.lo < 0 && std::isinf(i.hi));
  EXPECT_EQ(interval_to_json(Interval{0.0, kInf}), json::parse(R"J([0.0, "inf"])J"));
  EXPECT_THROW(interval_from_json(json::parse("[1, 0]"), "x"), ConfigParse);

  json k = json::parse(R"J({"family": "custom", "expr": "exp(-t) * ind(t >= 0)", "support": [0, null]})J");
  const KernelSpec ks = kernel_from_json(k);
  EXPECT_NEAR(ks.eval(1.0, 0.5), std::exp(-0.5), 1e-15);
  EXPECT_EQ(ks.eval(0.0, 0.5), 0.0);

  json m = json::parse(R"J({"kind": "weighted", "density": "u^2", "support": [0, 2]})J");
  const IntegratorMeasure mu = measure_from_json(m);
  EXPECT_NEAR(mu.density_at(1.5), 2.25, 1e-15);

  json f = json::parse(R"J({"indicator": [0, 1]})J");
  EXPECT_EQ(integrand_from_json(f)(0.5), 1.0);
}

TEST(Cli, CumulantOfWienerOu) {
  const CliRun r = run_cli({"cumulant", "--basis", data("gaussian.json"), "--kernel", data("ou.json"), "--u", "0",
                         "--theta", "1", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_NEAR(j["cumulant"][0].get<double>(), -0.25, 1e-12);
  EXPECT_EQ(j["cumulant"][1].get<double>(), 0.0);
  EXPECT_EQ(j["config"]["inputs"]["basis"]["family"], "gaussian");
}

TEST(Cli, SdCheckWitness) {
  const CliRun r = run_cli({"sd-check", "--basis", data("exp-cpoisson.json"), "--q", "5", "--intervals", "default", "--json"});
  EXPECT_EQ(r.code, 2);
  const json j = json::parse(r.out);
  const json& w = j["levy_seed"]["witness"];
  EXPECT_EQ(w["q"].get<double>(), 5.0);
  EXPECT_EQ(w["interval"], json::parse("[0.1, 0.2]"));
  EXPECT_NEAR(w["scaled_mass"].get<double>(), std::exp(-0.5) - std::exp(-1.0), 1e-6);
  EXPECT_NEAR(w["mass"].get<double>(), std::exp(-0.1) - std::exp(-0.2), 1e-6);
}

TEST(Cli, ReplicasZeroIsConfigParse) {
  const CliRun r = run_cli({"simulate", "--basis", data("gaussian.json"), "--kernel", data("ou.json"), "--grid",
                         data("grid.json"), "--replicas", "0", "--out", scratch("zero.csv").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ConfigParse"), std::string::npos);
  EXPECT_FALSE(fs::exists(scratch("zero.csv")));
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
  EXPECT_EQ(run_cli({"cumulant", "--basis", data("missing.json"), "--kernel", data("ou.json")}).code, 1);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  const CliRun r = run_cli({"simulate", "--basis", data("gaussian.json"), "--kernel", data("ou.json"), "--grid",
                         data("grid.json"), "--out", "/nonexistent-dir/x.csv"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("does not exist"), std::string::npos);
}

TEST(Cli, ReplayReproducesReport) {
  const fs::path report = scratch("cumulant.json");
  const CliRun first = run_cli({"cumulant", "--basis", data("gamma-subordinator.json"), "--kernel", data("ou.json"),
                             "--u", "0,0.5", "--theta", "1,-2", "--out", report.string()});
  ASSERT_EQ(first.code, 0) << first.err;
  const CliRun again = run_cli({"--replay", report.string(), "--json"});
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(again.out, slurp(report));
}

TEST(Cli, SimulationIsDeterministicAndReplayable) {
  const std::vector<std::string> base{"simulate",         "--basis", data("exp-cpoisson-centered.json"),
                                      "--kernel",         data("ou.json"), "--grid", data("grid.json"),
                                      "--replicas",       "600"};
  auto with = [&](std::vector<std::string> extra) {
    auto a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  ASSERT_EQ(run_cli(with({"--out", scratch("t1.csv").string(), "--threads", "1"})).code, 0);
  ASSERT_EQ(run_cli(with({"--out", scratch("t3.csv").string(), "--threads", "3"})).code, 0);
  EXPECT_EQ(slurp(scratch("t1.csv")), slurp(scratch("t3.csv")));
  EXPECT_EQ(slurp(scratch("t1.csv.json")), slurp(scratch("t3.csv.json")));
  ASSERT_EQ(run_cli({"--replay", scratch("t1.csv.json").string(), "--out", scratch("r.csv").string()}).code, 0);
  EXPECT_EQ(slurp(scratch("t1.csv")), slurp(scratch("r.csv")));
  EXPECT_EQ(slurp(scratch("t1.csv.json")), slurp(scratch("r.csv.json")));

  // SDFIELDS_SEED overrides the configured seed; --seed overrides both.
  ::setenv("SDFIELDS_SEED", "99", 1);
  ASSERT_EQ(run_cli(with({"--out", scratch("env.csv").string()})).code, 0);
  ASSERT_EQ(run_cli(with({"--out", scratch("flag.csv").string(), "--seed", "20240917"})).code, 0);
  ::unsetenv("SDFIELDS_SEED");
  EXPECT_NE(slurp(scratch("env.csv")), slurp(scratch("t1.csv")));
  EXPECT_EQ(json::parse(slurp(scratch("env.csv.json")))["config"]["seed"], 99);
  EXPECT_EQ(slurp(scratch("flag.csv")), slurp(scratch("t1.csv")));
}

TEST(Cli, NoOutputOnError) {
  // The Lévy measure 1 / (x log^2 x) on x > e has no log moment, so the
  // OU check fails after the configuration has been read.
  const fs::path spec = scratch("nolog.json");
  std::ofstream(spec) << R"J({"basis": {"family": "custom", "density": "1 / (x * log(x)^2)", "support": [2.718281828459045, null]},
                            "kernel": {"family": "ou"}})J";
  const fs::path out = scratch("nolog-report.json");
  const CliRun r = run_cli({"field-process", "--spec", spec.string(), "--check", "ou-marginal"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("LogMomentFailure"), std::string::npos);
  const CliRun s = run_cli({"cumulant", "--basis", data("gaussian.json"), "--kernel", data("ou.json"), "--u", "0,1",
                         "--theta", "1", "--out", out.string()});
  EXPECT_EQ(s.code, 1);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, FubiniVerdictsAndOverride) {
  // Not centered: the condition check refuses.
  EXPECT_EQ(run_cli({"fubini", "--basis", data("exp-cpoisson.json"), "--kernel", data("ou.json"), "--mu",
                     data("mu.json"), "--sets", data("sets.json")})
                .code,
            1);
  const CliRun r = run_cli({"fubini", "--basis", data("exp-cpoisson-centered.json"), "--kernel", data("ou.json"),
                         "--mu", data("mu.json"), "--sets", data("sets.json"), "--grid", data("grid.json"),
                         "--replicas", "20", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["verified"], true);
  for (const auto& row : j["sets"]) {
    EXPECT_EQ(row["condition"]["verdict"], "holds");
    EXPECT_LT(row["simulation"]["rms_gap"].get<double>(), 1e-3);
  }
  // An unbounded Lebesgue integrator over [0, inf) fails the condition: exit 2.
  const fs::path sets = scratch("halfline.json");
  std::ofstream(sets) << R"J([[0, null]])J";
  const fs::path mu = scratch("mu-halfline.json");
  std::ofstream(mu) << R"J({"kind": "lebesgue", "support": [0, null]})J";
  EXPECT_EQ(run_cli({"fubini", "--basis", data("exp-cpoisson-centered.json"), "--kernel", data("ou.json"), "--mu",
                     mu.string(), "--sets", sets.string()})
                .code,
            2);
}

TEST(Cli, FieldProcessChecks) {
  const CliRun r = run_cli({"field-process", "--spec", data("ou-gamma-spec.json"), "--u", "0", "--t-grid", "1,2.5",
                         "--check", "consistency", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["check"]["regions"], 10);
  EXPECT_LE(j["check"]["max_rel"].get<double>(), 1e-6);
  // B is 0 for a pure-jump basis; Gamma scales with t.
  EXPECT_NEAR(j["triplets"][1]["gamma"][0].get<double>(), 2.5 * j["triplets"][0]["gamma"][0].get<double>(), 1e-12);
}
