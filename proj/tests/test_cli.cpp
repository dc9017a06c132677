#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hessvar/cli.hpp"

using namespace hessvar;
using namespace hessvar::cli;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "hessvar");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  testing::internal::CaptureStdout();
  testing::internal::CaptureStderr();
  const int code = run(static_cast<int>(argv.size()), argv.data());
  return {code, testing::internal::GetCapturedStdout(), testing::internal::GetCapturedStderr()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("hessvar_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, JsonRoundTrip) {
  RunConfig c;
  EXPECT_EQ(config_from_json(to_json(c)), c);
  c.params = {5, 2, -0.3, 2.0};
  c.grid = {512, 2.0, 1.5};
  c.tol.shoot = 1e-10;
  c.nl.kind = "capped";
  c.nl.p = 1.25;
  c.nl.sigma = -0.4;
  c.nl.m = 50.0;
  c.profile = "extremal";
  c.extremal = {0.5, 7, 0.02};
  c.nonexist = {{1e-2, 5e-3}, 0.25};
  c.seed = 99;
  c.output_dir = "somewhere";
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
}

TEST(Config, PartialJsonKeepsDefaults) {
  const auto c = config_from_json(json::parse(R"({"params": {"n": 4, "k": 1}})"));
  EXPECT_EQ(c.params.n, 4);
  EXPECT_EQ(c.grid, GridSpec{});
  EXPECT_EQ(c.nl, NlSpec{});
}

TEST(Config, RejectsUnknownKeysAndWrongTypes) {
  EXPECT_THROW(config_from_json(json::parse(R"({"bogus": 1})")), InvalidInput);
  EXPECT_THROW(config_from_json(json::parse(R"({"grid": {"N": 64, "Nx": 2}})")), InvalidInput);
  EXPECT_THROW(config_from_json(json::parse(R"({"params": {"n": "five"}})")), InvalidInput);
  EXPECT_THROW(config_from_json(json::parse(R"({"nl": {"kind": "cubic"}})")), InvalidInput);
  EXPECT_THROW(config_from_json(json::parse(R"({"grid": {"N": 8}})")), InvalidInput);
  EXPECT_THROW(config_from_json(json::parse(R"([1, 2])")), InvalidInput);
}

TEST(Config, LoadConfigErrors) {
  const auto dir = scratch("load");
  fs::create_directories(dir);
  EXPECT_THROW(load_config(dir / "missing.json"), InvalidInput);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(load_config(dir / "bad.json"), InvalidInput);
}

TEST(Sweep, ParseRange) {
  const auto v = parse_range("-1:-0.2:0.1");
  ASSERT_EQ(v.size(), 9u);
  EXPECT_DOUBLE_EQ(v.front(), -1.0);
  EXPECT_DOUBLE_EQ(v.back(), -0.2);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(v[i], -1.0 + 0.1 * i, 1e-12);
  EXPECT_EQ(parse_range("0.5"), std::vector<double>{0.5});
  EXPECT_EQ(parse_range("3:1:-1"), (std::vector<double>{3, 2, 1}));
  EXPECT_THROW(parse_range("0:1:-0.1"), InvalidInput);
  EXPECT_THROW(parse_range("0:1:0"), InvalidInput);
  EXPECT_THROW(parse_range("0:1"), InvalidInput);
  EXPECT_THROW(parse_range("a:1:0.1"), InvalidInput);
}

TEST(Sweep, ApplyAxis) {
  RunConfig c;
  apply_axis(c, "s", -0.5);
  apply_axis(c, "n", 7);
  apply_axis(c, "p", 2.5);
  EXPECT_EQ(c.params.s, -0.5);
  EXPECT_EQ(c.params.n, 7);
  EXPECT_EQ(c.nl.p, 2.5);
  EXPECT_THROW(apply_axis(c, "k", 1.5), InvalidInput);
  EXPECT_THROW(apply_axis(c, "N", 64), InvalidInput);
}

TEST(Run, ExponentPrintsJson) {
  const auto r = invoke({"exponent", "--n", "5", "--k", "1", "--s", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  // n(k+1)/(n-2k) at s = 0
  EXPECT_NEAR(j["kstar"].get<double>(), 10.0 / 3.0, 1e-12);
  EXPECT_EQ(j["regime"], "2k<n");
}

TEST(Run, QuotientWritesFilesAndManifest) {
  const auto dir = scratch("quotient");
  const auto r = invoke({"quotient", "--n", "3", "--k", "1", "--N", "256", "--output-dir", dir.string(),
                         "--emit-plotscript"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "profile.csv"));
  EXPECT_TRUE(fs::exists(dir / "plot.py"));
  const auto m = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m["command"], "quotient");
  EXPECT_EQ(m["config"]["grid"]["N"], 256);
  EXPECT_TRUE(m.contains("wall_time_s"));
  EXPECT_TRUE(m["versions"].contains("hessvar"));
  // int |grad u|^2 = int_0^1 4 pi r^4 dr for u = (r^2 - 1)/2 on the unit ball in 3-d
  EXPECT_NEAR(m["summary"]["energy"].get<double>(), 4.0 * M_PI / 5.0, 1e-3);
  const auto csv = slurp(dir / "profile.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "r,u,du");
}

TEST(Run, ConfigFileAndOverrides) {
  const auto dir = scratch("config");
  fs::create_directories(dir);
  std::ofstream(dir / "run.json") << R"({"params": {"n": 6, "k": 2, "s": -0.25}, "grid": {"N": 128}})";
  const auto r = invoke({"exponent", "--config", (dir / "run.json").string(), "--print-config", "--N", "64"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto c = config_from_json(json::parse(r.out));
  EXPECT_EQ(c.params.n, 6);
  EXPECT_EQ(c.params.s, -0.25);
  EXPECT_EQ(c.grid.N, 64);
}

TEST(Run, ExitCodes) {
  const auto dir = scratch("codes");
  const auto bad = invoke({"exponent", "--n", "3", "--k", "0"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_EQ(json::parse(bad.err)["error"]["kind"], "config");
  EXPECT_EQ(invoke({"exponent", "--nope"}).code, 2);
  EXPECT_EQ(invoke({"solve", "--n", "5", "--k", "1", "--nl", "power", "--p", "1", "--output-dir", dir.string()}).code,
            2);
  const auto num = invoke({"eigen", "--n", "3", "--k", "1", "--N", "64", "--eigen-tol", "1e-300", "--output-dir",
                           dir.string()});
  EXPECT_EQ(num.code, 3);
  EXPECT_EQ(json::parse(num.err)["error"]["kind"], "numerical");
  EXPECT_TRUE(json::parse(slurp(dir / "manifest.json"))["summary"].contains("error"));
}

TEST(Run, SweepIsIndependentOfThreadCount) {
  const auto a = scratch("sweep_a");
  const auto b = scratch("sweep_b");
  const std::vector<std::string> common{"sweep", "exponent", "--s", "-1:-0.2:0.1", "--config"};
  const auto cfg = scratch("sweep_cfg");
  fs::create_directories(cfg);
  std::ofstream(cfg / "c.json") << R"({"params": {"n": 5, "k": 1}})";
  auto args = [&](const fs::path& out, const char* jobs) {
    auto v = common;
    v.push_back((cfg / "c.json").string());
    v.insert(v.end(), {"--jobs", jobs, "--output-dir", out.string()});
    return v;
  };
  const auto ra = invoke(args(a, "1"));
  const auto rb = invoke(args(b, "4"));
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(rb.code, 0) << rb.err;
  const auto sa = slurp(a / "sweep.csv");
  EXPECT_EQ(sa, slurp(b / "sweep.csv"));
  EXPECT_EQ(std::count(sa.begin(), sa.end(), '\n'), 10);
  for (int i = 0; i < 9; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "point_%03d", i);
    EXPECT_TRUE(fs::exists(a / name / "manifest.json"));
  }
}

TEST(Run, SweepReportsFailedPoints) {
  const auto dir = scratch("sweep_fail");
  const auto r = invoke({"sweep", "exponent", "--n", "0:3:1", "--output-dir", dir.string()});
  EXPECT_EQ(r.code, 3);
  const auto j = json::parse(r.out);
  ASSERT_EQ(j["failed"].size(), 1u);
  EXPECT_EQ(j["failed"][0]["point"], 0);
  // n = 1 gives an infinite k*, reported as a string, so the column holds nan there
  EXPECT_EQ(slurp(dir / "sweep.csv"), "point,n,ok,kstar,s0\n0,0,0,nan,nan\n1,1,1,nan,0.5\n2,2,1,4,1\n3,3,1,6,1\n");
}
