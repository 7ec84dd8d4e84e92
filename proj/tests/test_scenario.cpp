#include <nonlocal/scenario.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace nonlocal;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::getline(f, line);
  return line;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nonlocal_test_" + name);
  fs::remove_all(p);
  return p;
}

constexpr const char* kSmall = R"(
name = "small"
dx = 0.01
T = 0.05
domain = { x_min = 0.0, x_max = 2.0 }
kernel = { kind = "linear_decreasing", eta = 0.2 }
initial = { kind = "piecewise", breaks = [0.5, 1.0], values = [0.2, 0.6, 0.2] }
V1 = { kind = "greenshields_squared" }
V2 = { kind = "identity" }
)";

}  // namespace

TEST(Scenario, PresetExpansion) {
  const auto s = parse_config_string(R"(preset = "paper-fig1")");
  EXPECT_EQ(s.name, "paper-fig1");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.tag(0), "eps-0.5");
  EXPECT_EQ(s.tag(1), "eps0");
  EXPECT_EQ(s.tag(2), "eps0.5");
  const auto c = s.config(2);
  EXPECT_EQ(c.grid.dx(), 1e-3);
  EXPECT_EQ(c.grid.x_min(), -2.0);
  EXPECT_EQ(c.grid.x_max(), 3.0);
  EXPECT_EQ(c.final_time, 0.5);
  EXPECT_EQ(c.v2.kind(), VelocityModel::Kind::Estimation);
  EXPECT_EQ(c.v2.eps(), 0.5);
  EXPECT_EQ(c.v1.kind(), VelocityModel::Kind::GreenshieldsSquared);
  EXPECT_EQ(c.lambda.kind, LambdaPolicy::Kind::PaperPreset);

  const auto f2 = parse_config_string(R"(preset = "paper-fig2-coarse")");
  ASSERT_EQ(f2.size(), 5u);
  EXPECT_EQ(f2.tag(1), "alpha0.25");
  EXPECT_EQ(f2.config(0).grid.dx(), 4e-3);
  EXPECT_EQ(f2.config(4).v2.alpha(), 1.0);
  EXPECT_EQ(f2.config(0).v1.kind(), VelocityModel::Kind::QuadraticFree);
}

TEST(Scenario, PinnedParameterDropsSweep) {
  const auto s = parse_config_string("preset = \"paper-fig1\"\neps = 0.5\n");
  EXPECT_EQ(s.size(), 1u);
  EXPECT_EQ(s.tag(0), "paper-fig1");
  EXPECT_EQ(s.config(0).v2.eps(), 0.5);
  const auto a = parse_config_string("preset = \"paper-fig2\"\nalpha = 0.75\n");
  EXPECT_EQ(a.size(), 1u);
  EXPECT_EQ(a.config(0).v2.alpha(), 0.75);
}

TEST(Scenario, UserSweepReplacesPreset) {
  const auto s = parse_config_string("preset = \"paper-fig2\"\nsweep = { key = \"alpha\", values = [0.0, 1.0] }\n");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.tag(1), "alpha1");
  // identity has no eps
  EXPECT_THROW(with_sweep(parse_config_string(kSmall), "V2.eps=0.1,0.2"), ValidationError);
  EXPECT_THROW(with_sweep(parse_config_string(kSmall), "eps=abc"), ValidationError);
  EXPECT_THROW(with_sweep(parse_config_string(kSmall), "eps"), ValidationError);
}

TEST(Scenario, ValidationErrors) {
  // no kernel
  EXPECT_THROW(parse_config_string(R"(
dx = 0.01
T = 0.1
domain = { x_min = 0.0, x_max = 1.0 }
initial = { kind = "constant", value = 0.3 }
V1 = { kind = "greenshields_squared" }
V2 = { kind = "identity" }
)"),
               ValidationError);
  // eta = 0.5 with dx = 0.7
  try {
    parse_config_string("preset = \"paper-fig1\"\ndx = 0.7\ndomain = { x_min = 0.0, x_max = 7.0 }\n");
    FAIL() << "expected an error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("kernel unresolved by grid"), std::string::npos);
  }
  // misspelled key
  try {
    parse_config_string("preset = \"paper-fig1\"\nkernal = 1\n");
    FAIL() << "expected an error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("kernal"), std::string::npos);
  }
  EXPECT_THROW(parse_config_string(R"(preset = "no-such-preset")"), ValidationError);
  EXPECT_THROW(parse_config_string("preset = \"paper-fig1\"\neps = 2.0\n"), ValidationError);
  EXPECT_THROW(parse_config_string("dx = = 1"), ValidationError);
}

TEST(Scenario, RoundTrip) {
  for (const char* text : {R"(preset = "paper-fig1")", R"(preset = "paper-fig2-coarse")", kSmall}) {
    const auto s = parse_config_string(text);
    const auto again = parse_config_string(s.to_toml());
    EXPECT_EQ(s.table, again.table);
    EXPECT_EQ(s.to_toml(), again.to_toml());
    ASSERT_EQ(s.size(), again.size());
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.tag(i), again.tag(i));
  }
}

TEST(Scenario, ExtraInitialAndKernelKinds) {
  const auto s = parse_config_string(R"(
dx = 0.01
T = 0.05
domain = { x_min = 0.0, x_max = 2.0 }
kernel = { kind = "piecewise", pieces = [ { a = 0.0, b = 0.1, coeffs = [6.0] }, { a = 0.1, b = 0.2, coeffs = [4.0] } ] }
initial = { kind = "sigmoid", left = 0.2, right = 0.6, center = 1.0, width = 0.1 }
V1 = { kind = "greenshields_squared" }
V2 = { kind = "identity" }
)");
  const auto c = s.config(0);
  EXPECT_NEAR(c.kernel.total_integral(), 1.0, 1e-15);
  EXPECT_NEAR(c.initial(1.0), 0.4, 1e-15);
  const auto g = parse_config_string(R"(
dx = 0.01
T = 0.05
domain = { x_min = 0.0, x_max = 2.0 }
kernel = { kind = "constant", eta = 0.1 }
initial = { kind = "gaussian", base = 0.2, height = 0.3, center = 1.0, width = 0.1 }
V1 = { kind = "greenshields_squared" }
V2 = { kind = "identity" }
)");
  EXPECT_NEAR(g.config(0).initial(1.0), 0.5, 1e-15);
}

TEST(Scenario, OutputsForSweep) {
  std::string text = kSmall;
  text.replace(text.find("\"identity\""), 10, "\"estimation\", eps = 0.0");
  auto sweep = with_sweep(parse_config_string(text), "eps=-0.5,0,0.5");
  const auto results = run_scenario(sweep);
  ASSERT_EQ(results.size(), 3u);
  const auto dir = scratch("sweep");
  write_outputs(results, dir);
  EXPECT_EQ(first_line(dir / "comparison_0.05.csv"), "x,q_eps-0.5,q_eps0,q_eps0.5");
  EXPECT_EQ(first_line(dir / "solution_eps0_0.05.csv"), "x,q");
  EXPECT_TRUE(fs::exists(dir / "solution_eps0_0.csv"));
  const auto report = nlohmann::json::parse(read_file(dir / "report_eps0.5.json"));
  EXPECT_EQ(report["tag"], "eps0.5");
  EXPECT_EQ(report["config"]["V2"]["eps"], 0.5);
  EXPECT_TRUE(report["diagnostics"]["pass"].get<bool>());
  EXPECT_EQ(report["steps"], results[2].report.steps);

  // 200 rows plus header
  std::ifstream f(dir / "solution_eps0_0.05.csv");
  std::size_t lines = 0;
  for (std::string l; std::getline(f, l);) ++lines;
  EXPECT_EQ(lines, 201u);
  fs::remove_all(dir);
}

TEST(Scenario, SingleRunHasNoComparison) {
  const auto results = run_scenario(parse_config_string(kSmall));
  const auto dir = scratch("single");
  write_outputs(results, dir);
  EXPECT_TRUE(fs::exists(dir / "solution_small_0.05.csv"));
  EXPECT_TRUE(fs::exists(dir / "report_small.json"));
  for (const auto& e : fs::directory_iterator(dir))
    EXPECT_EQ(e.path().filename().string().find("comparison"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Scenario, DeterministicOutput) {
  const auto s = parse_config_string(std::string(kSmall) + "path = \"fast\"\n");
  const auto a = scratch("det_a"), b = scratch("det_b");
  write_outputs(run_scenario(s), a);
  write_outputs(run_scenario(s), b);
  EXPECT_EQ(read_file(a / "solution_small_0.05.csv"), read_file(b / "solution_small_0.05.csv"));
  EXPECT_EQ(read_file(a / "report_small.json"), read_file(b / "report_small.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}
