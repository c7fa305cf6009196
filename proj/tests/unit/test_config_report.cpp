#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pfold/config.hpp"
#include "pfold/report.hpp"
#include "pfold/runner.hpp"
#include "pfold/util.hpp"

using namespace pfold;

TEST_SUITE("config_report") {

TEST_CASE("TOML subset parsing") {
  const std::string text = R"(
# scenario
seed = 42

[problem]
p = 1.5
n = 14.0
radius = 1.0
nonlinearity = { kind = "power", m = 3.0 }

[sweep]
a_min = 0.1
a_max = 30.0
steps = 40
refine = true

[tolerances]
ode = 1e-12

[grid]
points = 2048
gamma = 2.5

[outputs]
directory = "out"
profiles = false
)";
  auto cfg = scenario_from_json(parse_config_text(text));
  CHECK(cfg.problem.p == 1.5);
  CHECK(cfg.problem.n == 14.0);
  CHECK(cfg.problem.nonlinearity.kind == NonlinearityKind::Power);
  CHECK(cfg.problem.nonlinearity.m == 3.0);
  CHECK(cfg.sweep.a_max == 30.0);
  CHECK(cfg.sweep.steps == 40);
  CHECK(cfg.tolerances.ode == 1e-12);
  CHECK(cfg.tolerances.root == 1e-10);  // default preserved
  CHECK(cfg.grid.points == 2048);
  CHECK(cfg.grid.gamma == 2.5);
  CHECK(cfg.outputs.directory == "out");
  CHECK(cfg.seed == 42);
}

TEST_CASE("JSON config is accepted directly") {
  const std::string text = R"({
    "problem": {"p": 2.0, "n": 2.0, "nonlinearity": {"kind": "exponential"}}
  })";
  auto cfg = scenario_from_json(parse_config_text(text));
  CHECK(cfg.problem.p == 2.0);
  CHECK(cfg.problem.nonlinearity.kind == NonlinearityKind::Exponential);
}

TEST_CASE("unknown keys are rejected with their path") {
  const std::string text = R"(
[problem]
p = 1.5
n = 3.0
nonlinearty = { kind = "exponential" }
)";
  try {
    scenario_from_json(parse_config_text(text));
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("problem.nonlinearty") != std::string::npos);
  }
}

TEST_CASE("missing nonlinearity carries the key path") {
  const std::string text = R"(
[problem]
p = 1.5
n = 3.0
)";
  try {
    scenario_from_json(parse_config_text(text));
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("problem.nonlinearity") != std::string::npos);
  }
}

TEST_CASE("invalid problem parameters become config errors") {
  const std::string text = R"(
[problem]
p = 2.5
n = 3.0
nonlinearity = { kind = "exponential" }
)";
  CHECK_THROWS_AS(scenario_from_json(parse_config_text(text)), Error);
  // power with m <= p-1 rejected through the same path
  const std::string text2 = R"(
[problem]
p = 1.5
n = 3.0
nonlinearity = { kind = "power", m = 0.2 }
)";
  CHECK_THROWS_AS(scenario_from_json(parse_config_text(text2)), Error);
}

TEST_CASE("default grid grading follows max(2, p'/(p'-1))") {
  const std::string text = R"(
[problem]
p = 1.5
n = 3.0
nonlinearity = { kind = "exponential" }
)";
  auto cfg = scenario_from_json(parse_config_text(text));
  auto grid = cfg.make_grid();
  CHECK(grid.gamma == 2.0);  // p'/(p'-1) = p <= 2 on the singular range
  CHECK(grid.size() == 1024);
}

TEST_CASE("17-digit float serialization round-trips bit-exactly") {
  for (double v : {1.0 / 3.0, 3.194528049465325, 15.309310892394862, 1e-300, -2.5e17}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
}

TEST_CASE("json dump is deterministic and insertion-ordered") {
  nlohmann::ordered_json j;
  j["zebra"] = 1.0 / 3.0;
  j["alpha"] = {{"x", 2.0}, {"y", false}};
  j["list"] = {1.5, 2.5};
  const std::string a = dump_json_17(j);
  const std::string b = dump_json_17(j);
  CHECK(a == b);
  CHECK(a.find("zebra") < a.find("alpha"));  // insertion order, not alphabetical
  CHECK(a.find("0.33333333333333331") != std::string::npos);
}

TEST_CASE("atomic write and branch csv round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "pfold_test_io";
  fs::remove_all(dir);

  Branch branch;
  BranchPoint p1;
  p1.a = 0.1;
  p1.lambda = 1.0 / 3.0;
  p1.sup_norm = 0.1;
  p1.mu1 = 5.25;
  BranchPoint p2;
  p2.a = 0.2;
  p2.lambda = 0.123456789012345678;
  p2.sup_norm = 0.2;
  branch.points.push_back(p1);
  branch.points.push_back(p2);

  const std::string csv = branch_csv(branch);
  atomic_write(dir / "branch.csv", csv);
  std::ifstream in(dir / "branch.csv");
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == csv);

  auto rows = parse_branch_csv(buf.str());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].first == p1.a);
  CHECK(rows[0].second == p1.lambda);  // bit-exact through 17 digits
  CHECK(rows[1].second == p2.lambda);
  fs::remove_all(dir);
}

TEST_CASE("profile csv carries r,u,du,w columns") {
  RadialSolution sol;
  sol.grid = RadialGrid::graded(1.0, 2.0, 16, 2.0);
  sol.u.assign(16, 1.0);
  sol.du.assign(16, -0.5);
  sol.w.assign(16, -0.25);
  auto csv = profile_csv(sol);
  CHECK(csv.rfind("r,u,du,w\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
}

TEST_CASE("gnuplot companion references the csv") {
  auto script = branch_gnuplot_script("branch.csv");
  CHECK(script.find("branch.csv") != std::string::npos);
  CHECK(script.find("plot") != std::string::npos);
}

TEST_CASE("branch.csv feeds verify without loss") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "pfold_test_roundtrip";
  fs::remove_all(dir);

  ScenarioConfig cfg;
  cfg.problem = ProblemSpec(1.5, 5.0, NonlinearitySpec::exponential());
  cfg.sweep = {.a_min = 0.1, .a_max = 0.8, .steps = 16, .refine = false};
  cfg.grid.points = 512;
  cfg.outputs.directory = (dir / "branch").string();
  auto branch_result = run_branch(cfg);
  CHECK(branch_result.exit_code == 0);

  cfg.outputs.directory = (dir / "verify").string();
  VerifySource source;
  source.branch_csv = (dir / "branch" / "branch.csv").string();
  auto verify_result = run_verify(cfg, source);
  CHECK(verify_result.exit_code == 0);

  // the verified a-column matches the emitted branch bit-for-bit
  const auto& bpoints = branch_result.report.at("branch").at("points");
  const auto& vpoints = verify_result.report.at("points");
  REQUIRE(bpoints.size() == vpoints.size());
  for (size_t i = 0; i < bpoints.size(); ++i)
    CHECK(bpoints[i].at("a").get<double>() == vpoints[i].at("a").get<double>());

  const auto& agg = verify_result.report.at("aggregates");
  CHECK(agg.at("violations").get<int>() == 0);
  CHECK(agg.at("regime").get<std::string>() == "higher_dim");
  CHECK(agg.contains("sup_bound_constant_sup"));
  CHECK(agg.contains("gradient_ratio_part_a_plateaued"));
  fs::remove_all(dir);
}

TEST_CASE("MEMS branch runs through the runner") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "pfold_test_mems";
  fs::remove_all(dir);
  ScenarioConfig cfg;
  cfg.problem = ProblemSpec(1.5, 3.0, NonlinearitySpec::mems(2.0));
  cfg.sweep = {.a_min = 0.05, .a_max = 0.9, .steps = 16, .refine = false};
  cfg.grid.points = 256;
  cfg.outputs.directory = dir.string();
  auto result = run_branch(cfg);
  CHECK(result.exit_code == 0);
  CHECK(result.report.at("branch").at("points").size() > 0);
  CHECK(fs::exists(dir / "branch.json"));
  fs::remove_all(dir);
}

TEST_CASE("empty branch still emits a valid report") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "pfold_test_empty";
  fs::remove_all(dir);
  ScenarioConfig cfg;
  cfg.problem = ProblemSpec(1.5, 3.0, NonlinearitySpec::exponential());
  cfg.sweep = {.a_min = 0.1, .a_max = 1.0, .steps = 16, .refine = false};
  cfg.grid.points = 256;
  cfg.tolerances.ode = 1e-30;  // unreachable tolerance: every shot goes stiff
  cfg.outputs.directory = dir.string();
  auto result = run_branch(cfg);
  CHECK(result.exit_code == 1);
  CHECK(result.report.at("branch").at("points").empty());
  CHECK(result.report.at("branch").at("failures").size() > 0);
  CHECK(fs::exists(dir / "branch.json"));
  auto parsed = nlohmann::ordered_json::parse(std::ifstream(dir / "branch.json"));
  CHECK(parsed.at("branch").at("points").is_array());
  fs::remove_all(dir);
}

}  // TEST_SUITE
