#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pfold/config.hpp"

namespace pfold {

// Scenario orchestration behind the CLI. Exit status conventions:
// 0 all hard checks pass, 1 solver/config failure, 2 property violation.
struct RunResult {
  int exit_code = 0;
  nlohmann::ordered_json report;
  std::vector<std::filesystem::path> artifacts;
  std::string summary;  // one-line human text printed by the CLI
};

struct VerifySource {
  std::optional<double> a;          // single-point verify
  std::optional<std::string> branch_csv;  // re-solve the a-column of a branch.csv
};

RunResult run_solve(const ScenarioConfig& cfg, double a);
RunResult run_branch(const ScenarioConfig& cfg);
RunResult run_stability(const ScenarioConfig& cfg, double a, bool dump_eigenfunction = false);
RunResult run_verify(const ScenarioConfig& cfg, const VerifySource& source);
RunResult run_oracle(const ScenarioConfig& cfg);
RunResult run_threshold_scan(const ScenarioConfig& cfg, double n_lo, double n_hi);

}  // namespace pfold
