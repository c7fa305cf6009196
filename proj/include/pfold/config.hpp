#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "pfold/radial_ode.hpp"

namespace pfold {

struct GridConfig {
  int points = 1024;
  double gamma = 0.0;  // 0 = auto: max(2, p'/(p'-1))
};

struct SweepConfig {
  double a_min = 0.05;
  double a_max = 8.0;
  int steps = 32;
  bool refine = true;
};

struct OutputConfig {
  std::string directory = ".";
  bool profiles = false;
  bool gnuplot = true;
};

struct ScenarioConfig {
  ProblemSpec problem;
  SweepConfig sweep;
  Tolerances tolerances;
  GridConfig grid;
  OutputConfig outputs;
  std::uint64_t seed = 0;

  RadialGrid make_grid() const;
  nlohmann::ordered_json to_json() const;
};

// Parses the TOML subset used by config files (sections, key = value with
// strings, numbers, booleans, arrays and inline tables, # comments) into a
// JSON tree. JSON input (leading '{') is accepted directly.
nlohmann::ordered_json parse_config_text(const std::string& text);

// Validates and converts; unknown keys are rejected with their path.
ScenarioConfig scenario_from_json(const nlohmann::ordered_json& j);

ScenarioConfig load_config_file(const std::string& path);

}  // namespace pfold
