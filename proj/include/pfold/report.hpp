#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "pfold/branch.hpp"
#include "pfold/estimates.hpp"

namespace pfold {

// JSON serialization with deterministic field order and floats at 17
// significant digits (bit-exact round trips).
std::string dump_json_17(const nlohmann::ordered_json& j, int indent = 2);

// temp file + rename in the target directory
void atomic_write(const std::filesystem::path& path, const std::string& content);

nlohmann::ordered_json check_record_json(const CheckRecord& rec);

std::string profile_csv(const RadialSolution& sol);
std::string branch_csv(const Branch& branch);

// Parses a branch.csv back into (a, lambda) pairs; used by `verify --branch`.
std::vector<std::pair<double, double>> parse_branch_csv(const std::string& text);

// data-only plotting companion for a branch.csv
std::string branch_gnuplot_script(const std::string& csv_name);

}  // namespace pfold
