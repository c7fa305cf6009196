#include "pfold/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pfold/util.hpp"

namespace pfold {

using nlohmann::ordered_json;

namespace {

void dump_value(const ordered_json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<size_t>(indent) * depth, ' ');
  const std::string pad_in(static_cast<size_t>(indent) * (depth + 1), ' ');
  switch (j.type()) {
    case ordered_json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      size_t i = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        out += pad_in + ordered_json(it.key()).dump() + ": ";
        dump_value(it.value(), out, indent, depth + 1);
        if (i + 1 < j.size()) out += ",";
        out += "\n";
      }
      out += pad + "}";
      return;
    }
    case ordered_json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (size_t i = 0; i < j.size(); ++i) {
        out += pad_in;
        dump_value(j[i], out, indent, depth + 1);
        if (i + 1 < j.size()) out += ",";
        out += "\n";
      }
      out += pad + "]";
      return;
    }
    case ordered_json::value_t::number_float: {
      const double v = j.get<double>();
      if (std::isfinite(v))
        out += format_double(v);
      else
        out += v > 0 ? "\"inf\"" : (v < 0 ? "\"-inf\"" : "\"nan\"");
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string dump_json_17(const ordered_json& j, int indent) {
  std::string out;
  dump_value(j, out, indent, 0);
  out += "\n";
  return out;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) fail(ErrorKind::Io, "short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "rename to '" + path.string() + "' failed: " + ec.message());
}

ordered_json check_record_json(const CheckRecord& rec) {
  ordered_json j;
  j["name"] = rec.name;
  j["module"] = rec.module;
  j["param"] = rec.param;
  j["lhs"] = rec.lhs;
  j["rhs"] = rec.rhs;
  j["slack"] = rec.slack;
  j["err_lhs"] = rec.err_lhs;
  j["err_rhs"] = rec.err_rhs;
  j["empirical_constant"] = rec.empirical_constant;
  j["holds_within_error"] = rec.holds_within_error;
  return j;
}

std::string profile_csv(const RadialSolution& sol) {
  std::string out = "r,u,du,w\n";
  for (int i = 0; i < sol.grid.size(); ++i) {
    out += format_double(sol.grid.nodes[i]) + "," + format_double(sol.u[i]) + "," +
           format_double(sol.du[i]) + "," + format_double(sol.w[i]) + "\n";
  }
  return out;
}

std::string branch_csv(const Branch& branch) {
  std::string out = "a,lambda,sup_norm,mu1,nedev_integral,key_ineq_min_slack\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("nan");
  };
  for (const auto& pt : branch.points) {
    out += format_double(pt.a) + "," + format_double(pt.lambda) + "," +
           format_double(pt.sup_norm) + "," + opt(pt.mu1) + "," + opt(pt.nedev_integral) + "," +
           opt(pt.key_ineq_min_slack) + "\n";
  }
  return out;
}

std::vector<std::pair<double, double>> parse_branch_csv(const std::string& text) {
  std::vector<std::pair<double, double>> out;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Io, "empty branch csv");
  if (line.rfind("a,lambda", 0) != 0)
    fail(ErrorKind::Io, "branch csv must start with the 'a,lambda,...' header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string a_str, lam_str;
    if (!std::getline(fields, a_str, ',') || !std::getline(fields, lam_str, ','))
      fail(ErrorKind::Io, "malformed branch csv line: " + line);
    out.emplace_back(std::stod(a_str), std::stod(lam_str));
  }
  return out;
}

std::string branch_gnuplot_script(const std::string& csv_name) {
  std::string s;
  s += "set datafile separator ','\n";
  s += "set key autotitle columnhead\n";
  s += "set xlabel 'a = u(0)'\n";
  s += "set ylabel 'lambda'\n";
  s += "plot '" + csv_name + "' using 1:2 with linespoints title 'lambda(a)'\n";
  s += "pause -1\n";
  return s;
}

}  // namespace pfold
