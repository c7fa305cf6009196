#include "pfold/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "pfold/util.hpp"

namespace pfold {

using nlohmann::ordered_json;

namespace {

struct TomlParser {
  const std::string& text;
  size_t pos = 0;
  int line = 1;

  explicit TomlParser(const std::string& t) : text(t) {}

  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorKind::Config, "line " + std::to_string(line) + ": " + msg);
  }

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char get() {
    char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }

  void skip_ws(bool newlines) {
    while (!eof()) {
      char c = peek();
      if (c == '#') {
        while (!eof() && peek() != '\n') get();
      } else if (c == ' ' || c == '\t' || c == '\r' || (newlines && c == '\n')) {
        get();
      } else {
        break;
      }
    }
  }

  std::string parse_key() {
    skip_ws(false);
    std::string key;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                      peek() == '-' || peek() == '.'))
      key += get();
    if (key.empty()) error("expected a key");
    return key;
  }

  ordered_json parse_value() {
    skip_ws(false);
    if (eof()) error("expected a value");
    char c = peek();
    if (c == '"') return parse_string();
    if (c == '{') return parse_inline_table();
    if (c == '[') return parse_array();
    std::string tok;
    while (!eof() && peek() != '\n' && peek() != ',' && peek() != '}' && peek() != ']' &&
           peek() != '#')
      tok += get();
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.pop_back();
    if (tok == "true") return true;
    if (tok == "false") return false;
    try {
      size_t used = 0;
      if (tok.find_first_of(".eE") == std::string::npos &&
          tok.find("inf") == std::string::npos && tok.find("nan") == std::string::npos) {
        long long v = std::stoll(tok, &used);
        if (used == tok.size()) return v;
      }
      double v = std::stod(tok, &used);
      if (used == tok.size()) return v;
    } catch (...) {
    }
    error("cannot parse value '" + tok + "'");
  }

  ordered_json parse_string() {
    get();  // opening quote
    std::string out;
    while (!eof() && peek() != '"') {
      char c = get();
      if (c == '\\' && !eof()) {
        char e = get();
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: error("unsupported escape");
        }
      } else {
        out += c;
      }
    }
    if (eof()) error("unterminated string");
    get();
    return out;
  }

  ordered_json parse_inline_table() {
    get();  // '{'
    ordered_json table = ordered_json::object();
    skip_ws(false);
    if (!eof() && peek() == '}') {
      get();
      return table;
    }
    while (true) {
      std::string key = parse_key();
      skip_ws(false);
      if (eof() || get() != '=') error("expected '=' in inline table");
      table[key] = parse_value();
      skip_ws(false);
      if (eof()) error("unterminated inline table");
      char c = get();
      if (c == '}') break;
      if (c != ',') error("expected ',' or '}' in inline table");
    }
    return table;
  }

  ordered_json parse_array() {
    get();  // '['
    ordered_json arr = ordered_json::array();
    skip_ws(true);
    if (!eof() && peek() == ']') {
      get();
      return arr;
    }
    while (true) {
      arr.push_back(parse_value());
      skip_ws(true);
      if (eof()) error("unterminated array");
      char c = get();
      if (c == ']') break;
      if (c != ',') error("expected ',' or ']' in array");
      skip_ws(true);
    }
    return arr;
  }

  ordered_json parse() {
    ordered_json root = ordered_json::object();
    ordered_json* current = &root;
    while (true) {
      skip_ws(true);
      if (eof()) break;
      if (peek() == '[') {
        get();
        std::string section = parse_key();
        skip_ws(false);
        if (eof() || get() != ']') error("unterminated section header");
        current = &root;
        std::istringstream parts(section);
        std::string part;
        while (std::getline(parts, part, '.')) {
          if (part.empty()) error("bad section name");
          current = &(*current)[part];
          if (!current->is_object() && !current->is_null()) error("section clashes with a key");
          if (current->is_null()) *current = ordered_json::object();
        }
        continue;
      }
      std::string key = parse_key();
      skip_ws(false);
      if (eof() || get() != '=') error("expected '=' after key '" + key + "'");
      (*current)[key] = parse_value();
      skip_ws(false);
      if (!eof() && peek() == '\n') get();
    }
    return root;
  }
};

[[noreturn]] void unknown_key(const std::string& path) {
  fail(ErrorKind::Config, "unknown config key '" + path + "'");
}

void expect_keys(const ordered_json& obj, const std::string& prefix,
                 std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) unknown_key(prefix.empty() ? it.key() : prefix + "." + it.key());
  }
}

double require_number(const ordered_json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key))
    fail(ErrorKind::Config, "missing required config key '" + path + "." + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(ErrorKind::Config, "config key '" + path + "." + key + "' must be a number");
  return v.get<double>();
}

double number_or(const ordered_json& obj, const char* key, double def) {
  if (!obj.contains(key)) return def;
  return obj.at(key).get<double>();
}

bool bool_or(const ordered_json& obj, const char* key, bool def) {
  if (!obj.contains(key)) return def;
  return obj.at(key).get<bool>();
}

}  // namespace

ordered_json parse_config_text(const std::string& text) {
  size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return ordered_json::parse(text);
    } catch (const std::exception& e) {
      fail(ErrorKind::Config, std::string("JSON config parse failure: ") + e.what());
    }
  }
  TomlParser parser(text);
  return parser.parse();
}

RadialGrid ScenarioConfig::make_grid() const {
  const double g = grid.gamma > 0.0 ? grid.gamma : default_grading(problem.p);
  return RadialGrid::graded(problem.radius, problem.n, grid.points, g);
}

nlohmann::ordered_json ScenarioConfig::to_json() const {
  ordered_json j;
  j["problem"] = {{"p", problem.p},
                  {"n", problem.n},
                  {"radius", problem.radius},
                  {"nonlinearity", {{"kind", problem.nonlinearity.name()}}}};
  if (problem.nonlinearity.kind != NonlinearityKind::Exponential)
    j["problem"]["nonlinearity"]["m"] = problem.nonlinearity.m;
  j["sweep"] = {{"a_min", sweep.a_min},
                {"a_max", sweep.a_max},
                {"steps", sweep.steps},
                {"refine", sweep.refine}};
  j["tolerances"] = {
      {"ode", tolerances.ode}, {"root", tolerances.root}, {"quadrature", tolerances.quadrature}};
  j["grid"] = {{"points", grid.points}, {"gamma", grid.gamma}};
  j["outputs"] = {{"directory", outputs.directory},
                  {"profiles", outputs.profiles},
                  {"gnuplot", outputs.gnuplot}};
  j["seed"] = seed;
  return j;
}

ScenarioConfig scenario_from_json(const ordered_json& j) {
  expect_keys(j, "", {"problem", "sweep", "tolerances", "grid", "outputs", "seed"});
  if (!j.contains("problem")) fail(ErrorKind::Config, "missing required config key 'problem'");
  const auto& pj = j.at("problem");
  expect_keys(pj, "problem", {"p", "n", "radius", "nonlinearity"});
  if (!pj.contains("nonlinearity"))
    fail(ErrorKind::Config, "missing required config key 'problem.nonlinearity'");
  const auto& nj = pj.at("nonlinearity");
  expect_keys(nj, "problem.nonlinearity", {"kind", "m"});
  if (!nj.contains("kind"))
    fail(ErrorKind::Config, "missing required config key 'problem.nonlinearity.kind'");

  NonlinearitySpec nl;
  const std::string kind = nj.at("kind").get<std::string>();
  if (kind == "exponential") {
    nl = NonlinearitySpec::exponential();
  } else if (kind == "power") {
    nl = NonlinearitySpec::power(require_number(nj, "problem.nonlinearity", "m"));
  } else if (kind == "mems") {
    nl = NonlinearitySpec::mems(require_number(nj, "problem.nonlinearity", "m"));
  } else {
    fail(ErrorKind::Config, "problem.nonlinearity.kind must be exponential|power|mems");
  }

  ScenarioConfig cfg;
  try {
    cfg.problem = ProblemSpec(require_number(pj, "problem", "p"), require_number(pj, "problem", "n"),
                              nl, number_or(pj, "radius", 1.0));
  } catch (const Error& e) {
    fail(ErrorKind::Config, std::string("problem: ") + e.what());
  }

  if (j.contains("sweep")) {
    const auto& sj = j.at("sweep");
    expect_keys(sj, "sweep", {"a_min", "a_max", "steps", "refine"});
    cfg.sweep.a_min = number_or(sj, "a_min", cfg.sweep.a_min);
    cfg.sweep.a_max = number_or(sj, "a_max", cfg.sweep.a_max);
    cfg.sweep.steps = static_cast<int>(number_or(sj, "steps", cfg.sweep.steps));
    cfg.sweep.refine = bool_or(sj, "refine", cfg.sweep.refine);
  }
  if (j.contains("tolerances")) {
    const auto& tj = j.at("tolerances");
    expect_keys(tj, "tolerances", {"ode", "root", "quadrature"});
    cfg.tolerances.ode = number_or(tj, "ode", cfg.tolerances.ode);
    cfg.tolerances.root = number_or(tj, "root", cfg.tolerances.root);
    cfg.tolerances.quadrature = number_or(tj, "quadrature", cfg.tolerances.quadrature);
  }
  if (j.contains("grid")) {
    const auto& gj = j.at("grid");
    expect_keys(gj, "grid", {"points", "gamma"});
    cfg.grid.points = static_cast<int>(number_or(gj, "points", cfg.grid.points));
    cfg.grid.gamma = number_or(gj, "gamma", cfg.grid.gamma);
  }
  if (j.contains("outputs")) {
    const auto& oj = j.at("outputs");
    expect_keys(oj, "outputs", {"directory", "profiles", "gnuplot"});
    if (oj.contains("directory")) cfg.outputs.directory = oj.at("directory").get<std::string>();
    cfg.outputs.profiles = bool_or(oj, "profiles", cfg.outputs.profiles);
    cfg.outputs.gnuplot = bool_or(oj, "gnuplot", cfg.outputs.gnuplot);
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return scenario_from_json(parse_config_text(buf.str()));
}

}  // namespace pfold
