#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pfold/runner.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<double> p, n, radius, m;
  std::optional<std::string> kind;
  std::optional<double> a_min, a_max;
  std::optional<int> steps, grid_points;
  std::optional<double> gamma, ode_tol, root_tol, quad_tol;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  bool profiles = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "TOML or JSON scenario config");
  cmd->add_option("--p", f.p, "exponent p in (1, 2]");
  cmd->add_option("--n", f.n, "real dimension n >= 2");
  cmd->add_option("--radius", f.radius, "ball radius R");
  cmd->add_option("--kind", f.kind, "nonlinearity kind: exponential|power|mems");
  cmd->add_option("--m", f.m, "nonlinearity parameter m");
  cmd->add_option("--a-min", f.a_min, "sweep start center value");
  cmd->add_option("--a-max", f.a_max, "sweep end center value");
  cmd->add_option("--steps", f.steps, "sweep steps (>= 16)");
  cmd->add_option("--grid-points", f.grid_points, "radial grid nodes");
  cmd->add_option("--gamma", f.gamma, "grid grading exponent (0 = auto)");
  cmd->add_option("--ode-tol", f.ode_tol, "shooting tolerance");
  cmd->add_option("--root-tol", f.root_tol, "lambda root-find tolerance");
  cmd->add_option("--quad-tol", f.quad_tol, "quadrature tolerance");
  cmd->add_option("--out", f.out_dir, "output directory for artifacts");
  cmd->add_option("--seed", f.seed, "seed for randomized property batteries");
  cmd->add_flag("--profiles", f.profiles, "also emit profile CSV artifacts");
}

pfold::ScenarioConfig build_config(const CommonFlags& f) {
  pfold::ScenarioConfig cfg;
  bool have_problem = false;
  if (!f.config_path.empty()) {
    cfg = pfold::load_config_file(f.config_path);
    have_problem = true;
  }
  // flag overrides
  double p = f.p.value_or(have_problem ? cfg.problem.p : 1.5);
  double n = f.n.value_or(have_problem ? cfg.problem.n : 3.0);
  double radius = f.radius.value_or(have_problem ? cfg.problem.radius : 1.0);
  pfold::NonlinearitySpec nl =
      have_problem ? cfg.problem.nonlinearity : pfold::NonlinearitySpec::exponential();
  if (f.kind) {
    if (*f.kind == "exponential")
      nl = pfold::NonlinearitySpec::exponential();
    else if (*f.kind == "power")
      nl = pfold::NonlinearitySpec::power(f.m.value_or(nl.m));
    else if (*f.kind == "mems")
      nl = pfold::NonlinearitySpec::mems(f.m.value_or(nl.m));
    else
      pfold::fail(pfold::ErrorKind::Config, "--kind must be exponential|power|mems");
  } else if (f.m) {
    nl.m = *f.m;
  }
  cfg.problem = pfold::ProblemSpec(p, n, nl, radius);
  if (f.a_min) cfg.sweep.a_min = *f.a_min;
  if (f.a_max) cfg.sweep.a_max = *f.a_max;
  if (f.steps) cfg.sweep.steps = *f.steps;
  if (f.grid_points) cfg.grid.points = *f.grid_points;
  if (f.gamma) cfg.grid.gamma = *f.gamma;
  if (f.ode_tol) cfg.tolerances.ode = *f.ode_tol;
  if (f.root_tol) cfg.tolerances.root = *f.root_tol;
  if (f.quad_tol) cfg.tolerances.quadrature = *f.quad_tol;
  if (f.out_dir) cfg.outputs.directory = *f.out_dir;
  if (f.seed) cfg.seed = *f.seed;
  if (f.profiles) cfg.outputs.profiles = true;
  return cfg;
}

int finish(const pfold::RunResult& result) {
  std::cout << result.summary << "\n";
  for (const auto& path : result.artifacts) std::cout << "wrote " << path.string() << "\n";
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "pfold: minimal-branch continuation, extremal-parameter estimation and\n"
      "quantitative-estimate verification for -Delta_p u = lambda f(u) on the ball.\n"
      "Profiles are CSV with columns r,u,du,w; branches are CSV with columns\n"
      "a,lambda,sup_norm,mu1,nedev_integral,key_ineq_min_slack (key_ineq_min_slack\n"
      "is the minimum over a 20-point log s-grid of slack plus both quadrature\n"
      "error bounds). Reports are JSON with 17-significant-digit floats."};
  app.require_subcommand(1);

  CommonFlags flags;
  double a_value = 1.0;
  bool dump_eigenfunction = false;
  std::string branch_csv_path;
  double n_lo = 0.0, n_hi = 0.0;

  auto* solve = app.add_subcommand("solve", "solve one minimal-branch point at a given a");
  add_common(solve, flags);
  solve->add_option("--a", a_value, "center value u(0)")->required();

  auto* branch = app.add_subcommand("branch", "trace lambda(a), localize the fold or the tail");
  add_common(branch, flags);

  auto* stability = app.add_subcommand("stability", "first eigenvalue of the linearized operator");
  add_common(stability, flags);
  stability->add_option("--a", a_value, "center value u(0)")->required();
  stability->add_flag("--eigenfunction", dump_eigenfunction, "dump eigenfunction.csv");

  auto* verify = app.add_subcommand("verify", "run the estimate suite and emit report.json");
  add_common(verify, flags);
  auto* averify = verify->add_option("--a", a_value, "verify a single branch point");
  auto* bverify =
      verify->add_option("--branch", branch_csv_path, "re-solve and verify a branch.csv");
  averify->excludes(bverify);

  auto* oracle = app.add_subcommand("oracle", "exact singular-solution oracle (exponential)");
  add_common(oracle, flags);

  auto* scan = app.add_subcommand("threshold-scan", "locate the sign change of mu1(singular)");
  add_common(scan, flags);
  scan->add_option("--n-min", n_lo, "scan lower dimension")->required();
  scan->add_option("--n-max", n_hi, "scan upper dimension")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = build_config(flags);
    if (solve->parsed()) return finish(pfold::run_solve(cfg, a_value));
    if (branch->parsed()) return finish(pfold::run_branch(cfg));
    if (stability->parsed())
      return finish(pfold::run_stability(cfg, a_value, dump_eigenfunction));
    if (verify->parsed()) {
      pfold::VerifySource source;
      if (averify->count() > 0) source.a = a_value;
      if (bverify->count() > 0) source.branch_csv = branch_csv_path;
      return finish(pfold::run_verify(cfg, source));
    }
    if (oracle->parsed()) return finish(pfold::run_oracle(cfg));
    if (scan->parsed()) return finish(pfold::run_threshold_scan(cfg, n_lo, n_hi));
  } catch (const pfold::Error& e) {
    std::cerr << "pfold: " << e.what() << "\n";
    return e.kind() == pfold::ErrorKind::InvariantViolation ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "pfold: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
