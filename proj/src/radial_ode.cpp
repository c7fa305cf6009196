#include "pfold/radial_ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "pfold/roots.hpp"

namespace pfold {

ProblemSpec::ProblemSpec(double p_, double n_, NonlinearitySpec nl, double radius_)
    : p(p_), n(n_), nonlinearity(nl), radius(radius_) {
  if (!(p > 1.0 && p <= 2.0)) fail(ErrorKind::Parameter, "p must lie in (1, 2]");
  if (!(n >= 2.0)) fail(ErrorKind::Parameter, "dimension must satisfy n >= 2");
  if (!(radius > 0.0)) fail(ErrorKind::Parameter, "ball radius must be positive");
  validate(nonlinearity, p);
}

double phi_p(double s, double p) {
  if (s == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(s), p - 1.0), s);
}

double phi_p_inv(double s, double p) {
  if (s == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(s), 1.0 / (p - 1.0)), s);
}

double RadialSolution::value_at(double r) const {
  auto slopes = pchip_slopes(grid.nodes, u);
  return pchip_eval(grid.nodes, u, slopes, r);
}

namespace {

// Dormand-Prince 5(4) coefficients.
struct Dopri {
  static constexpr double c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static constexpr double a[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
  };
  // y5 - y4 error coefficients
  static constexpr double e[7] = {71.0 / 57600,    0.0,         -71.0 / 16695, 71.0 / 1920,
                                  -17253.0 / 339200, 22.0 / 525, -1.0 / 40};
};

struct State {
  double u, W;  // W = phi_p(u') = w / r^{n-1}
};

// Log-radius flux system: tau = log(r/R), so the singular solution is linear
// in tau and deep startup layers cost only O(|tau0|) steps.
struct FluxOde {
  const ProblemSpec& prob;
  double lambda;

  State rhs(double tau, const State& y) const {
    const double r = prob.radius * std::exp(tau);
    State d;
    d.u = r * phi_p_inv(y.W, prob.p);
    d.W = -lambda * r * eval_f(prob.nonlinearity, y.u) + (1.0 - prob.n) * y.W;
    return d;
  }
};

// Integrates from tau0 to tau1, adapting the step; y updated in place.
void integrate_segment(const FluxOde& ode, double tau0, double tau1, State& y, double rtol,
                       double atol_u, double& h) {
  double tau = tau0;
  const double span = tau1 - tau0;
  const double hmin = std::max(1e-13, 1e-12 * std::abs(span));
  std::array<State, 7> k;
  while (tau < tau1) {
    h = std::min(h, tau1 - tau);
    k[0] = ode.rhs(tau, y);
    bool accepted = false;
    while (!accepted) {
      for (int s = 1; s < 7; ++s) {
        State ys = y;
        for (int j = 0; j < s; ++j) {
          ys.u += h * Dopri::a[s][j] * k[j].u;
          ys.W += h * Dopri::a[s][j] * k[j].W;
        }
        k[s] = ode.rhs(tau + Dopri::c[s] * h, ys);
      }
      double err_u = 0.0, err_W = 0.0;
      for (int s = 0; s < 7; ++s) {
        err_u += Dopri::e[s] * k[s].u;
        err_W += Dopri::e[s] * k[s].W;
      }
      err_u *= h;
      err_W *= h;
      // k[6] was evaluated at the 5th-order result (FSAL row)
      State y5 = y;
      for (int j = 0; j < 6; ++j) {
        y5.u += h * Dopri::a[6][j] * k[j].u;
        y5.W += h * Dopri::a[6][j] * k[j].W;
      }
      const double scale_u = atol_u + rtol * std::max(std::abs(y.u), std::abs(y5.u));
      const double scale_W = 1e-300 + rtol * std::max(std::abs(y.W), std::abs(y5.W));
      const double err = std::max(std::abs(err_u) / scale_u, std::abs(err_W) / scale_W);
      if (err <= 1.0) {
        tau += h;
        y = y5;
        k[0] = k[6];
        h *= std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 1.0, 5.0);
        accepted = true;
      } else {
        h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9);
        if (h < hmin) fail(ErrorKind::Stiffness, "step size underflow in radial shoot");
      }
    }
  }
}

}  // namespace

RadialSolution shoot(const ProblemSpec& prob, double a, double lambda, const RadialGrid& grid,
                     double ode_tol) {
  if (!(a > 0.0)) fail(ErrorKind::Parameter, "center value a must be positive");
  if (lambda < 0.0) fail(ErrorKind::Parameter, "lambda must be nonnegative");
  if (prob.nonlinearity.kind == NonlinearityKind::Mems && a >= 1.0)
    fail(ErrorKind::Quench, "MEMS center value must stay below 1");
  if (std::abs(grid.dim - prob.n) > 1e-12 || std::abs(grid.radius - prob.radius) > 1e-12)
    fail(ErrorKind::Parameter, "grid does not match problem dimension/radius");

  const double R = prob.radius, n = prob.n, p = prob.p;
  const double pp = prob.p_conjugate();
  const double fa = eval_f(prob.nonlinearity, a);

  // Startup radius: two-term expansion u = a - ((p-1)/p)(lambda f(a)/n)^{1/(p-1)} r^{p'},
  // w = -lambda f(a) r^n / n, truncated where the drop is below resolution.
  double r0 = std::min(1e-6 * R, 0.5 * grid.nodes.front());
  double drop_coeff = 0.0;
  if (lambda * fa > 0.0) {
    drop_coeff = (p - 1.0) / p * std::pow(lambda * fa / n, 1.0 / (p - 1.0));
    const double delta = std::min(1e-10, 0.01 * ode_tol) * (1.0 + std::abs(a));
    const double r_delta = std::pow(delta / drop_coeff, 1.0 / pp);
    r0 = std::min(r0, std::max(r_delta, 1e-150 * R));
  }

  RadialSolution sol;
  sol.lambda = lambda;
  sol.center_value = a;
  sol.grid = grid;
  sol.solver_tol = ode_tol;
  const int N = grid.size();
  sol.u.resize(N);
  sol.du.resize(N);
  sol.w.resize(N);

  FluxOde ode{prob, lambda};
  State y;
  y.u = a - drop_coeff * std::pow(r0, pp);
  y.W = -lambda * fa * r0 / n;

  double tau = std::log(r0 / R);
  double h = std::min(0.05, (std::log(grid.nodes.front() / R) - tau));
  const double atol_u = ode_tol * std::max(1.0, std::abs(a));
  const double quench_sup = prob.nonlinearity.domain_sup();
  for (int i = 0; i < N; ++i) {
    const double tau_i = (i == N - 1) ? 0.0 : std::log(grid.nodes[i] / R);
    integrate_segment(ode, tau, tau_i, y, ode_tol, atol_u, h);
    tau = tau_i;
    if (y.u >= quench_sup) fail(ErrorKind::Quench, "profile reached the MEMS quench level");
    sol.u[i] = y.u;
    sol.du[i] = phi_p_inv(y.W, p);
    sol.w[i] = y.W * std::pow(grid.nodes[i], n - 1.0);
  }
  sol.boundary_residual = sol.u.back();
  return sol;
}

BranchSolveResult solve_on_branch(const ProblemSpec& prob, double a, const RadialGrid& grid,
                                  const Tolerances& tols, std::optional<double> lambda_hint) {
  if (!(a > 0.0)) fail(ErrorKind::Parameter, "center value a must be positive");
  int shots = 0;
  RadialSolution last;
  auto residual = [&](double lam) {
    last = shoot(prob, a, lam, grid, tols.ode);
    ++shots;
    return last.boundary_residual;
  };

  // Linearized estimate lambda ~ (a / T(0))^{p-1} / f(0), T the p-torsion
  // profile, seeds the bracket when no warm start is available.
  const double p = prob.p, n = prob.n, R = prob.radius;
  const double torsion0 =
      (p - 1.0) / p * std::pow(1.0 / n, 1.0 / (p - 1.0)) * std::pow(R, prob.p_conjugate());
  double guess = lambda_hint.value_or(std::pow(a / torsion0, p - 1.0) / f_zero(prob.nonlinearity));
  guess = std::max(guess, 1e-12);

  double lo = 0.0, flo = a;  // residual at lambda = 0 is a > 0, no shot needed
  double hi = guess, fhi = residual(hi);
  while (fhi > 0.0) {
    lo = hi;
    flo = fhi;
    hi *= 2.0;
    if (hi > 1e6)
      fail(ErrorKind::Bracket, "no sign change in lambda bracket up to 1e6 (a = " +
                                   std::to_string(a) + ", residual " + std::to_string(fhi) + ")");
    fhi = residual(hi);
  }

  // Brent narrows the bracket; we then accept a lambda on the nonnegative-
  // residual side so reported branch values approach the extremal parameter
  // from below instead of straddling it with solver noise.
  const double xtol = tols.root * std::max(1.0, hi);
  const double root = brent_root(residual, lo, hi, flo, fhi, xtol);
  const double residual_budget = std::max(50.0 * tols.ode * std::max(1.0, a), 1e-14);

  double left = root, right = root;
  double res_left = residual(root);
  if (res_left < 0.0) {
    right = root;
    double step = xtol;
    while (res_left < 0.0) {
      left = root - step;
      step *= 2.0;
      res_left = residual(left);
      if (step > std::max(1.0, root)) fail(ErrorKind::Bracket, "lost the root while polishing");
    }
  } else {
    double step = xtol;
    double res_right = res_left;
    while (res_right >= 0.0) {
      right = root + step;
      step *= 2.0;
      res_right = residual(right);
      if (step > std::max(1.0, root)) fail(ErrorKind::Bracket, "lost the root while polishing");
    }
    res_left = residual(left);
  }
  for (int it = 0; it < 100 && res_left > 0.5 * residual_budget; ++it) {
    const double mid = 0.5 * (left + right);
    const double rm = residual(mid);
    if (rm >= 0.0) {
      left = mid;
      res_left = rm;
    } else {
      right = mid;
    }
  }
  // Land inside a strictly positive residual window: the accepted lambda then
  // sits a deterministic margin below the root, clearing roundoff-level
  // ambiguity when the branch has saturated toward its limit value.
  const double window_lo = 0.05 * residual_budget, window_hi = 0.5 * residual_budget;
  if (res_left < window_lo) {
    double step = std::max(xtol, right - left);
    double outer = std::max(left - step, 0.5 * left);
    double res_outer = residual(outer);
    for (int it = 0; it < 40 && res_outer < window_lo; ++it) {
      step *= 2.0;
      outer = left - step;
      if (outer <= 0.0) {
        outer = 0.5 * left;
        res_outer = residual(outer);
        break;
      }
      res_outer = residual(outer);
    }
    for (int it = 0; it < 60; ++it) {
      if (res_outer >= window_lo && res_outer <= window_hi) break;
      const double mid = 0.5 * (outer + left);
      const double rm = residual(mid);
      if (rm > window_hi) {
        outer = mid;
        res_outer = rm;
      } else if (rm < window_lo) {
        left = mid;
      } else {
        outer = mid;
        res_outer = rm;
        break;
      }
    }
    left = outer;
  }
  residual(left);  // refresh the cached profile at the accepted lambda

  BranchSolveResult out;
  out.lambda = left;
  out.solution = last;
  out.solution.solver_tol = residual_budget;
  out.shots = shots;
  if (out.solution.boundary_residual < -1e-15 ||
      out.solution.boundary_residual > residual_budget)
    fail(ErrorKind::Tolerance, "boundary residual outside budget after root refinement");
  return out;
}

RadialSolution solve_linear_rhs(const ProblemSpec& prob, std::span<const double> g,
                                const RadialGrid& grid) {
  const int N = grid.size();
  if (static_cast<int>(g.size()) != N) fail(ErrorKind::Parameter, "rhs sample size mismatch");
  const double p = prob.p, n = prob.n;

  // integrability of g near 0 (g in L^m for some m > 1 needs decay milder
  // than r^{-n})
  if (g[0] != 0.0 && g[1] != 0.0 && (g[0] > 0) == (g[1] > 0)) {
    const double alpha =
        std::log(std::abs(g[1] / g[0])) / std::log(grid.nodes[1] / grid.nodes[0]);
    if (alpha <= -n + 1e-9)
      fail(ErrorKind::Divergence, "rhs is not integrable against the radial weight");
  }

  // G(t) = int_0^t s^{n-1} g ds; u(r) = int_r^R phi_p_inv(G(t)/t^{n-1}) dt
  auto G = cumulative_radial_integral(grid, g);
  std::vector<double> H(N);
  for (int i = 0; i < N; ++i)
    H[i] = phi_p_inv(G[i] / std::pow(grid.nodes[i], n - 1.0), p);

  RadialSolution sol;
  sol.grid = grid;
  sol.lambda = 0.0;
  sol.u.assign(N, 0.0);
  sol.du.resize(N);
  sol.w.resize(N);
  for (int i = 0; i < N; ++i) {
    sol.du[i] = -H[i];
    sol.w[i] = -G[i];
  }
  // cumulative integral of H from R inward; the power-law interval rule is
  // exact for the r^{1/(p-1)} and 1/r shapes H takes near the origin
  for (int i = N - 2; i >= 0; --i)
    sol.u[i] = sol.u[i + 1] +
               power_interval_integral(grid.nodes[i], H[i], grid.nodes[i + 1], H[i + 1]);
  // center value via the startup expansion with the locally fitted rhs level
  const double g0 = g[0];
  double correction = 0.0;
  if (g0 > 0.0)
    correction = (p - 1.0) / p * std::pow(g0 / n, 1.0 / (p - 1.0)) *
                 std::pow(grid.nodes[0], prob.p_conjugate());
  sol.center_value = sol.u[0] + correction;
  sol.boundary_residual = 0.0;
  sol.solver_tol = 0.0;
  return sol;
}

SingularOracle singular_oracle(const ProblemSpec& prob, const RadialGrid& grid) {
  if (prob.nonlinearity.kind != NonlinearityKind::Exponential)
    fail(ErrorKind::Parameter, "singular oracle requires the exponential nonlinearity");
  if (!(prob.n > prob.p)) fail(ErrorKind::Parameter, "singular oracle requires n > p");
  const double p = prob.p, n = prob.n, R = prob.radius;

  SingularOracle out;
  out.lambda = std::pow(p, p - 1.0) * (n - p) / std::pow(R, p);
  out.threshold_dim = prob.singular_threshold();
  RadialSolution& s = out.profile;
  s.grid = grid;
  s.lambda = out.lambda;
  s.singular_profile = true;
  const int N = grid.size();
  s.u.resize(N);
  s.du.resize(N);
  s.w.resize(N);
  for (int i = 0; i < N; ++i) {
    const double r = grid.nodes[i];
    s.u[i] = -p * std::log(r / R);
    s.du[i] = -p / r;
    s.w[i] = -std::pow(p, p - 1.0) * std::pow(r, n - p);
  }
  s.center_value = s.u[0];
  s.boundary_residual = 0.0;
  s.solver_tol = 0.0;
  return out;
}

double singular_residual(const ProblemSpec& prob, double r) {
  const double p = prob.p, n = prob.n, R = prob.radius;
  const double lambda_s = std::pow(p, p - 1.0) * (n - p) / std::pow(R, p);
  const double us = -p * std::log(r / R);
  const double dus = -p / r;
  // analytic flux derivative vs the reaction term
  const double dw = -std::pow(p, p - 1.0) * (n - p) * std::pow(r, n - p - 1.0);
  const double reaction = -lambda_s * std::pow(r, n - 1.0) * eval_f(prob.nonlinearity, us);
  const double ode_res = std::abs(dw - reaction);
  // flux round trip back to u'
  const double w = std::pow(r, n - 1.0) * phi_p(dus, p);
  const double inv_res = std::abs(phi_p_inv(w / std::pow(r, n - 1.0), p) - dus);
  return std::max(ode_res, inv_res);
}

double weak_form_residual(const ProblemSpec& prob, const RadialSolution& sol,
                          const std::function<double(double)>& test_phi,
                          const std::function<double(double)>& test_dphi) {
  const int N = sol.grid.size();
  std::vector<double> lhs(N), rhs(N);
  for (int i = 0; i < N; ++i) {
    const double r = sol.grid.nodes[i];
    lhs[i] = phi_p(sol.du[i], prob.p) * test_dphi(r);
    rhs[i] = sol.lambda * eval_f(prob.nonlinearity, sol.u[i]) * test_phi(r);
  }
  auto L = integrate(sol.grid, lhs);
  auto Rv = integrate(sol.grid, rhs);
  const double scale = std::max({std::abs(L.value), std::abs(Rv.value), 1e-300});
  return std::abs(L.value - Rv.value) / scale;
}

}  // namespace pfold
