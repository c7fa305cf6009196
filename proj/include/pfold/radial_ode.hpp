#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pfold/nonlinearity.hpp"
#include "pfold/quadrature.hpp"

namespace pfold {

// Full instance of the reaction-diffusion problem on the ball of radius R.
struct ProblemSpec {
  double p = 1.5;
  double n = 3.0;
  NonlinearitySpec nonlinearity;
  double radius = 1.0;

  ProblemSpec() = default;
  ProblemSpec(double p_, double n_, NonlinearitySpec nl, double radius_ = 1.0);

  double p_conjugate() const { return p / (p - 1.0); }
  double critical_dim() const { return p + 2.0; }            // n_p
  double singular_threshold() const { return p + 4.0 * p / (p - 1.0); }  // n_c
  double pp_prime() const { return p * p_conjugate(); }
};

struct Tolerances {
  double ode = 1e-9;
  double root = 1e-10;
  double quadrature = 1e-10;
};

// One radial solution profile. w is the flux r^{n-1} phi_p(u'); integrating w
// instead of u' keeps the system smooth through the origin where phi_p is
// non-differentiable for p < 2.
struct RadialSolution {
  double lambda = 0.0;
  double center_value = 0.0;  // u(0), or u(r_1) for the singular profile
  RadialGrid grid;
  std::vector<double> u;
  std::vector<double> du;
  std::vector<double> w;
  double boundary_residual = 0.0;  // u(R)
  double solver_tol = 0.0;
  bool singular_profile = false;

  double sup_norm() const { return center_value; }
  double value_at(double r) const;  // monotone cubic through the nodes
};

// phi_p(s) = |s|^{p-2} s with phi_p(0) = 0, and its exact inverse
// |s|^{p'-2} s.
double phi_p(double s, double p);
double phi_p_inv(double s, double p);

// Integrates the flux system u' = phi_p_inv(w / r^{n-1}), w' = -lambda
// r^{n-1} f(u) outward from a startup expansion near r = 0. The boundary
// residual u(R) is generally nonzero.
RadialSolution shoot(const ProblemSpec& problem, double a, double lambda, const RadialGrid& grid,
                     double ode_tol = 1e-9);

struct BranchSolveResult {
  double lambda = 0.0;
  RadialSolution solution;
  int shots = 0;
};

// Finds the lambda > 0 with u(R; a, lambda) = 0 by geometric bracket growth
// plus Brent iteration; the residual is strictly decreasing in lambda at
// fixed a. The accepted lambda sits on the nonnegative-residual side of the
// final bracket, so reported branch values approach the extremal parameter
// from below.
BranchSolveResult solve_on_branch(const ProblemSpec& problem, double a, const RadialGrid& grid,
                                  const Tolerances& tols = {},
                                  std::optional<double> lambda_hint = std::nullopt);

// Explicit quadrature solution of -Delta_p u = g with u(R) = 0:
// u(r) = int_r^R phi_p_inv(t^{1-n} int_0^t s^{n-1} g(s) ds) dt.
RadialSolution solve_linear_rhs(const ProblemSpec& problem, std::span<const double> g,
                                const RadialGrid& grid);

struct SingularOracle {
  double lambda = 0.0;          // p^{p-1}(n-p)/R^p
  double threshold_dim = 0.0;   // n_c = p + 4p/(p-1)
  RadialSolution profile;       // u(r) = -p log(r/R)
};

// Exact singular-solution oracle for the exponential nonlinearity, n > p.
SingularOracle singular_oracle(const ProblemSpec& problem, const RadialGrid& grid);

// Pointwise residual of (lambda_s, u_s) in the flux ODE at radius r: the
// analytic w' must cancel lambda r^{n-1} f(u_s), and phi_p_inv must invert
// the flux back to u_s'.
double singular_residual(const ProblemSpec& problem, double r);

// Relative weak-form residual
// |int |u'|^{p-2} u' phi' omega r^{n-1} - lambda int f(u) phi omega r^{n-1}|
// for a smooth test profile with phi(R) = 0, given by value/derivative
// callables.
double weak_form_residual(const ProblemSpec& problem, const RadialSolution& sol,
                          const std::function<double(double)>& test_phi,
                          const std::function<double(double)>& test_dphi);

}  // namespace pfold
