#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pfold/errors.hpp"

namespace pfold {

enum class NonlinearityKind { Exponential, Power, Mems };

// Reaction term f(u): e^t, (1+t)^m, or (1-t)^{-m}. Dimensionless.
struct NonlinearitySpec {
  NonlinearityKind kind = NonlinearityKind::Exponential;
  double m = 0.0;

  static NonlinearitySpec exponential() { return {NonlinearityKind::Exponential, 0.0}; }
  static NonlinearitySpec power(double m) { return {NonlinearityKind::Power, m}; }
  static NonlinearitySpec mems(double m) { return {NonlinearityKind::Mems, m}; }

  std::string name() const;
  // Upper end of the evaluation domain (1 for MEMS, +inf otherwise).
  double domain_sup() const;
};

// Power requires m > p-1; MEMS requires m > 0. p must lie in (1, 2].
void validate(const NonlinearitySpec& spec, double p);

double eval_f(const NonlinearitySpec& spec, double t);
double eval_df(const NonlinearitySpec& spec, double t);
double f_zero(const NonlinearitySpec& spec);  // f(0)

// psi(t) = (f(t) - f(0))^{1/(p-1)} and its analytic derivative.
double psi(const NonlinearitySpec& spec, double p, double t);
double dpsi(const NonlinearitySpec& spec, double p, double t);

// g(t) = \int_0^t psi'(s)^2 ds by adaptive quadrature;
// h(t) = psi(t) psi'(t) - g(t), the algebraic form of
// \int_0^t (psi'(t) - psi'(s)) psi'(s) ds.
double g_integral(const NonlinearitySpec& spec, double p, double t, double abs_tol = 1e-10,
                  double* err_out = nullptr);
double h_integral(const NonlinearitySpec& spec, double p, double t, double abs_tol = 1e-10,
                  double* err_out = nullptr);

// g at many points at once (ts ascending); shares panel work between levels.
std::vector<double> g_integral_batch(const NonlinearitySpec& spec, double p,
                                     std::span<const double> ts, double abs_tol = 1e-10,
                                     double* err_out = nullptr);

struct AssumptionReport {
  bool positive = false;
  bool increasing = false;
  bool superlinear = false;            // f(t)/t^{p-1} diverges monotonically on the tail
  bool asymptotically_convex = false;  // f^{1/(p-1)} convex beyond the detected threshold
  double convexity_threshold = 0.0;    // detected T
  double psi_halfbound_threshold = 0.0;  // smallest sampled t with 2 t psi' >= psi onward
  bool psi_halfbound_holds = false;
  std::vector<double> sample_grid;
  std::vector<double> superlinear_ratio;
  std::vector<double> convexity_second_diff;
  std::vector<double> psi_halfbound_margin;
};

// Samples the structural hypotheses on f over the given grid. Failures are
// report fields, not errors. Grid must be strictly increasing with >= 32
// points reaching t >= 50 (>= 1 - 1e-3 for MEMS).
AssumptionReport check_assumptions(const NonlinearitySpec& spec, double p,
                                   std::span<const double> sample_grid);

}  // namespace pfold
