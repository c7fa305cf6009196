#pragma once

#include <span>
#include <vector>

#include "pfold/radial_ode.hpp"

namespace pfold {

// Radial weights of the linearized quadratic form: for radial test functions
// the two gradient terms of the linearization combine into
// (p-1)|u'|^{p-2} v' phi', giving
//   stiffness  w_s = (p-1)|u'|^{p-2} r^{n-1}
//   potential  w_q = lambda f'(u) r^{n-1}
//   mass       w_m = r^{n-1}
struct StabilityWeights {
  std::vector<double> stiffness;
  std::vector<double> potential;
  std::vector<double> mass;
};

StabilityWeights radial_form_weights(const ProblemSpec& problem, const RadialSolution& solution);

struct StabilityReport {
  double mu1 = 0.0;                   // fine-grid eigenvalue
  double mu1_coarse = 0.0;            // half-grid eigenvalue
  double mu1_extrapolated = 0.0;      // Richardson combination of the two
  double discretization_error = 0.0;  // |mu1 - mu1_coarse| / 3
  int discretization_size = 0;
  double weight_integral = 0.0;  // int |u'|^{p-2} dx, the Damascelli-Sciunzi check
  bool weight_integral_finite = true;
  std::vector<double> eigenfunction;  // at grid nodes, L2(weight)-normalized, v(R) = 0
  double rayleigh_quotient = 0.0;
  bool eigenfunction_sign_changes = false;
};

// First eigenvalue of -(w_s v')' - w_q v = mu w_m v with v(R) = 0 and natural
// (zero-flux) condition at r -> 0, by bisection on the Sturm sequence of the
// symmetric tridiagonal discretization, plus inverse iteration for the
// eigenfunction. The half-grid value and its Richardson combination are
// reported alongside as refinement diagnostics.
StabilityReport mu1(const ProblemSpec& problem, const RadialSolution& solution);

// Discrete Rayleigh quotient of an arbitrary test profile sampled at the
// solution's nodes (with v(R) forced to 0). Lower-bounded by mu1.
double rayleigh_quotient(const ProblemSpec& problem, const RadialSolution& solution,
                         std::span<const double> v);

struct ThresholdScan {
  double n_star = 0.0;
  double formula = 0.0;  // p + 4p/(p-1)
  double deviation = 0.0;
  int evaluations = 0;
};

// Bisection in real dimension n on the sign of mu1 of the singular profile
// at lambda_s (exponential nonlinearity).
ThresholdScan stability_threshold_scan(double p, double n_lo, double n_hi, int grid_points = 4096,
                                       double grading = 2.5, double n_tol = 0.005);

}  // namespace pfold
