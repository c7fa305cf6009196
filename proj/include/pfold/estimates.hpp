#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pfold/radial_ode.hpp"

namespace pfold {

struct Branch;

// One verified inequality/identity instance. Existence-only constants are
// measured, never assumed: empirical_constant is the ratio that would make
// the estimate an equality.
struct CheckRecord {
  std::string name;
  std::string module = "estimates";
  double param = 0.0;  // s or q, when applicable
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  double err_lhs = 0.0;
  double err_rhs = 0.0;
  double empirical_constant = 0.0;
  bool holds_within_error = true;

  void finalize();
};

struct EstimateReport {
  std::vector<CheckRecord> records;
};

// Full per-solution record set: key inequality over a 20-point level grid,
// the psi chain, the truncated sup/Lr bound for the (p, n) regime, Morrey/Sobolev
// constants, the uniform reaction integral, and the gradient-regularity ratios that apply.
EstimateReport estimate_solution(const ProblemSpec& problem, const RadialSolution& sol,
                                 double quad_tol = 1e-10);

// ---- region energies ----

// int_{u <= s} |grad u|^{p+2} dx (the sublevel region is the annulus r > r_s).
IntegralResult truncation_energy(const ProblemSpec& problem, const RadialSolution& sol, double s);

// ---- truncated-energy bounds ----

// Truncated sup bound ||u||_inf <= s + (C/s^{2/p}) |Omega|^{(p+2-n)/(np)}
// (trunc energy)^{1/p}, for n <= p+2. The empirical C makes equality at each
// s; callers aggregate the worst case.
std::vector<CheckRecord> linf_bound_check(const ProblemSpec& problem, const RadialSolution& sol,
                                          std::span<const double> s_grid);

// Superlevel Lr bound plus its full-norm chain for n > p+2; also records
// both candidate norms L^{np/(n-(p+2))} and L^{2n/(n-p-2)}.
std::vector<CheckRecord> lr_bound_check(const ProblemSpec& problem, const RadialSolution& sol,
                                        std::span<const double> s_grid);

// ---- the key stability inequality, tested with the truncation min(s, u) ----
// lhs = ((n-1)/(p-1)) int_{u>s} H^2 |grad u|^p, rhs = s^{-2} * truncation energy.
CheckRecord key_inequality_check(const ProblemSpec& problem, const RadialSolution& sol, double s);

// min over a log s-grid of (slack + both error bounds); nonnegative means no
// violation anywhere on the grid.
double key_inequality_min_slack(const ProblemSpec& problem, const RadialSolution& sol,
                                int s_points = 20);

// log grid on (1e-3 sup u, sup u)
std::vector<double> default_s_grid(const RadialSolution& sol, int points = 20);

// ---- I_p functional and its Morrey/Sobolev forms ----

// I_p(v; {u > s})^p with v = (u-s)_+: radial tangential term vanishes and
// H = 1/r, so I_p^p = int_0^{r_s} r^{-2} |u'|^p dx.
IntegralResult i_p_functional_pow(const ProblemSpec& problem, const RadialSolution& sol,
                                  double s);
double i_p_functional(const ProblemSpec& problem, const RadialSolution& sol, double s);
std::vector<CheckRecord> morrey_sobolev_check(const ProblemSpec& problem,
                                              const RadialSolution& sol,
                                              std::span<const double> s_grid);

// ---- uniform reaction integral ----

// int_{u > 1} f(u)^{p'} / u dx; the branch sup is the measured uniform bound.
IntegralResult nedev_integral(const ProblemSpec& problem, const RadialSolution& sol);

// ---- the psi-transform chain (ned1..ned5) ----
std::vector<CheckRecord> psi_chain_check(const ProblemSpec& problem, const RadialSolution& sol,
                                         double quad_tol = 1e-10);

// ---- gradient regularity ----

// ||grad u|^{p-1}||_{q*} / ||g||_q with q* = nq/(n-q); g = lambda f(u) for
// branch solutions or a manufactured rhs for solve_linear_rhs profiles.
double gradient_reg_ratio(const ProblemSpec& problem, const RadialSolution& sol, double q,
                          std::span<const double> rhs = {});

double theorem_part_a_exponent(const ProblemSpec& problem);  // q = n(p+2)/((p-1)n+p+2)
double theorem_part_c_exponent(const ProblemSpec& problem);  // q = n(p-1)/(n(p-1)-p), n > pp'
double q_p_threshold(double p);                              // p(p+2)/(2(p-1))

// ---- Phi optimization from the Theorem 1(a) proof ----
struct PhiMinimum {
  double s_star = 0.0;
  double phi_star = 0.0;
  double stationarity = 0.0;  // |Phi'(s*)|
  double second_derivative = 0.0;
};
// Phi(s) = s + C A^{(p+2)/p} s^{-2/p}; closed-form minimizer
// s* = (2C/p)^{p/(p+2)} A, checked for stationarity and convexity.
PhiMinimum phi_minimize(double C, double A, double p);

// ---- Theorem 1 norms along a branch ----
enum class TheoremRegime { LInfty, Borderline, HigherDim };
TheoremRegime theorem_regime(const ProblemSpec& problem);
bool part_c_applies(const ProblemSpec& problem);

struct TheoremNormsSummary {
  TheoremRegime regime;
  bool borderline_flagged = false;
  bool part_c = false;
  std::vector<double> norm_series;      // the regime's primary norm per minimal point
  std::vector<double> alt_norm_series;  // second candidate norm in regime (b)
  std::vector<double> grad_norm_series; // part (c) gradient norm when applicable
  double sup_norm = 0.0;
  bool plateaued = false;  // max <= 1.05 x value at 90% of the branch
};
TheoremNormsSummary theorem_norms(const Branch& branch);

// relative residual of the weak form tested with g(u) (identity ned2 doubles
// as a solver consistency oracle)
double ned2_identity_residual(const ProblemSpec& problem, const RadialSolution& sol,
                              double quad_tol = 1e-10);

}  // namespace pfold
