#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pfold/estimates.hpp"
#include "pfold/radial_ode.hpp"

namespace pfold {

struct BranchPoint {
  double a = 0.0;
  double lambda = 0.0;
  double sup_norm = 0.0;  // = a
  std::optional<double> mu1;
  std::optional<double> nedev_integral;
  std::optional<double> key_ineq_min_slack;
  std::optional<EstimateReport> estimate_summary;
  RadialSolution solution;
};

struct FoldInfo {
  double a_fold = 0.0;
  double lambda_star = 0.0;
};

enum class LambdaStarMethod { FoldMax, TailExtrapolation, None };

struct TailFit {
  double lambda_inf = 0.0;
  double coefficient = 0.0;
  double exponent = 0.0;  // fitted beta in lambda(a) = lambda_inf - c a^{-beta}
  double rms = 0.0;
  int points_used = 0;
};

struct Branch {
  ProblemSpec problem;
  std::vector<BranchPoint> points;  // ordered by a
  std::optional<FoldInfo> fold;
  double lambda_star_estimate = 0.0;
  LambdaStarMethod method = LambdaStarMethod::None;
  bool monotone_tail = false;
  bool mu1_monotone = true;  // flagged, not asserted
  std::optional<TailFit> tail_fit;
  std::vector<std::string> failures;

  // Points on the minimal side: up to the fold when one exists, else all.
  std::vector<const BranchPoint*> minimal_points() const;
};

struct TraceOptions {
  double a_min = 0.05;
  double a_max = 8.0;
  int steps = 32;
  bool refine = true;
  bool compute_mu1 = true;
  bool compute_estimates = true;  // nedev integral + key-inequality min slack
};

// Geometric sweep of solve_on_branch over a, warm-started point to point;
// fold localization by golden-section refinement of lambda(a), or tail
// extrapolation when lambda(a) is still increasing at a_max.
Branch trace(const ProblemSpec& problem, const RadialGrid& grid, const Tolerances& tols,
             const TraceOptions& opts);

struct ExtremalProfile {
  const BranchPoint* point = nullptr;
  bool is_stand_in = true;
  std::optional<double> gap_to_singular;  // sup over r in [0.05 R, R], monotone tails only
  std::string warning;
};

// Branch point closest to lambda* on the minimal side, flagged as the
// numerical stand-in for the extremal solution.
ExtremalProfile extremal_profile(const Branch& branch);

const char* lambda_star_method_name(LambdaStarMethod m);

}  // namespace pfold
