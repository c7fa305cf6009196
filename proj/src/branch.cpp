#include "pfold/branch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pfold/estimates.hpp"
#include "pfold/roots.hpp"
#include "pfold/stability.hpp"
#include "pfold/util.hpp"

namespace pfold {

const char* lambda_star_method_name(LambdaStarMethod m) {
  switch (m) {
    case LambdaStarMethod::FoldMax: return "fold-max";
    case LambdaStarMethod::TailExtrapolation: return "tail-extrapolation";
    case LambdaStarMethod::None: return "none";
  }
  return "?";
}

std::vector<const BranchPoint*> Branch::minimal_points() const {
  std::vector<const BranchPoint*> out;
  double a_cut = std::numeric_limits<double>::infinity();
  if (fold) a_cut = fold->a_fold * (1.0 + 1e-12);
  for (const auto& pt : points)
    if (pt.a <= a_cut) out.push_back(&pt);
  return out;
}

namespace {

// least squares of lambda(a) = lambda_inf - c a^{-beta} on the tail points
TailFit fit_tail(std::span<const double> as, std::span<const double> lambdas) {
  const int m = static_cast<int>(as.size());
  TailFit best;
  best.rms = std::numeric_limits<double>::infinity();
  auto solve_for = [&](double beta) {
    // linear LSQ in (lambda_inf, c) with basis [1, -a^{-beta}]
    double s11 = m, s12 = 0.0, s22 = 0.0, b1 = 0.0, b2 = 0.0;
    for (int i = 0; i < m; ++i) {
      const double x = -std::pow(as[i], -beta);
      s12 += x;
      s22 += x * x;
      b1 += lambdas[i];
      b2 += x * lambdas[i];
    }
    const double det = s11 * s22 - s12 * s12;
    TailFit fit;
    fit.exponent = beta;
    if (std::abs(det) < 1e-30) {
      fit.rms = std::numeric_limits<double>::infinity();
      return fit;
    }
    fit.lambda_inf = (b1 * s22 - b2 * s12) / det;
    fit.coefficient = (s11 * b2 - s12 * b1) / det;
    double ss = 0.0;
    for (int i = 0; i < m; ++i) {
      const double r = fit.lambda_inf - fit.coefficient * std::pow(as[i], -beta) - lambdas[i];
      ss += r * r;
    }
    fit.rms = std::sqrt(ss / m);
    fit.points_used = m;
    return fit;
  };
  for (double beta : geomspace(0.05, 50.0, 60)) {
    auto fit = solve_for(beta);
    if (fit.rms < best.rms) best = fit;
  }
  // local golden polish around the best exponent
  const double beta_star = golden_section_max(
      [&](double logb) { return -solve_for(std::exp(logb)).rms; }, std::log(best.exponent / 2.0),
      std::log(best.exponent * 2.0), 1e-4);
  auto fit = solve_for(std::exp(beta_star));
  return fit.rms <= best.rms ? fit : best;
}

}  // namespace

Branch trace(const ProblemSpec& prob, const RadialGrid& grid, const Tolerances& tols,
             const TraceOptions& opts) {
  if (!(opts.a_min > 0.0 && opts.a_min < opts.a_max))
    fail(ErrorKind::Parameter, "trace needs 0 < a_min < a_max");
  if (opts.steps < 16) fail(ErrorKind::Parameter, "trace needs at least 16 steps");
  if (prob.nonlinearity.kind == NonlinearityKind::Mems && opts.a_max >= 1.0)
    fail(ErrorKind::Parameter, "MEMS sweep must stay below a = 1");

  Branch branch;
  branch.problem = prob;

  // warm-started geometric sweep
  auto a_values = geomspace(opts.a_min, opts.a_max, opts.steps);
  std::optional<double> hint;
  for (double a : a_values) {
    try {
      auto res = solve_on_branch(prob, a, grid, tols, hint);
      hint = res.lambda * 1.02;
      BranchPoint pt;
      pt.a = a;
      pt.lambda = res.lambda;
      pt.sup_norm = a;
      pt.solution = std::move(res.solution);
      branch.points.push_back(std::move(pt));
    } catch (const Error& e) {
      branch.failures.push_back("a = " + format_double(a) + ": " + e.what());
    }
  }
  if (branch.points.empty()) return branch;

  // lambda(a) must increase strictly along the minimal sub-branch. Decreases
  // below the solver noise floor are ignored; decreases in a suspicious band
  // above it trigger midpoint insertion before being believed.
  const double noise_rel = 1e-8;
  auto lam = [&](size_t i) { return branch.points[i].lambda; };
  for (int round = 0; round < 2; ++round) {
    std::vector<BranchPoint> inserted;
    for (size_t i = 0; i + 1 < branch.points.size(); ++i) {
      const double drop = lam(i) - lam(i + 1);
      if (drop > noise_rel * lam(i) && drop < 1e-5 * lam(i)) {
        const double mid = std::sqrt(branch.points[i].a * branch.points[i + 1].a);
        try {
          auto res = solve_on_branch(prob, mid, grid, tols, lam(i));
          BranchPoint pt;
          pt.a = mid;
          pt.lambda = res.lambda;
          pt.sup_norm = mid;
          pt.solution = std::move(res.solution);
          inserted.push_back(std::move(pt));
        } catch (const Error& e) {
          branch.failures.push_back("a = " + format_double(mid) + ": " + e.what());
        }
      }
    }
    if (inserted.empty()) break;
    for (auto& pt : inserted) branch.points.push_back(std::move(pt));
    std::sort(branch.points.begin(), branch.points.end(),
              [](const BranchPoint& x, const BranchPoint& y) { return x.a < y.a; });
  }

  // fold vs monotone tail: a fold needs prominence above the noise floor on
  // its far side, otherwise the branch has merely saturated
  size_t k_max = 0;
  for (size_t i = 1; i < branch.points.size(); ++i)
    if (lam(i) > lam(k_max)) k_max = i;
  bool genuine_fold = false;
  for (size_t i = k_max + 1; i < branch.points.size(); ++i)
    if (lam(i) < lam(k_max) * (1.0 - noise_rel)) genuine_fold = true;

  const size_t last = branch.points.size() - 1;
  if (!genuine_fold) {
    branch.monotone_tail = true;
    branch.method = LambdaStarMethod::TailExtrapolation;
    // fit on the last decade of a
    std::vector<double> as, lams;
    for (const auto& pt : branch.points)
      if (pt.a >= branch.points.back().a / 10.0) {
        as.push_back(pt.a);
        lams.push_back(pt.lambda);
      }
    const double lam_max = lam(k_max);
    const double gap_scale = lam_max - lams.front();
    if (as.size() >= 4 && gap_scale > 100.0 * tols.root * std::max(1.0, lam_max)) {
      branch.tail_fit = fit_tail(as, lams);
      branch.lambda_star_estimate = std::max(branch.tail_fit->lambda_inf, lam_max);
    } else {
      // tail already flat at solver precision
      branch.lambda_star_estimate = lam_max;
    }
  } else if (k_max > 0) {
    double a_lo = branch.points[k_max - 1].a;
    double a_hi = branch.points[std::min(k_max + 1, last)].a;
    double a_best = branch.points[k_max].a;
    double lam_best = lam(k_max);
    if (opts.refine) {
      std::optional<double> fold_hint = lam_best;
      auto lambda_of = [&](double a) {
        try {
          auto res = solve_on_branch(prob, a, grid, tols, fold_hint);
          fold_hint = res.lambda;
          if (res.lambda > lam_best) {
            lam_best = res.lambda;
            a_best = a;
          }
          return res.lambda;
        } catch (const Error& e) {
          branch.failures.push_back("refine a = " + format_double(a) + ": " + e.what());
          return -1.0;
        }
      };
      golden_section_max(lambda_of, a_lo, a_hi, 1e-4 * a_best);
      // the refined fold point joins the branch
      try {
        auto res = solve_on_branch(prob, a_best, grid, tols, lam_best);
        BranchPoint pt;
        pt.a = a_best;
        pt.lambda = res.lambda;
        pt.sup_norm = a_best;
        pt.solution = std::move(res.solution);
        lam_best = std::max(lam_best, pt.lambda);
        branch.points.push_back(std::move(pt));
        std::sort(branch.points.begin(), branch.points.end(),
                  [](const BranchPoint& x, const BranchPoint& y) { return x.a < y.a; });
      } catch (const Error& e) {
        branch.failures.push_back("fold point a = " + format_double(a_best) + ": " + e.what());
      }
    }
    branch.fold = FoldInfo{a_best, lam_best};
    branch.method = LambdaStarMethod::FoldMax;
    branch.lambda_star_estimate = lam_best;
  } else {
    branch.method = LambdaStarMethod::None;
    branch.lambda_star_estimate = lam(k_max);
    branch.failures.push_back("lambda(a) decreasing from the first sweep point");
  }

  // per-point diagnostics, pure and parallel over points
  if (opts.compute_mu1 || opts.compute_estimates) {
    const int count = static_cast<int>(branch.points.size());
    std::vector<std::string> point_failures(count);
    parallel_for(count, [&](int i) {
      BranchPoint& pt = branch.points[i];
      try {
        if (opts.compute_mu1) pt.mu1 = mu1(prob, pt.solution).mu1;
        if (opts.compute_estimates) {
          pt.estimate_summary = estimate_solution(prob, pt.solution);
          double min_slack = std::numeric_limits<double>::infinity();
          for (const auto& rec : pt.estimate_summary->records) {
            if (rec.name == "key_inequality")
              min_slack = std::min(min_slack, rec.slack + rec.err_lhs + rec.err_rhs);
            if (rec.name == "nedev_integral") pt.nedev_integral = rec.empirical_constant;
          }
          pt.key_ineq_min_slack = min_slack;
        }
      } catch (const Error& e) {
        point_failures[i] = "diagnostics at a = " + format_double(pt.a) + ": " + e.what();
      }
    });
    for (auto& f : point_failures)
      if (!f.empty()) branch.failures.push_back(f);
  }

  if (opts.compute_mu1) {
    for (size_t i = 0; i + 1 < branch.points.size(); ++i) {
      if (!branch.points[i].mu1 || !branch.points[i + 1].mu1) continue;
      if (branch.fold && branch.points[i + 1].a > branch.fold->a_fold) break;
      if (*branch.points[i + 1].mu1 > *branch.points[i].mu1 + 1e-10) branch.mu1_monotone = false;
    }
  }
  return branch;
}

ExtremalProfile extremal_profile(const Branch& branch) {
  if (branch.points.empty()) fail(ErrorKind::Parameter, "extremal profile of an empty branch");
  ExtremalProfile out;
  auto minimal = branch.minimal_points();
  if (minimal.size() == 1 && branch.points.size() == 1) {
    out.point = minimal.front();
    out.warning = "degenerate single-point branch";
    return out;
  }
  // closest to lambda* on the minimal side; saturated tails are flat in
  // lambda at solver precision, so the deepest point stands in there
  const BranchPoint* best = minimal.front();
  if (branch.monotone_tail) {
    best = minimal.back();
  } else {
    for (const BranchPoint* pt : minimal)
      if (std::abs(pt->lambda - branch.lambda_star_estimate) <
          std::abs(best->lambda - branch.lambda_star_estimate))
        best = pt;
  }
  out.point = best;

  if (branch.monotone_tail &&
      branch.problem.nonlinearity.kind == NonlinearityKind::Exponential &&
      branch.problem.n > branch.problem.p) {
    const auto& sol = best->solution;
    const double p = branch.problem.p, R = branch.problem.radius;
    double gap = 0.0;
    for (int i = 0; i < sol.grid.size(); ++i) {
      const double r = sol.grid.nodes[i];
      if (r < 0.05 * R) continue;
      gap = std::max(gap, std::abs(sol.u[i] - (-p * std::log(r / R))));
    }
    out.gap_to_singular = gap;
  }
  return out;
}

}  // namespace pfold
