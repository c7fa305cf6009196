#include <doctest.h>

#include <cmath>

#include "pfold/branch.hpp"
#include "pfold/stability.hpp"

using namespace pfold;

namespace {

RadialGrid make_grid(const ProblemSpec& prob, int points = 768) {
  return RadialGrid::graded(prob.radius, prob.n, points, default_grading(prob.p));
}

}  // namespace

TEST_SUITE("branch") {

TEST_CASE("Liouville fold at lambda* = 2, a_fold = log 4") {
  ProblemSpec prob(2.0, 2.0, NonlinearitySpec::exponential());
  auto grid = make_grid(prob, 1024);
  TraceOptions opts{.a_min = 0.05, .a_max = 8.0, .steps = 32, .refine = true,
                    .compute_mu1 = true, .compute_estimates = false};
  auto branch = trace(prob, grid, {.ode = 1e-10, .root = 1e-11}, opts);

  REQUIRE(branch.fold.has_value());
  CHECK(branch.method == LambdaStarMethod::FoldMax);
  CHECK(branch.fold->lambda_star == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(branch.fold->a_fold == doctest::Approx(std::log(4.0)).epsilon(1e-3));
  CHECK(branch.lambda_star_estimate >= branch.fold->lambda_star);

  // every sweep point matches the closed-form family lambda(a) = 8b/(1+b)^2
  for (const auto& pt : branch.points) {
    const double b = std::exp(pt.a / 2.0) - 1.0;
    CHECK(pt.lambda == doctest::Approx(8.0 * b / ((1.0 + b) * (1.0 + b))).epsilon(1e-6));
  }

  // mu1 positive strictly before the fold, negative after
  for (const auto& pt : branch.points) {
    REQUIRE(pt.mu1.has_value());
    if (pt.a < 0.9 * branch.fold->a_fold) CHECK(*pt.mu1 > 0.0);
    if (pt.a > 1.5 * branch.fold->a_fold) CHECK(*pt.mu1 < 0.0);
  }
  CHECK(branch.mu1_monotone);

  // lambda(a) -> 0 at the low end
  CHECK(branch.points.front().lambda < 0.3);

  auto ext = extremal_profile(branch);
  CHECK(ext.point->a == doctest::Approx(branch.fold->a_fold).epsilon(1e-6));
}

TEST_CASE("supercritical branch has a monotone tail approaching lambda_s") {
  ProblemSpec prob(1.5, 14.0, NonlinearitySpec::exponential());
  auto grid = make_grid(prob, 768);
  TraceOptions opts{.a_min = 0.1, .a_max = 20.0, .steps = 24, .refine = true,
                    .compute_mu1 = false, .compute_estimates = false};
  auto branch = trace(prob, grid, {.ode = 1e-11, .root = 1e-11}, opts);

  CHECK(branch.monotone_tail);
  CHECK(branch.method == LambdaStarMethod::TailExtrapolation);
  const double lambda_s = std::pow(1.5, 0.5) * 12.5;
  CHECK(std::abs(branch.lambda_star_estimate - lambda_s) < 0.02 * lambda_s);
  for (const auto& pt : branch.points) {
    CHECK(pt.lambda < lambda_s);
    CHECK(branch.lambda_star_estimate >= pt.lambda);
  }

  // gap to the singular profile shrinks as a grows
  auto gap_at = [&](const BranchPoint& pt) {
    double gap = 0.0;
    for (int i = 0; i < pt.solution.grid.size(); ++i) {
      const double r = pt.solution.grid.nodes[i];
      if (r < 0.05) continue;
      gap = std::max(gap, std::abs(pt.solution.u[i] + 1.5 * std::log(r)));
    }
    return gap;
  };
  const auto& mid = branch.points[branch.points.size() / 2];
  const auto& deep = branch.points.back();
  CHECK(gap_at(deep) < gap_at(mid));

  auto ext = extremal_profile(branch);
  CHECK(ext.point->a == doctest::Approx(20.0));
  REQUIRE(ext.gap_to_singular.has_value());
  CHECK(*ext.gap_to_singular < 1e-4);
}

TEST_CASE("just below the threshold dimension the fold sits above lambda_s") {
  ProblemSpec prob(1.5, 13.0, NonlinearitySpec::exponential());
  auto grid = make_grid(prob, 768);
  TraceOptions opts{.a_min = 1.5, .a_max = 9.0, .steps = 24, .refine = true,
                    .compute_mu1 = false, .compute_estimates = false};
  auto branch = trace(prob, grid, {.ode = 1e-12, .root = 1e-12}, opts);
  REQUIRE(branch.fold.has_value());
  const double lambda_s = std::pow(1.5, 0.5) * 11.5;
  CHECK(branch.fold->lambda_star > lambda_s);
  CHECK(branch.fold->lambda_star == doctest::Approx(lambda_s).epsilon(1e-4));
}

TEST_CASE("degenerate single-point branch returns the point with a warning") {
  ProblemSpec prob(1.5, 3.0, NonlinearitySpec::exponential());
  auto grid = make_grid(prob, 256);
  Branch branch;
  branch.problem = prob;
  BranchPoint pt;
  pt.a = 0.5;
  auto res = solve_on_branch(prob, 0.5, grid);
  pt.lambda = res.lambda;
  pt.sup_norm = 0.5;
  pt.solution = std::move(res.solution);
  branch.points.push_back(std::move(pt));
  branch.lambda_star_estimate = branch.points[0].lambda;
  auto ext = extremal_profile(branch);
  CHECK(ext.point == &branch.points[0]);
  CHECK_FALSE(ext.warning.empty());
}

TEST_CASE("trace validates its options") {
  ProblemSpec prob(1.5, 3.0, NonlinearitySpec::exponential());
  auto grid = make_grid(prob, 256);
  CHECK_THROWS_AS(trace(prob, grid, {}, {.a_min = 1.0, .a_max = 0.5, .steps = 32}), Error);
  CHECK_THROWS_AS(trace(prob, grid, {}, {.a_min = 0.1, .a_max = 1.0, .steps = 4}), Error);
}

}  // TEST_SUITE
