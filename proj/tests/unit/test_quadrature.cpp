#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "pfold/quadrature.hpp"

using namespace pfold;
namespace {
constexpr double kPi = std::numbers::pi;

std::vector<double> sample(const RadialGrid& g, const std::function<double(double)>& f) {
  std::vector<double> v(g.size());
  for (int i = 0; i < g.size(); ++i) v[i] = f(g.nodes[i]);
  return v;
}
}  // namespace

TEST_SUITE("quadrature") {

TEST_CASE("surface area of unit spheres") {
  CHECK(surface_area(2.0) == doctest::Approx(2.0 * kPi).epsilon(1e-14));
  CHECK(surface_area(3.0) == doctest::Approx(4.0 * kPi).epsilon(1e-14));
  // n = 4: Gamma(2) = 1, so omega_3 = 2 pi^2
  CHECK(surface_area(4.0) == doctest::Approx(2.0 * kPi * kPi).epsilon(1e-14));
  CHECK_THROWS_AS(surface_area(1.5), Error);
}

TEST_CASE("graded grid construction") {
  auto g = RadialGrid::graded(1.0, 2.0, 256, 2.0);
  CHECK(g.size() == 256);
  CHECK(g.nodes.front() == doctest::Approx(std::pow(1.0 / 256, 2.0)));
  CHECK(g.nodes.back() == 1.0);
  for (int i = 0; i + 1 < g.size(); ++i) CHECK(g.nodes[i] < g.nodes[i + 1]);
  // refined grid contains the original nodes
  auto f = g.refined();
  for (int i = 0; i < g.size(); ++i)
    CHECK(f.nodes[2 * i + 1] == doctest::Approx(g.nodes[i]).epsilon(1e-15));
}

TEST_CASE("integrate constants and powers against antiderivatives") {
  // phi = 1 on the unit disk: |B_1| = pi in n = 2
  auto g2 = RadialGrid::graded(1.0, 2.0, 512, 2.0);
  auto r2 = integrate(g2, sample(g2, [](double) { return 1.0; }));
  CHECK(r2.value == doctest::Approx(kPi).epsilon(1e-10));
  CHECK(std::abs(r2.value - kPi) <= r2.error + 1e-13);

  // phi = r^{-1}, n = 2: omega_1 * R = 2 pi
  auto rinv = integrate(g2, sample(g2, [](double r) { return 1.0 / r; }));
  CHECK(rinv.value == doctest::Approx(2.0 * kPi).epsilon(1e-10));

  // phi = r^{(p-2)/(p-1)} with p = 1.5 (mimics |u'|^{p-2}); alpha = -1, n = 3:
  // exact omega_2 * R^{n-1+alpha+1} / (n-1+alpha+1) = 4 pi / 2
  auto g3 = RadialGrid::graded(1.0, 3.0, 512, 2.0);
  auto rsing = integrate(g3, sample(g3, [](double r) { return 1.0 / r; }));
  CHECK(rsing.value == doctest::Approx(4.0 * kPi / 2.0).epsilon(1e-9));
}

TEST_CASE("integrate rejects non-integrable integrands") {
  auto g = RadialGrid::graded(1.0, 2.0, 256, 2.0);
  CHECK_THROWS_AS(integrate(g, sample(g, [](double r) { return std::pow(r, -2.5); })), Error);
  try {
    integrate(g, sample(g, [](double r) { return std::pow(r, -2.5); }));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Divergence);
  }
}

TEST_CASE("ball volume for real dimension") {
  // |B_1| = pi^{n/2} / Gamma(n/2 + 1)
  for (double n : {2.0, 2.5, 3.0, 4.0, 13.5}) {
    const double expect = std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
    CHECK(ball_volume(n, 1.0) == doctest::Approx(expect).epsilon(1e-13));
  }
}

TEST_CASE("integrate error estimate covers refinement changes on smooth battery") {
  std::vector<std::function<double(double)>> battery = {
      [](double r) { return std::exp(-r); },
      [](double r) { return 1.0 + r * r; },
      [](double r) { return std::cos(3.0 * r); },
      [](double r) { return std::sqrt(r); },
  };
  for (double n : {2.0, 3.0, 5.5}) {
    auto g = RadialGrid::graded(1.0, n, 256, 2.0);
    auto g2 = g.refined();
    for (auto& f : battery) {
      auto coarse = integrate(g, sample(g, f));
      auto fine = integrate(g2, sample(g2, f));
      CHECK(std::abs(fine.value - coarse.value) <= coarse.error + 1e-14);
    }
  }
}

TEST_CASE("integrate is linear and monotone within error bounds") {
  auto g = RadialGrid::graded(1.0, 3.0, 256, 2.0);
  auto phi = sample(g, [](double r) { return 1.0 + r; });
  auto chi = sample(g, [](double r) { return std::exp(-r); });
  std::vector<double> combo(g.size());
  for (int i = 0; i < g.size(); ++i) combo[i] = 2.0 * phi[i] + 3.0 * chi[i];
  auto a = integrate(g, phi), b = integrate(g, chi), c = integrate(g, combo);
  CHECK(std::abs(c.value - 2.0 * a.value - 3.0 * b.value) <=
        c.error + 2.0 * a.error + 3.0 * b.error + 1e-12);
  // monotone: phi >= chi pointwise on [0,1] since 1 + r >= e^{-r}
  CHECK(a.value + a.error + b.error >= b.value);
}

TEST_CASE("region integrals split at interior radii") {
  auto g = RadialGrid::graded(1.0, 2.0, 512, 2.0);
  auto phi = sample(g, [](double r) { return r; });
  // int_{a}^{b} r * 2 pi r dr = 2 pi (b^3 - a^3)/3
  auto part = integrate_region(g, phi, 0.3, 0.7);
  CHECK(part.value ==
        doctest::Approx(2.0 * kPi * (std::pow(0.7, 3) - std::pow(0.3, 3)) / 3.0).epsilon(1e-10));
  auto left = integrate_region(g, phi, 0.0, 0.4321);
  auto right = integrate_region(g, phi, 0.4321, 1.0);
  auto full = integrate(g, phi);
  CHECK(left.value + right.value == doctest::Approx(full.value).epsilon(1e-12));
}

TEST_CASE("cumulative radial integral matches antiderivative") {
  auto g = RadialGrid::graded(1.0, 3.0, 512, 2.0);
  auto phi = sample(g, [](double r) { return std::pow(r, -1.5); });
  auto cum = cumulative_radial_integral(g, phi);
  // int_0^r s^{-1.5} s^2 ds = r^{1.5}/1.5
  for (int i : {3, 50, 200, 511})
    CHECK(cum[i] == doctest::Approx(std::pow(g.nodes[i], 1.5) / 1.5).epsilon(1e-8));
}

TEST_CASE("level radius inverts monotone profiles") {
  auto g = RadialGrid::graded(1.0, 3.0, 1024, 2.0);

  SUBCASE("singular profile u = -p log r") {
    const double p = 1.5;
    auto u = sample(g, [&](double r) { return -p * std::log(r); });
    auto lr = level_radius(g, u, p);  // u(r) = p at r = 1/e
    CHECK(lr.empty_superlevel == false);
    CHECK(lr.r == doctest::Approx(std::exp(-1.0)).epsilon(1e-7));
  }

  SUBCASE("synthetic u = a(1 - r^2)") {
    const double a = 2.0;
    auto u = sample(g, [&](double r) { return a * (1.0 - r * r); });
    auto lr = level_radius(g, u, a / 2.0);
    CHECK(lr.r == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  }

  SUBCASE("s above the supremum flags empty superlevel set") {
    auto u = sample(g, [&](double r) { return 1.0 - r; });
    auto lr = level_radius(g, u, 5.0);
    CHECK(lr.empty_superlevel);
    CHECK(lr.r == 0.0);
  }

  SUBCASE("non-monotone profile is rejected") {
    auto u = sample(g, [&](double r) { return std::sin(6.0 * r); });
    CHECK_THROWS_AS(level_radius(g, u, 0.5), Error);
  }
}

TEST_CASE("level_radius after pchip evaluation is the identity") {
  auto g = RadialGrid::graded(1.0, 2.0, 512, 2.0);
  auto u = sample(g, [](double r) { return 3.0 * (1.0 - r * r * r); });
  auto slopes = pchip_slopes(g.nodes, u);
  for (double r : {0.11, 0.37, 0.52, 0.83, 0.95}) {
    const double s = pchip_eval(g.nodes, u, slopes, r);
    auto lr = level_radius(g, u, s);
    CHECK(lr.r == doctest::Approx(r).epsilon(1e-8));
  }
}

TEST_CASE("level geometry of spheres") {
  auto geo = level_geometry(5.0, 0.25);
  CHECK(geo.mean_curvature == doctest::Approx(4.0));
  CHECK(geo.second_form_sq == doctest::Approx(4.0 * 16.0));
  CHECK(geo.tangential_grad_speed == 0.0);
  // (n-1) H^2 <= B^2 with equality for spheres
  CHECK((5.0 - 1.0) * geo.mean_curvature * geo.mean_curvature ==
        doctest::Approx(geo.second_form_sq));
}

TEST_CASE("adaptive quadrature handles endpoint power singularities") {
  auto r = adaptive_quadrature([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-10,
                               20000);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-9));
  auto s = adaptive_quadrature([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-12);
  CHECK(s.value == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-13));
}

}  // TEST_SUITE
