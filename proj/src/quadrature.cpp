#include "pfold/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace pfold {

double surface_area(double dim) {
  if (dim < 2.0) fail(ErrorKind::Parameter, "surface_area requires n >= 2");
  return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

double ball_volume(double dim, double radius) {
  return surface_area(dim) * std::pow(radius, dim) / dim;
}

double default_grading(double p) {
  const double pp = p / (p - 1.0);
  return std::max(2.0, pp / (pp - 1.0));
}

RadialGrid RadialGrid::graded(double radius, double dim, int points, double gamma) {
  if (radius <= 0.0) fail(ErrorKind::Parameter, "grid radius must be positive");
  if (dim < 2.0) fail(ErrorKind::Parameter, "grid dimension must be >= 2");
  if (points < 16) fail(ErrorKind::Parameter, "grid needs at least 16 nodes");
  if (gamma < 1.0) fail(ErrorKind::Parameter, "grading exponent must be >= 1");
  RadialGrid g;
  g.radius = radius;
  g.dim = dim;
  g.gamma = gamma;
  g.nodes.resize(points);
  for (int k = 1; k <= points; ++k)
    g.nodes[k - 1] = radius * std::pow(double(k) / points, gamma);
  g.nodes.back() = radius;
  return g;
}

RadialGrid RadialGrid::refined() const { return graded(radius, dim, 2 * size(), gamma); }

LevelSetGeometry level_geometry(double dim, double r) {
  if (r <= 0.0) fail(ErrorKind::Parameter, "level geometry needs r > 0");
  return {1.0 / r, (dim - 1.0) / (r * r), 0.0};
}

namespace {

// Integral over [u, v] of the parabola through (x0,f0), (x1,f1), (x2,f2).
double parabola_integral(double x0, double f0, double x1, double f1, double x2, double f2,
                         double u, double v) {
  const double d01 = (f1 - f0) / (x1 - x0);
  const double d12 = (f2 - f1) / (x2 - x1);
  const double d012 = (d12 - d01) / (x2 - x0);
  // p(x) = f0 + d01 (x - x0) + d012 (x - x0)(x - x1)
  auto prim = [&](double x) {
    const double t = x - x0;
    return f0 * x + 0.5 * d01 * t * t +
           d012 * (x * x * x / 3.0 - 0.5 * (x0 + x1) * x * x + x0 * x1 * x);
  };
  return prim(v) - prim(u);
}

struct FirstPanel {
  double coeff = 0.0;     // model phi(r) = coeff * r^alpha on [0, r_first]
  double alpha = 0.0;
  double alt_value = 0.0; // alternative-fit integral over [0, r_first], for the error bound
  double r_first = 0.0;
};

// Fits phi ~ c r^alpha from the first nodes and validates integrability of
// phi r^{n-1} near 0.
FirstPanel fit_first_panel(const RadialGrid& grid, std::span<const double> phi, int i0, int i1,
                           int i2) {
  FirstPanel fp;
  const double n = grid.dim;
  const double r0 = grid.nodes[i0], r1 = grid.nodes[i1];
  const double f0 = phi[i0], f1 = phi[i1];
  fp.r_first = r0;
  auto power_fit = [&](double ra, double fa, double rb, double fb, double& alpha) {
    if (fa == 0.0 || fb == 0.0 || (fa > 0) != (fb > 0)) return false;
    alpha = std::log(std::abs(fb / fa)) / std::log(rb / ra);
    return std::isfinite(alpha);
  };
  double alpha = 0.0;
  if (power_fit(r0, f0, r1, f1, alpha)) {
    alpha = std::min(alpha, 16.0);
    if (alpha + n <= 1e-9)
      fail(ErrorKind::Divergence,
           "integrand behaves like r^" + std::to_string(alpha + n - 1.0) + " near r = 0");
    fp.alpha = alpha;
    fp.coeff = f0 / std::pow(r0, alpha);
    // second fit from a wider stencil, used only to bound the fit error
    double alpha2 = alpha;
    if (i2 < grid.size() && power_fit(r0, f0, grid.nodes[i2], phi[i2], alpha2)) {
      alpha2 = std::min(alpha2, 16.0);
      if (alpha2 + n > 1e-9)
        fp.alt_value = f0 * std::pow(r0, n) / (alpha2 + n);
      else
        fp.alt_value = 0.0;
    } else {
      fp.alt_value = f0 * std::pow(r0, n) / n;
    }
  } else {
    // no usable power law (zero or sign change): constant-phi model
    fp.alpha = 0.0;
    fp.coeff = f0;
    fp.alt_value = 0.5 * (f0 + f1) * std::pow(r0, n) / n;
  }
  return fp;
}

// Model integral of phi r^{n-1} over [x, y] within the first panel.
double first_panel_integral(const FirstPanel& fp, double n, double x, double y) {
  const double a = fp.alpha + n;
  return fp.coeff * (std::pow(y, a) - std::pow(x, a)) / a;
}

// Composite integration of F(r) = phi(r) r^{n-1} over [r_lo, r_hi] using node
// subset {i0, i0+stride, ...}; cut ends interpolated by the local parabola.
double integrate_core(const RadialGrid& grid, std::span<const double> phi, double r_lo,
                      double r_hi, int stride, double* cut_err) {
  const int N = grid.size();
  const double n = grid.dim;
  std::vector<int> idx;
  for (int i = (stride == 2 ? 1 : 0); i < N; i += stride) idx.push_back(i);
  if (idx.back() != N - 1) idx.push_back(N - 1);
  const int M = static_cast<int>(idx.size());

  auto X = [&](int j) { return grid.nodes[idx[j]]; };
  auto F = [&](int j) { return phi[idx[j]] * std::pow(grid.nodes[idx[j]], n - 1.0); };

  double total = 0.0;
  // leading panel [0, X(0)] (or its overlap with the region)
  if (r_lo < X(0)) {
    FirstPanel fp = fit_first_panel(grid, phi, idx[0], idx[1], idx[std::min(2, M - 1)]);
    const double hi = std::min(r_hi, X(0));
    total += first_panel_integral(fp, n, r_lo, hi);
    if (cut_err) {
      const double full = first_panel_integral(fp, n, 0.0, X(0));
      *cut_err += std::abs(full - fp.alt_value);
    }
  }
  if (r_hi <= X(0)) return total;

  for (int j = 0; j + 1 < M; ++j) {
    const double xa = X(j), xb = X(j + 1);
    const double lo = std::max(r_lo, xa), hi = std::min(r_hi, xb);
    if (lo >= hi) continue;
    const int jl = std::max(0, j - 1);
    const int jr = std::min(M - 1, j + 2);
    const double left = parabola_integral(X(jl), F(jl), X(jl + 1), F(jl + 1), X(jl + 2), F(jl + 2),
                                          lo, hi);
    const double right = parabola_integral(X(jr - 2), F(jr - 2), X(jr - 1), F(jr - 1), X(jr),
                                           F(jr), lo, hi);
    total += 0.5 * (left + right);
    if (cut_err && (lo > xa || hi < xb)) *cut_err += 0.5 * std::abs(left - right);
  }
  return total;
}

}  // namespace

IntegralResult integrate_region(const RadialGrid& grid, std::span<const double> phi, double r_lo,
                                double r_hi) {
  if (static_cast<int>(phi.size()) != grid.size())
    fail(ErrorKind::Parameter, "sample count does not match grid");
  if (grid.size() < 8) fail(ErrorKind::Parameter, "grid too small to integrate");
  r_lo = std::max(0.0, r_lo);
  r_hi = std::min(grid.radius, r_hi);
  if (r_lo >= r_hi) return {0.0, 0.0};

  const double omega = surface_area(grid.dim);
  double cut_fine = 0.0, cut_coarse = 0.0;
  const double fine = integrate_core(grid, phi, r_lo, r_hi, 1, &cut_fine);
  const double coarse = integrate_core(grid, phi, r_lo, r_hi, 2, &cut_coarse);
  const double value = omega * fine;
  const double err =
      omega * (std::abs(fine - coarse) + 0.5 * (cut_fine + cut_coarse)) +
      4.0 * std::numeric_limits<double>::epsilon() * std::abs(value);
  return {value, err};
}

IntegralResult integrate(const RadialGrid& grid, std::span<const double> phi) {
  return integrate_region(grid, phi, 0.0, grid.radius);
}

double power_interval_integral(double x0, double f0, double x1, double f1) {
  if (!(x0 > 0.0 && x1 > x0)) fail(ErrorKind::Parameter, "power interval needs 0 < x0 < x1");
  if (f0 == 0.0 || f1 == 0.0 || (f0 > 0) != (f1 > 0))
    return 0.5 * (f0 + f1) * (x1 - x0);
  const double ratio = x1 / x0;
  double beta = std::log(f1 / f0) / std::log(ratio);
  if (!std::isfinite(beta) || std::abs(beta) > 60.0) return 0.5 * (f0 + f1) * (x1 - x0);
  const double bp1 = beta + 1.0;
  const double L = std::log(ratio);
  if (std::abs(bp1 * L) < 1e-8) return f0 * x0 * L * (1.0 + 0.5 * bp1 * L);
  return f0 * x0 * (std::pow(ratio, bp1) - 1.0) / bp1;
}

std::vector<double> cumulative_radial_integral(const RadialGrid& grid,
                                               std::span<const double> phi) {
  const int N = grid.size();
  if (static_cast<int>(phi.size()) != N)
    fail(ErrorKind::Parameter, "sample count does not match grid");
  const double n = grid.dim;
  std::vector<double> out(N);
  FirstPanel fp = fit_first_panel(grid, phi, 0, 1, std::min(2, N - 1));
  out[0] = first_panel_integral(fp, n, 0.0, grid.nodes[0]);
  auto F = [&](int i) { return phi[i] * std::pow(grid.nodes[i], n - 1.0); };
  for (int i = 0; i + 1 < N; ++i)
    out[i + 1] =
        out[i] + power_interval_integral(grid.nodes[i], F(i), grid.nodes[i + 1], F(i + 1));
  return out;
}

double center_extrapolate(const RadialGrid& grid, std::span<const double> u) {
  // parabola through the first three nodes evaluated at r = 0
  const double x0 = grid.nodes[0], x1 = grid.nodes[1], x2 = grid.nodes[2];
  const double d01 = (u[1] - u[0]) / (x1 - x0);
  const double d12 = (u[2] - u[1]) / (x2 - x1);
  const double d012 = (d12 - d01) / (x2 - x0);
  return u[0] + d01 * (0.0 - x0) + d012 * (0.0 - x0) * (0.0 - x1);
}

std::vector<double> pchip_slopes(std::span<const double> x, std::span<const double> y) {
  const int n = static_cast<int>(x.size());
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  std::vector<double> h(n - 1), delta(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    h[i] = x[i + 1] - x[i];
    delta[i] = (y[i + 1] - y[i]) / h[i];
  }
  for (int i = 1; i < n - 1; ++i) {
    if (delta[i - 1] == 0.0 || delta[i] == 0.0 || (delta[i - 1] > 0) != (delta[i] > 0)) {
      d[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0.0)
      s = 0.0;
    else if (d0 * d1 <= 0.0 && std::abs(s) > 3.0 * std::abs(d0))
      s = 3.0 * d0;
    return s;
  };
  d[0] = (n == 2) ? delta[0] : end_slope(h[0], h[1], delta[0], delta[1]);
  d[n - 1] = (n == 2) ? delta[0] : end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  return d;
}

double pchip_eval(std::span<const double> x, std::span<const double> y,
                  std::span<const double> slopes, double xq) {
  const int n = static_cast<int>(x.size());
  int lo = 0, hi = n - 1;
  if (xq <= x[0]) {
    hi = 1;
  } else if (xq >= x[n - 1]) {
    lo = n - 2;
  } else {
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (x[mid] <= xq ? lo : hi) = mid;
    }
  }
  const double h = x[lo + 1] - x[lo];
  const double t = (xq - x[lo]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * y[lo] + h10 * h * slopes[lo] + h01 * y[lo + 1] + h11 * h * slopes[lo + 1];
}

LevelRadius level_radius(const RadialGrid& grid, std::span<const double> u, double s) {
  const int N = grid.size();
  if (static_cast<int>(u.size()) != N) fail(ErrorKind::Parameter, "profile size mismatch");
  if (s <= 0.0) fail(ErrorKind::Parameter, "level s must be positive");
  const double scale = std::abs(u[0]) + 1.0;
  for (int i = 0; i + 1 < N; ++i)
    if (u[i + 1] > u[i] + 1e-12 * scale)
      fail(ErrorKind::InvariantViolation, "profile is not decreasing in r");

  const double u_top = std::max(center_extrapolate(grid, u), u[0]);
  if (s >= u_top) return {0.0, true};
  if (s <= u[N - 1]) return {grid.radius, false};

  if (s > u[0]) {
    // within [0, r_1]: invert the extrapolating parabola by bisection
    double lo = 0.0, hi = grid.nodes[0];
    const double x0 = grid.nodes[0], x1 = grid.nodes[1], x2 = grid.nodes[2];
    const double d01 = (u[1] - u[0]) / (x1 - x0);
    const double d12 = (u[2] - u[1]) / (x2 - x1);
    const double d012 = (d12 - d01) / (x2 - x0);
    auto eval = [&](double r) { return u[0] + d01 * (r - x0) + d012 * (r - x0) * (r - x1); };
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (eval(mid) > s ? lo : hi) = mid;
      if (hi - lo < 1e-15 * grid.radius) break;
    }
    return {0.5 * (lo + hi), false};
  }

  auto slopes = pchip_slopes(grid.nodes, u);
  int lo = 0, hi = N - 1;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (u[mid] >= s ? lo : hi) = mid;
  }
  double a = grid.nodes[lo], b = grid.nodes[hi];
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    (pchip_eval(grid.nodes, u, slopes, mid) > s ? a : b) = mid;
    if (b - a < 1e-14 * grid.radius) break;
  }
  return {0.5 * (a + b), false};
}

namespace {

// QUADPACK dqk15 nodes and weights
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double resg = fc * kWg[3];
  double resk = fc * kWgk[7];
  for (int j = 0; j < 7; ++j) {
    const double x = h * kXgk[j];
    const double f1 = f(c - x), f2 = f(c + x);
    resk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  const double value = resk * h;
  const double err = std::abs((resk - resg) * h);
  return {a, b, value, err};
}

}  // namespace

IntegralResult adaptive_quadrature(const std::function<double(double)>& f, double a, double b,
                                   double abs_tol, int max_panels) {
  if (a == b) return {0.0, 0.0};
  std::priority_queue<Panel> queue;
  queue.push(gk15(f, a, b));
  double value = queue.top().value;
  double error = queue.top().error;
  int panels = 1;
  while (error > abs_tol + 1e-15 * std::abs(value) && panels < max_panels) {
    Panel worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    Panel left = gk15(f, worst.a, mid);
    Panel right = gk15(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
    ++panels;
    if (mid == worst.a || mid == worst.b) break;  // interval exhausted
  }
  if (error > abs_tol + 1e-12 * std::abs(value))
    throw ToleranceError("adaptive quadrature did not reach requested tolerance", error);
  return {value, error};
}

}  // namespace pfold
