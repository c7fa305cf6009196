#include "pfold/nonlinearity.hpp"

#include <algorithm>
#include <cmath>

#include "pfold/quadrature.hpp"

namespace pfold {

std::string NonlinearitySpec::name() const {
  switch (kind) {
    case NonlinearityKind::Exponential: return "exponential";
    case NonlinearityKind::Power: return "power";
    case NonlinearityKind::Mems: return "mems";
  }
  return "?";
}

double NonlinearitySpec::domain_sup() const {
  return kind == NonlinearityKind::Mems ? 1.0 : std::numeric_limits<double>::infinity();
}

void validate(const NonlinearitySpec& spec, double p) {
  if (!(p > 1.0) || !(p <= 2.0)) fail(ErrorKind::Parameter, "p must lie in (1, 2]");
  if (spec.kind == NonlinearityKind::Power && !(spec.m > p - 1.0))
    fail(ErrorKind::Parameter, "power nonlinearity requires m > p - 1");
  if (spec.kind == NonlinearityKind::Mems && !(spec.m > 0.0))
    fail(ErrorKind::Parameter, "MEMS nonlinearity requires m > 0");
}

namespace {

void check_domain(const NonlinearitySpec& spec, double t) {
  if (spec.kind == NonlinearityKind::Mems && t >= 1.0)
    fail(ErrorKind::Domain, "MEMS nonlinearity is only defined for t < 1");
}

}  // namespace

double eval_f(const NonlinearitySpec& spec, double t) {
  check_domain(spec, t);
  switch (spec.kind) {
    case NonlinearityKind::Exponential: return std::exp(t);
    case NonlinearityKind::Power: return std::pow(1.0 + t, spec.m);
    case NonlinearityKind::Mems: return std::pow(1.0 - t, -spec.m);
  }
  return 0.0;
}

double eval_df(const NonlinearitySpec& spec, double t) {
  check_domain(spec, t);
  switch (spec.kind) {
    case NonlinearityKind::Exponential: return std::exp(t);
    case NonlinearityKind::Power: return spec.m * std::pow(1.0 + t, spec.m - 1.0);
    case NonlinearityKind::Mems: return spec.m * std::pow(1.0 - t, -spec.m - 1.0);
  }
  return 0.0;
}

double f_zero(const NonlinearitySpec&) { return 1.0; }

double psi(const NonlinearitySpec& spec, double p, double t) {
  if (p <= 1.0) fail(ErrorKind::Parameter, "psi requires p > 1");
  if (t < 0.0) fail(ErrorKind::Parameter, "psi requires t >= 0");
  if (t == 0.0) return 0.0;
  return std::pow(eval_f(spec, t) - f_zero(spec), 1.0 / (p - 1.0));
}

double dpsi(const NonlinearitySpec& spec, double p, double t) {
  if (p <= 1.0) fail(ErrorKind::Parameter, "dpsi requires p > 1");
  if (t < 0.0) fail(ErrorKind::Parameter, "dpsi requires t >= 0");
  const double gap = eval_f(spec, t) - f_zero(spec);
  if (gap <= 0.0) return p < 2.0 ? 0.0 : eval_df(spec, t);
  return std::pow(gap, (2.0 - p) / (p - 1.0)) * eval_df(spec, t) / (p - 1.0);
}

namespace {

// Dyadic grading toward 0 resolves the fractional power psi'(s)^2 ~ s^beta.
IntegralResult integrate_dpsi_sq(const NonlinearitySpec& spec, double p, double lo, double hi,
                                 double abs_tol) {
  auto f = [&](double s) {
    const double d = dpsi(spec, p, s);
    return d * d;
  };
  if (lo > 0.0) return adaptive_quadrature(f, lo, hi, abs_tol);
  IntegralResult total{0.0, 0.0};
  double top = hi;
  for (int k = 0; k < 60 && top > hi * 0x1p-52; ++k) {
    const double bottom = 0.5 * top;
    auto part = adaptive_quadrature(f, bottom, top, abs_tol * 0x1p-3);
    total.value += part.value;
    total.error += part.error;
    top = bottom;
    if (std::abs(part.value) < 1e-3 * abs_tol && f(top) * top < 1e-3 * abs_tol) break;
  }
  // remaining [0, top] bounded by the integrand value at the cap
  total.error += std::abs(f(top)) * top;
  return total;
}

}  // namespace

double g_integral(const NonlinearitySpec& spec, double p, double t, double abs_tol,
                  double* err_out) {
  if (t < 0.0) fail(ErrorKind::Parameter, "g_integral requires t >= 0");
  if (t == 0.0) {
    if (err_out) *err_out = 0.0;
    return 0.0;
  }
  auto r = integrate_dpsi_sq(spec, p, 0.0, t, abs_tol);
  if (err_out) *err_out = r.error;
  return r.value;
}

double h_integral(const NonlinearitySpec& spec, double p, double t, double abs_tol,
                  double* err_out) {
  if (t == 0.0) {
    if (err_out) *err_out = 0.0;
    return 0.0;
  }
  // h(t) = psi(t) psi'(t) - g(t) since \int_0^t psi' = psi(t)
  return psi(spec, p, t) * dpsi(spec, p, t) - g_integral(spec, p, t, abs_tol, err_out);
}

std::vector<double> g_integral_batch(const NonlinearitySpec& spec, double p,
                                     std::span<const double> ts, double abs_tol,
                                     double* err_out) {
  std::vector<double> out(ts.size());
  if (ts.empty()) return out;
  double err_total = 0.0;
  double prev_t = 0.0, prev_g = 0.0;
  bool first_positive = true;
  for (size_t i = 0; i < ts.size(); ++i) {
    const double t = ts[i];
    if (t < prev_t) fail(ErrorKind::Parameter, "g_integral_batch needs ascending levels");
    if (t <= 0.0) {
      out[i] = 0.0;
      continue;
    }
    IntegralResult seg;
    if (first_positive) {
      seg = integrate_dpsi_sq(spec, p, 0.0, t, abs_tol);
      first_positive = false;
    } else if (t > prev_t) {
      seg = integrate_dpsi_sq(spec, p, prev_t, t, abs_tol);
    }
    prev_g += seg.value;
    err_total += seg.error;
    out[i] = prev_g;
    prev_t = t;
  }
  if (err_out) *err_out = err_total;
  return out;
}

AssumptionReport check_assumptions(const NonlinearitySpec& spec, double p,
                                   std::span<const double> grid) {
  validate(spec, p);
  const int n = static_cast<int>(grid.size());
  if (n < 32) fail(ErrorKind::Parameter, "assumption grid needs at least 32 points");
  for (int i = 0; i + 1 < n; ++i)
    if (grid[i + 1] <= grid[i]) fail(ErrorKind::Parameter, "assumption grid must be increasing");
  const double needed_top = spec.kind == NonlinearityKind::Mems ? 1.0 - 1e-3 : 50.0;
  if (grid.back() < needed_top)
    fail(ErrorKind::Parameter, "assumption grid must reach the far tail");
  if (grid.front() <= 0.0) fail(ErrorKind::Parameter, "assumption grid must be positive");

  AssumptionReport rep;
  rep.sample_grid.assign(grid.begin(), grid.end());

  rep.positive = true;
  rep.increasing = true;
  std::vector<double> f(n), conv(n);
  for (int i = 0; i < n; ++i) {
    f[i] = eval_f(spec, grid[i]);
    if (!(f[i] > 0.0)) rep.positive = false;
    if (eval_df(spec, grid[i]) < 0.0) rep.increasing = false;
    rep.superlinear_ratio.push_back(f[i] / std::pow(grid[i], p - 1.0));
    conv[i] = std::pow(f[i], 1.0 / (p - 1.0));
  }

  // superlinearity: the ratio must grow monotonically on a tail and keep growing
  int tail_start = n - 1;
  while (tail_start > 0 && rep.superlinear_ratio[tail_start] >
                               rep.superlinear_ratio[tail_start - 1] * (1.0 + 1e-14))
    --tail_start;
  const int tail_len = n - tail_start;
  rep.superlinear = tail_len >= 8 &&
                    rep.superlinear_ratio.back() > 2.0 * rep.superlinear_ratio[tail_start];

  // asymptotic convexity: detect T as the first point after which all second
  // divided differences of f^{1/(p-1)} stay above -1e-12
  rep.convexity_second_diff.assign(n, 0.0);
  int last_bad = -1;
  for (int i = 1; i + 1 < n; ++i) {
    const double d1 = (conv[i] - conv[i - 1]) / (grid[i] - grid[i - 1]);
    const double d2 = (conv[i + 1] - conv[i]) / (grid[i + 1] - grid[i]);
    rep.convexity_second_diff[i] = (d2 - d1) / (grid[i + 1] - grid[i - 1]);
    if (rep.convexity_second_diff[i] < -1e-12) last_bad = i;
  }
  if (last_bad + 1 <= n - 3) {
    rep.asymptotically_convex = true;
    rep.convexity_threshold = grid[last_bad + 1];
  }

  // tail half-bound 2 t psi'(t) >= psi(t)
  rep.psi_halfbound_margin.assign(n, 0.0);
  for (int i = 0; i < n; ++i)
    rep.psi_halfbound_margin[i] =
        2.0 * grid[i] * dpsi(spec, p, grid[i]) - psi(spec, p, grid[i]);
  int first_ok = n;
  for (int i = n - 1; i >= 0 && rep.psi_halfbound_margin[i] >= 0.0; --i) first_ok = i;
  rep.psi_halfbound_holds = first_ok < n;
  rep.psi_halfbound_threshold = rep.psi_halfbound_holds ? grid[first_ok] : grid.back();
  return rep;
}

}  // namespace pfold
