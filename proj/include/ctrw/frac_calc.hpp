#pragma once

// One-sided fractional derivatives of order beta in (0,1) on uniformly
// sampled functions: Caputo, Riemann-Liouville, the regularized Caputo
// derivative, the generator form of the stable subordinator and its dual.
//
// Samples are interpolated piecewise linearly inside the window
// [lower, upper()]. Outside the window the function follows `decay`.
// A sample sitting on the lower endpoint is read as f(lower+), one on the
// upper endpoint as f(upper-), so a jump exactly at an endpoint is
// represented without smearing.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ctrw/error.hpp"

namespace ctrw {

/// Order of a one-sided fractional derivative; strictly inside (0,1).
class FracOrder {
 public:
  explicit FracOrder(double beta) : beta_(beta) {
    if (!(beta > 0.0 && beta < 1.0)) {
      throw DomainError("fractional order must lie in (0,1), got " + std::to_string(beta));
    }
  }
  double value() const noexcept { return beta_; }

 private:
  double beta_;
};

inline double gamma_fn(double x) { return std::tgamma(x); }

/// Gamma(-beta) for beta in (0,1). Negative on that range.
inline double gamma_of_negative(double beta) { return -std::tgamma(1.0 - beta) / beta; }

enum class Decay { zero, constant, unsupported };

struct SampledFunction {
  double lower = 0.0;
  double step = 0.0;
  std::vector<double> values;
  Decay decay = Decay::unsupported;
  /// The conceptual domain continues past the window (a = -inf / b = +inf).
  bool lower_infinite = false;
  bool upper_infinite = false;

  std::size_t size() const noexcept { return values.size(); }
  double upper() const noexcept { return lower + step * static_cast<double>(values.size() - 1); }
  double node(std::size_t i) const noexcept { return lower + step * static_cast<double>(i); }

  void validate() const {
    if (values.size() < 2) throw DomainError("sampled function needs at least 2 samples");
    if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("sample step must be positive");
    if ((lower_infinite || upper_infinite) && decay == Decay::unsupported) {
      throw UnsupportedError("infinite domain requires a zero or constant decay model");
    }
  }

  double extension_below() const {
    switch (decay) {
      case Decay::zero: return 0.0;
      case Decay::constant: return values.front();
      case Decay::unsupported: break;
    }
    throw UnsupportedError("function value requested below the sampled window without a decay model");
  }

  double extension_above() const {
    switch (decay) {
      case Decay::zero: return 0.0;
      case Decay::constant: return values.back();
      case Decay::unsupported: break;
    }
    throw UnsupportedError("function value requested above the sampled window without a decay model");
  }

  /// Piecewise-linear value inside the window, decay model outside.
  double operator()(double y) const {
    const double hi = upper();
    if (y < lower) return extension_below();
    if (y > hi) return extension_above();
    const double s = (y - lower) / step;
    auto k = static_cast<std::size_t>(std::floor(s));
    if (k >= values.size() - 1) return values.back();
    const double frac = s - static_cast<double>(k);
    return values[k] + frac * (values[k + 1] - values[k]);
  }
};

/// Samples `fn` on lower, lower+step, ..., upper (number of nodes rounded).
inline SampledFunction sample_function(const std::function<double(double)>& fn, double lower,
                                       double upper, double step, Decay decay = Decay::zero) {
  if (!(upper > lower)) throw DomainError("sample window must have upper > lower");
  const double cells = (upper - lower) / step;
  const auto n = static_cast<std::size_t>(std::llround(cells));
  if (n < 1 || std::abs(cells - static_cast<double>(n)) > 1e-6 * std::max(1.0, cells)) {
    throw DomainError("sample step does not divide the window");
  }
  SampledFunction f;
  f.lower = lower;
  f.step = (upper - lower) / static_cast<double>(n);
  f.decay = decay;
  f.values.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) f.values[i] = fn(f.node(i));
  return f;
}

/// Mirror image g(y) = f(-y).
inline SampledFunction reflect(const SampledFunction& f) {
  SampledFunction g = f;
  g.lower = -f.upper();
  g.values.assign(f.values.rbegin(), f.values.rend());
  g.lower_infinite = f.upper_infinite;
  g.upper_infinite = f.lower_infinite;
  return g;
}

enum class QuadratureKind { product_trapezoid, grunwald_letnikov };

struct QuadratureScheme {
  QuadratureKind kind = QuadratureKind::product_trapezoid;
  /// Bound on the Richardson error estimate of the Grunwald-Letnikov route.
  double tolerance = 1e-2;

  void validate() const {
    if (!(tolerance > 0.0)) throw DomainError("quadrature tolerance must be positive");
  }
};

/// w_k = (-1)^k binom(beta, k), k = 0..n.
inline std::vector<double> gl_weights(FracOrder order, std::size_t n) {
  const double beta = order.value();
  std::vector<double> w(n + 1);
  w[0] = 1.0;
  for (std::size_t k = 1; k <= n; ++k) {
    w[k] = w[k - 1] * (static_cast<double>(k) - 1.0 - beta) / static_cast<double>(k);
  }
  return w;
}

namespace detail {

constexpr double kNodeSnap = 1e-9;

// Exact integral over [ua, ub] of the linear interpolant between (ua, va)
// and (ub, vb) against u^p; requires ua > 0 unless p > -1.
inline double linear_against_power(double ua, double ub, double va, double vb, double p) {
  const double width = ub - ua;
  if (width <= 0.0) return 0.0;
  const double slope = (vb - va) / width;
  const double q1 = p + 1.0;
  const double q2 = p + 2.0;
  // v(u) = va + slope (u - ua)
  const double m0 = (std::pow(ub, q1) - std::pow(ua, q1)) / q1;
  const double m1 = (std::pow(ub, q2) - std::pow(ua, q2)) / q2;
  return (va - slope * ua) * m0 + slope * m1;
}

// Nodal derivative estimates: central inside, second-order one-sided at ends.
inline std::vector<double> nodal_derivatives(const SampledFunction& f) {
  const auto& v = f.values;
  const std::size_t n = v.size();
  const double h = f.step;
  std::vector<double> d(n);
  if (n == 2) {
    d[0] = d[1] = (v[1] - v[0]) / h;
    return d;
  }
  d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
  d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
  return d;
}

inline double interpolate(std::span<const double> v, double s) {
  auto k = static_cast<std::size_t>(std::floor(s));
  if (k >= v.size() - 1) return v.back();
  const double frac = s - static_cast<double>(k);
  return v[k] + frac * (v[k + 1] - v[k]);
}

// (1-beta) * Gamma(1-beta) * Caputo-type integral of the left side:
// integral over [lower, x] of f'(y) (x - y)^(-beta), f' piecewise linear
// through the nodal derivative estimates.
inline double left_derivative_integral(const SampledFunction& f, double beta, double x) {
  const auto d = nodal_derivatives(f);
  const double h = f.step;
  // Offsets come from the snapped index: a residue like 1e-14 left by
  // x - node(k) is amplified by u^(1-beta) when beta is near 1.
  double s = (x - f.lower) / h;
  if (std::abs(s - std::round(s)) < kNodeSnap) s = std::round(s);
  const auto full = static_cast<std::size_t>(std::floor(s));
  double sum = 0.0;
  for (std::size_t k = 0; k < full; ++k) {
    const double ub = (s - static_cast<double>(k)) * h;
    const double ua = (s - static_cast<double>(k + 1)) * h;
    sum += linear_against_power(std::max(ua, 0.0), ub, d[k + 1], d[k], -beta);
  }
  const double rest = (s - static_cast<double>(full)) * h;
  if (rest > kNodeSnap * h && full + 1 < f.size()) {
    const double dx = interpolate(d, s);
    sum += linear_against_power(0.0, rest, dx, d[full], -beta);
  }
  return sum;
}

// Coefficients of the interpolating polynomial through (z[i], v[i]) in
// powers of z; at most 4 points.
inline void newton_to_power(const double* z, const double* v, int n, double* c) {
  double d[4] = {0.0, 0.0, 0.0, 0.0};
  for (int i = 0; i < n; ++i) d[i] = v[i];
  for (int j = 1; j < n; ++j) {
    for (int i = n - 1; i >= j; --i) d[i] = (d[i] - d[i - 1]) / (z[i] - z[i - j]);
  }
  for (int i = 0; i < 4; ++i) c[i] = 0.0;
  // Horner on the Newton form: p = d0 + (z - z0)(d1 + (z - z1)(d2 + ...)).
  c[0] = d[n - 1];
  int deg = 0;
  for (int i = n - 2; i >= 0; --i) {
    // c <- c * (z - z[i]) + d[i]
    for (int k = deg + 1; k >= 1; --k) c[k] = c[k - 1] - z[i] * c[k];
    c[0] = -z[i] * c[0] + d[i];
    ++deg;
  }
}

// Integral over [ya, yb] (ya > 0) of (y - ym)^k y^p, k = 0..3.
inline void centred_power_moments(double ya, double yb, double ym, double p, double* m) {
  double raw[4];
  for (int i = 0; i < 4; ++i) {
    const double q = p + 1.0 + i;
    raw[i] = (std::pow(yb, q) - std::pow(ya, q)) / q;
  }
  m[0] = raw[0];
  m[1] = raw[1] - ym * raw[0];
  m[2] = raw[2] - 2.0 * ym * raw[1] + ym * ym * raw[0];
  m[3] = raw[3] - 3.0 * ym * raw[2] + 3.0 * ym * ym * raw[1] - ym * ym * ym * raw[0];
}

// Integral over [0, inf) of (f(x + dir*y) - f(x)) y^(-1-beta) by cubic
// Lagrange product integration through the samples, with the singular first
// cell integrated exactly and the decay-model extension handled in closed form.
inline double generator_integral(const SampledFunction& f, double beta, double x, int dir) {
  if (f.decay == Decay::unsupported) {
    throw UnsupportedError("generator form needs a zero or constant decay model (unbounded tails unsupported)");
  }
  const double h = f.step;
  const double fx = f(x);
  const double s = (x - f.lower) / h;
  const long last = static_cast<long>(f.size()) - 1;
  const double snapped = std::round(s);
  const bool on_node = std::abs(s - snapped) < kNodeSnap;
  long idx;
  if (dir < 0) {
    idx = on_node ? static_cast<long>(snapped) - 1 : static_cast<long>(std::floor(s));
  } else {
    idx = on_node ? static_cast<long>(snapped) + 1 : static_cast<long>(std::ceil(s));
  }
  // Abscissae y_j and integrand numerators g_j, starting with (0, 0).
  std::vector<double> ys{0.0};
  std::vector<double> gs{0.0};
  for (; idx >= 0 && idx <= last; idx += dir) {
    ys.push_back(std::abs(static_cast<double>(idx) - (on_node ? snapped : s)) * h);
    gs.push_back(f.values[static_cast<std::size_t>(idx)] - fx);
  }
  const double p = -1.0 - beta;
  const long npts = static_cast<long>(ys.size());
  const int width = static_cast<int>(std::min<long>(4, npts));
  double sum = 0.0;
  for (long j = 0; j + 1 < npts; ++j) {
    const long start = std::max<long>(0, std::min<long>(j - 1, npts - width));
    double z[4], v[4], c[4];
    if (j == 0) {
      for (int i = 0; i < width; ++i) {
        z[i] = ys[static_cast<std::size_t>(i)];
        v[i] = gs[static_cast<std::size_t>(i)];
      }
      newton_to_power(z, v, width, c);
      // c[0] = 0 because the stencil passes through (0, 0).
      const double y1 = ys[1];
      sum += c[1] * std::pow(y1, 1.0 - beta) / (1.0 - beta) +
             c[2] * std::pow(y1, 2.0 - beta) / (2.0 - beta) +
             c[3] * std::pow(y1, 3.0 - beta) / (3.0 - beta);
      continue;
    }
    const double ya = ys[static_cast<std::size_t>(j)];
    const double yb = ys[static_cast<std::size_t>(j + 1)];
    const double ym = 0.5 * (ya + yb);
    for (int i = 0; i < width; ++i) {
      z[i] = ys[static_cast<std::size_t>(start + i)] - ym;
      v[i] = gs[static_cast<std::size_t>(start + i)];
    }
    newton_to_power(z, v, width, c);
    double m[4];
    centred_power_moments(ya, yb, ym, p, m);
    sum += c[0] * m[0] + c[1] * m[1] + c[2] * m[2] + c[3] * m[3];
  }
  const double edge = dir < 0 ? f.lower : f.upper();
  const double ext = dir < 0 ? f.extension_below() : f.extension_above();
  const double g_tail = ext - fx;
  const double y_edge = std::abs(x - edge);
  if (y_edge <= kNodeSnap * h) {
    if (std::abs(g_tail) > 0.0) {
      throw DomainError("generator form diverges: evaluation point sits on a jump of the extension");
    }
    return sum;
  }
  sum += g_tail * std::pow(y_edge, -beta) / beta;
  return sum;
}

inline void require_point_in_window(const SampledFunction& f, double x) {
  if (!std::isfinite(x) || x < f.lower - detail::kNodeSnap * f.step ||
      x > f.upper() + detail::kNodeSnap * f.step) {
    throw DomainError("evaluation point " + std::to_string(x) + " outside the sampled window");
  }
}

// Truncated Grunwald-Letnikov sum of (f - f(anchor)) with step h backward
// (dir = -1) or forward (dir = +1) from x.
inline double gl_sum(const SampledFunction& f, double beta, double x, double h, int dir,
                     double anchor_value, double anchor) {
  const auto n = static_cast<std::size_t>(std::floor(std::abs(x - anchor) / h + kNodeSnap));
  const auto w = gl_weights(FracOrder(beta), n);
  double sum = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double y = x + dir * static_cast<double>(k) * h;
    const double fy = (k == n) ? (std::abs(y - anchor) < kNodeSnap * h ? anchor_value : f(y)) : f(y);
    sum += w[k] * (fy - anchor_value);
  }
  return sum * std::pow(h, -beta);
}

inline double regularized_gl(const SampledFunction& f, FracOrder order, double x,
                             const QuadratureScheme& scheme, int dir) {
  const double beta = order.value();
  const double anchor = dir < 0 ? f.lower : f.upper();
  const double anchor_value = dir < 0 ? f.values.front() : f.values.back();
  const double fine = gl_sum(f, beta, x, f.step, dir, anchor_value, anchor);
  if (std::abs(x - anchor) < 2.0 * f.step * (1.0 - kNodeSnap)) return fine;
  const double coarse = gl_sum(f, beta, x, 2.0 * f.step, dir, anchor_value, anchor);
  const double extrapolated = 2.0 * fine - coarse;
  const double estimate = std::abs(fine - coarse);
  if (estimate > scheme.tolerance * (1.0 + std::abs(extrapolated))) {
    throw ResolutionError("Grunwald-Letnikov error estimate " + std::to_string(estimate) +
                          " exceeds tolerance; refine the sample step");
  }
  return extrapolated;
}

}  // namespace detail

/// Regularized (Grunwald-Letnikov) Caputo derivative from the left; the
/// boundary value f(a) is subtracted before differencing, so constants map
/// to exactly zero. One Richardson step (h, 2h) lifts the order above one.
inline double regularized_caputo_left(const SampledFunction& f, FracOrder order, double x,
                                      const QuadratureScheme& scheme = {}) {
  f.validate();
  scheme.validate();
  detail::require_point_in_window(f, x);
  if (x <= f.lower + detail::kNodeSnap * f.step) throw DomainError("regularized Caputo derivative needs x > a");
  if (x - f.lower < f.step * (1.0 - detail::kNodeSnap)) {
    throw ResolutionError("fewer than 2 samples left of the evaluation point");
  }
  return detail::regularized_gl(f, order, x, scheme, -1);
}

/// Mirror of regularized_caputo_left with the sign of the right-sided Caputo derivative.
inline double regularized_caputo_right(const SampledFunction& f, FracOrder order, double x,
                                       const QuadratureScheme& scheme = {}) {
  f.validate();
  scheme.validate();
  detail::require_point_in_window(f, x);
  if (x >= f.upper() - detail::kNodeSnap * f.step) throw DomainError("regularized Caputo derivative needs x < b");
  if (f.upper() - x < f.step * (1.0 - detail::kNodeSnap)) {
    throw ResolutionError("fewer than 2 samples right of the evaluation point");
  }
  return detail::regularized_gl(f, order, x, scheme, +1);
}

/// Left-sided Caputo derivative with lower limit a = f.lower (or -inf).
inline double caputo_left(const SampledFunction& f, FracOrder order, double x,
                          const QuadratureScheme& scheme = {}) {
  f.validate();
  detail::require_point_in_window(f, x);
  if (x <= f.lower + detail::kNodeSnap * f.step) throw DomainError("Caputo derivative needs x > a");
  if (x - f.lower < f.step * (1.0 - detail::kNodeSnap)) {
    throw ResolutionError("fewer than 2 samples left of the evaluation point");
  }
  const double beta = order.value();
  double jump = 0.0;
  if (f.lower_infinite && f.decay == Decay::zero) {
    jump = f.values.front() * std::pow(x - f.lower, -beta);
  }
  if (scheme.kind == QuadratureKind::grunwald_letnikov) {
    return regularized_caputo_left(f, order, x, scheme) + jump / gamma_fn(1.0 - beta);
  }
  return (detail::left_derivative_integral(f, beta, x) + jump) / gamma_fn(1.0 - beta);
}

/// Right-sided Caputo derivative with upper limit b = f.upper() (or +inf).
inline double caputo_right(const SampledFunction& f, FracOrder order, double x,
                           const QuadratureScheme& scheme = {}) {
  f.validate();
  detail::require_point_in_window(f, x);
  if (x >= f.upper() - detail::kNodeSnap * f.step) throw DomainError("Caputo derivative needs x < b");
  if (f.upper() - x < f.step * (1.0 - detail::kNodeSnap)) {
    throw ResolutionError("fewer than 2 samples right of the evaluation point");
  }
  const double beta = order.value();
  double jump = 0.0;
  if (f.upper_infinite && f.decay == Decay::zero) {
    jump = f.values.back() * std::pow(f.upper() - x, -beta);
  }
  if (scheme.kind == QuadratureKind::grunwald_letnikov) {
    return regularized_caputo_right(f, order, x, scheme) + jump / gamma_fn(1.0 - beta);
  }
  // Mirror: the right integral of f' at x is minus the left integral of g' at -x, g(y) = f(-y).
  const SampledFunction g = reflect(f);
  return (detail::left_derivative_integral(g, beta, -x) + jump) / gamma_fn(1.0 - beta);
}

/// Left Riemann-Liouville derivative: Caputo plus the boundary term
/// f(a) (x - a)^(-beta) / Gamma(1 - beta); the term vanishes for a = -inf.
inline double rl_left(const SampledFunction& f, FracOrder order, double x,
                      const QuadratureScheme& scheme = {}) {
  const double caputo = caputo_left(f, order, x, scheme);
  if (f.lower_infinite) return caputo;
  const double beta = order.value();
  return caputo + f.values.front() * std::pow(x - f.lower, -beta) / gamma_fn(1.0 - beta);
}

/// Right Riemann-Liouville derivative in the signed convention that makes
/// RL = Caputo + f(b) (b - x)^(-beta) / Gamma(1 - beta).
inline double rl_right(const SampledFunction& f, FracOrder order, double x,
                       const QuadratureScheme& scheme = {}) {
  const double caputo = caputo_right(f, order, x, scheme);
  if (f.upper_infinite) return caputo;
  const double beta = order.value();
  return caputo + f.values.back() * std::pow(f.upper() - x, -beta) / gamma_fn(1.0 - beta);
}

/// (1/Gamma(-beta)) * integral_0^inf (f(x - y) - f(x)) y^(-1-beta) dy.
inline double generator_form(const SampledFunction& f, FracOrder order, double x) {
  f.validate();
  detail::require_point_in_window(f, x);
  const double beta = order.value();
  return detail::generator_integral(f, beta, x, -1) / gamma_of_negative(beta);
}

/// A*_beta f(x) = -(1/Gamma(-beta)) * integral_0^inf (f(x - y) - f(x)) y^(-1-beta) dy.
inline double dual_generator_form(const SampledFunction& f, FracOrder order, double x) {
  return -generator_form(f, order, x);
}

/// A_beta f(x) = -(1/Gamma(-beta)) * integral_0^inf (f(x + y) - f(x)) y^(-1-beta) dy,
/// the generator of the beta-stable subordinator.
inline double a_beta(const SampledFunction& f, FracOrder order, double x) {
  f.validate();
  detail::require_point_in_window(f, x);
  const double beta = order.value();
  return -detail::generator_integral(f, beta, x, +1) / gamma_of_negative(beta);
}

}  // namespace ctrw
