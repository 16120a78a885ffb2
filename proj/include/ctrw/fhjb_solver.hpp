#pragma once

// Limit equation of the scaled DP recursion. In remaining time t it reads
//
//   0 = t^(-beta) S0(y) / Gamma(1-beta)
//       + sup_u [ L_alpha^u S + B^u S + 2 g_u(t, y) t^(1-beta) + F(u, y) ]
//       + A*_beta S,
//
// equivalently the Caputo problem D^beta_t (S - S0) = sup_u [...] with
// S(0, .) = S0. The solver marches the Caputo form with Grunwald-Letnikov
// history weights and an explicit Hamiltonian; the residual routine checks
// the form with the source term and A*_beta on the stored solution.
// The elapsed-time variant is solved in remaining time T - t and reindexed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ctrw/error.hpp"
#include "ctrw/frac_calc.hpp"
#include "ctrw/grid.hpp"
#include "ctrw/model.hpp"

namespace ctrw {

enum class LAlphaForm { automatic, compensated, uncompensated };

namespace detail {

inline double slice_ext(const std::vector<double>& v, long i, SpaceRule rule) {
  const long n = static_cast<long>(v.size());
  if (i >= 0 && i < n) return v[static_cast<std::size_t>(i)];
  if (rule == SpaceRule::constant) return i < 0 ? v.front() : v.back();
  if (i < 0) return v[0] + static_cast<double>(i) * (v[1] - v[0]);
  return v[static_cast<std::size_t>(n - 1)] + static_cast<double>(i - n + 1) * (v[static_cast<std::size_t>(n - 1)] - v[static_cast<std::size_t>(n - 2)]);
}

inline LAlphaForm resolve_form(double alpha, LAlphaForm form) {
  if (form == LAlphaForm::automatic) return alpha > 1.0 ? LAlphaForm::compensated : LAlphaForm::uncompensated;
  if (form == LAlphaForm::uncompensated && alpha > 1.0) {
    throw UnsupportedError("the uncompensated stable generator diverges for alpha > 1");
  }
  return form;
}

// Weights of the lattice cell [k h, (k+1) h]: the bracket g(r) is read as
// r^2 q(r) with q piecewise linear, integrated exactly against r^(-1-alpha);
// left[k] multiplies g(k h) and right[k] multiplies g((k+1) h). Reading q
// rather than g as linear is exact on the r^2 term of a smooth bracket.
struct CellWeights {
  double first = 0.0;
  std::vector<double> left;
  std::vector<double> right;
};

inline CellWeights l_alpha_weights(double alpha, double h, std::size_t max_k, LAlphaForm form) {
  CellWeights c;
  const double p = 1.0 - alpha;
  // On [0, h]: g(r) ~ g(h) (r/h)^2 when compensated, g(h) r/h otherwise.
  c.first = std::pow(h, -alpha) / (form == LAlphaForm::compensated ? (2.0 - alpha) : (1.0 - alpha));
  c.left.assign(max_k + 1, 0.0);
  c.right.assign(max_k + 1, 0.0);
  for (std::size_t k = 1; k <= max_k; ++k) {
    const double a = static_cast<double>(k) * h;
    const double b = a + h;
    c.left[k] = linear_against_power(a, b, 1.0, 0.0, p) / (a * a);
    c.right[k] = linear_against_power(a, b, 0.0, 1.0, p) / (b * b);
  }
  return c;
}

/// Largest coefficient W of -2 f(y) in the discrete integral over the nodes
/// of an n-node slice: first cell, lattice cells up to the farther window
/// edge at K cells, and the closed-form tail (K h)^(-alpha) / alpha.
inline double l_alpha_diagonal(double alpha, double h, std::size_t n, LAlphaForm form) {
  const auto c = l_alpha_weights(alpha, h, n, form);
  double cells = 0.0;
  double worst = 0.0;
  for (std::size_t K = 1; K <= n; ++K) {
    if (K > 1) cells += c.left[K - 1] + c.right[K - 1];
    if (2 * K >= n + 1) worst = std::max(worst, c.first + cells + std::pow(static_cast<double>(K) * h, -alpha) / alpha);
  }
  return worst;
}

}  // namespace detail

/// Symmetric stable generator on a uniform slice:
///   L f(y) = (alpha s(y) / 2) integral_0^inf (f(y+r) + f(y-r) - 2 f(y)) r^(-1-alpha) dr,
/// s(y) the tail constant; alpha = 2 gives s(y) f''(y) / 2.
inline std::vector<double> apply_l_alpha(const std::vector<double>& slice, double h, double alpha,
                                         const std::vector<double>& scale, LAlphaForm form = LAlphaForm::automatic,
                                         SpaceRule rule = SpaceRule::constant) {
  if (alpha == 1.0) throw UnsupportedError("unsupported order alpha = 1 for the stable generator");
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("stable index must lie in (0,1) u (1,2]");
  const std::size_t n = slice.size();
  if (n < 5) throw ResolutionError("stable generator needs at least 5 space nodes");
  if (!(h > 0.0)) throw DomainError("space step must be positive");
  if (scale.size() != n) throw DomainError("scale profile must match the slice");
  std::vector<double> out(n, 0.0);
  if (alpha == 2.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto li = static_cast<long>(i);
      const double d2 = detail::slice_ext(slice, li + 1, rule) - 2.0 * slice[i] + detail::slice_ext(slice, li - 1, rule);
      out[i] = 0.5 * scale[i] * d2 / (h * h);
    }
    return out;
  }
  const LAlphaForm resolved = detail::resolve_form(alpha, form);
  const auto c = detail::l_alpha_weights(alpha, h, n, resolved);
  for (std::size_t i = 0; i < n; ++i) {
    const auto li = static_cast<long>(i);
    const long K = std::max(li, static_cast<long>(n) - 1 - li) + 1;
    auto g = [&](long k) {
      return detail::slice_ext(slice, li + k, rule) + detail::slice_ext(slice, li - k, rule) - 2.0 * slice[i];
    };
    double integral = c.first * g(1);
    for (long k = 1; k < K; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      integral += c.left[ku] * g(k) + c.right[ku] * g(k + 1);
    }
    // Beyond K h both arguments lie in the extension, where g is affine in r.
    const double R = static_cast<double>(K) * h;
    const double gK = g(K);
    const double slope = (g(K + 1) - gK) / h;
    const double A = gK - slope * R;
    integral += A * std::pow(R, -alpha) / alpha;
    if (slope != 0.0) {
      if (alpha < 1.0) throw WindowError("linear extrapolation makes the stable integral diverge for alpha < 1");
      integral += slope * std::pow(R, 1.0 - alpha) / (alpha - 1.0);
    }
    out[i] = 0.5 * alpha * scale[i] * integral;
  }
  return out;
}

/// Inner-motion generator b f' + sigma^2 f'' / 2 with upwind first differences.
inline std::vector<double> apply_inner_generator(const std::vector<double>& slice, double h,
                                                 const std::vector<double>& drift,
                                                 const std::vector<double>& diffusion,
                                                 SpaceRule rule = SpaceRule::constant) {
  const std::size_t n = slice.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto li = static_cast<long>(i);
    const double up = detail::slice_ext(slice, li + 1, rule);
    const double down = detail::slice_ext(slice, li - 1, rule);
    const double b = drift[i];
    const double first = b >= 0.0 ? (up - slice[i]) / h : (slice[i] - down) / h;
    out[i] = b * first + 0.5 * diffusion[i] * diffusion[i] * (up - 2.0 * slice[i] + down) / (h * h);
  }
  return out;
}

struct FhjbOptions {
  LAlphaForm form = LAlphaForm::automatic;
};

namespace detail {

class Hamiltonian {
 public:
  Hamiltonian(const FhjbProblem& p, const std::vector<double>& y, SpaceRule rule, LAlphaForm form)
      : p_(p), y_(y), rule_(rule), form_(form) {
    h_ = GridFunction(std::vector<double>{0.0}, y).y_step();
    if (!(h_ > 0.0)) throw ConfigError("fHJB space grid must be uniform");
    for (const auto& c : p.controls) {
      std::vector<double> s(y.size()), b(y.size()), sig(y.size()), F(y.size());
      bool inner = false;
      for (std::size_t j = 0; j < y.size(); ++j) {
        s[j] = c.scale_at(y[j]);
        if (!(s[j] >= 0.0)) throw ConfigError("generator scale must be non-negative");
        b[j] = c.drift_at(y[j]);
        sig[j] = c.diffusion_at(y[j]);
        F[j] = c.jump_reward_at(y[j]);
        inner = inner || b[j] != 0.0 || sig[j] != 0.0;
      }
      scale_.push_back(std::move(s));
      drift_.push_back(std::move(b));
      diffusion_.push_back(std::move(sig));
      reward_.push_back(std::move(F));
      has_inner_.push_back(inner);
    }
    if (p.alpha != 2.0) diagonal_ = l_alpha_diagonal(p.alpha, h_, y.size(), resolve_form(p.alpha, form));
  }

  double step() const { return h_; }

  /// Largest magnitude of a diagonal coefficient over controls and nodes.
  double stiffness() const {
    double worst = 0.0;
    for (std::size_t u = 0; u < scale_.size(); ++u) {
      for (std::size_t j = 0; j < y_.size(); ++j) {
        double d;
        if (p_.alpha == 2.0) {
          d = scale_[u][j] / (h_ * h_);
        } else {
          d = p_.alpha * scale_[u][j] * diagonal_;
        }
        d += std::abs(drift_[u][j]) / h_ + diffusion_[u][j] * diffusion_[u][j] / (h_ * h_);
        worst = std::max(worst, d);
      }
    }
    return worst;
  }

  /// sup_u of the bracket at reward time t (the t^(1-beta) factor included).
  std::vector<double> sup(const std::vector<double>& v, double t) const {
    std::vector<double> best(v.size(), -INFINITY);
    const double tw = t > 0.0 ? 2.0 * std::pow(t, 1.0 - p_.beta) : 0.0;
    for (std::size_t u = 0; u < scale_.size(); ++u) {
      auto val = apply_l_alpha(v, h_, p_.alpha, scale_[u], form_, rule_);
      if (has_inner_[u]) {
        const auto inner = apply_inner_generator(v, h_, drift_[u], diffusion_[u], rule_);
        for (std::size_t j = 0; j < v.size(); ++j) val[j] += inner[j];
      }
      const auto& c = p_.controls[u];
      for (std::size_t j = 0; j < v.size(); ++j) {
        double x = val[j] + reward_[u][j];
        if (c.waiting_reward && tw != 0.0) x += tw * c.waiting_reward(t, y_[j]);
        best[j] = std::max(best[j], x);
      }
    }
    return best;
  }

 private:
  const FhjbProblem& p_;
  std::vector<double> y_;
  SpaceRule rule_;
  LAlphaForm form_;
  double h_ = 0.0;
  double diagonal_ = 0.0;
  std::vector<std::vector<double>> scale_, drift_, diffusion_, reward_;
  std::vector<bool> has_inner_;
};

inline double uniform_time_step(const std::vector<double>& t, double horizon) {
  if (t.size() < 2 || std::abs(t.front()) > 1e-12 || std::abs(t.back() - horizon) > 1e-9 * horizon) {
    throw ConfigError("fHJB time grid must run uniformly from 0 to the horizon " + format_number(horizon));
  }
  const double h = horizon / static_cast<double>(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::abs(t[i] - t[i - 1] - h) > 1e-9 * h) throw ConfigError("fHJB time grid must be uniform");
  }
  return h;
}

}  // namespace detail

/// Grunwald-Letnikov march on the nodes of `grid` (values ignored). The
/// explicit step is monotone when h_t^beta * (largest diagonal) <= beta.
inline GridFunction solve_fhjb(const FhjbProblem& problem, const GridFunction& grid, const FhjbOptions& options = {}) {
  problem.validate();
  const double ht = detail::uniform_time_step(grid.t_nodes, problem.horizon);
  if (grid.y_nodes.size() < 5) throw ResolutionError("stable generator needs at least 5 space nodes");
  detail::Hamiltonian ham(problem, grid.y_nodes, grid.space_rule, options.form);
  const double beta = problem.beta;
  const double stiff = ham.stiffness();
  const double hb = std::pow(ht, beta);
  if (hb * stiff > beta) {
    const double admissible = std::pow(beta / stiff, 1.0 / beta);
    throw StabilityError("explicit fHJB step h_t = " + format_number(ht) + " violates the stability bound; admissible h_t <= " +
                             format_number(admissible),
                         admissible);
  }
  const std::size_t nt = grid.t_nodes.size();
  const std::size_t ny = grid.y_nodes.size();
  const auto w = gl_weights(FracOrder(beta), nt);
  std::vector<std::vector<double>> S(nt, std::vector<double>(ny));
  for (std::size_t j = 0; j < ny; ++j) S[0][j] = problem.initial(grid.y_nodes[j]);
  const auto& S0 = S[0];
  for (std::size_t n = 1; n < nt; ++n) {
    const double s = static_cast<double>(n) * ht;
    const double reward_t = problem.direction == Direction::remaining_time ? s : problem.horizon - s;
    const auto H = ham.sup(S[n - 1], reward_t);
    auto& out = S[n];
    for (std::size_t j = 0; j < ny; ++j) out[j] = S0[j] + hb * H[j];
    for (std::size_t k = 1; k < n; ++k) {
      const double wk = w[k];
      const auto& past = S[n - k];
      for (std::size_t j = 0; j < ny; ++j) out[j] -= wk * (past[j] - S0[j]);
    }
  }
  std::vector<double> t(nt);
  for (std::size_t i = 0; i < nt; ++i) t[i] = grid.t_nodes[i];
  GridFunction g(t, grid.y_nodes, grid.space_rule);
  for (std::size_t i = 0; i < nt; ++i) {
    const std::size_t src = problem.direction == Direction::remaining_time ? i : nt - 1 - i;
    std::copy(S[src].begin(), S[src].end(), g.slice(i));
  }
  g.metadata["solver"] = "fhjb";
  g.metadata["beta"] = format_number(beta);
  g.metadata["alpha"] = format_number(problem.alpha);
  g.metadata["horizon"] = format_number(problem.horizon);
  g.metadata["direction"] = to_string(problem.direction);
  g.metadata["t_step"] = format_number(ht);
  g.metadata["first_valid_t"] = format_number(ht);
  g.metadata["controls"] = std::to_string(problem.controls.size());
  return g;
}

struct FhjbResidual {
  /// max |source + sup_u[...] + A*_beta S| over nodes with remaining time > 0.
  double rl_form = 0.0;
  /// max |sup_u[...] + A*_beta (S - S(0))| over the same nodes.
  double caputo_form = 0.0;
  /// max |(RL derivative - Caputo derivative) - S(0) t^(-beta) / Gamma(1-beta)|.
  double boundary_gap = 0.0;
  /// Remaining time at which rl_form is attained.
  double rl_form_at = 0.0;
  /// rl_form restricted to remaining time >= settle_fraction * horizon,
  /// past the t^(-beta) layer of the first steps.
  double rl_form_settled = 0.0;
};

constexpr double kSettleFraction = 0.1;

/// Residuals of both forms of the limit equation on a stored solution. In
/// time, S is extended by zero below t = 0 (remaining time).
inline FhjbResidual fhjb_residual_report(const FhjbProblem& problem, const GridFunction& S,
                                         const FhjbOptions& options = {}) {
  problem.validate();
  const double ht = detail::uniform_time_step(S.t_nodes, problem.horizon);
  detail::Hamiltonian ham(problem, S.y_nodes, S.space_rule, options.form);
  const std::size_t nt = S.nt();
  const std::size_t ny = S.ny();
  const FracOrder order(problem.beta);
  const double g1 = std::tgamma(1.0 - problem.beta);
  auto row = [&](std::size_t n) {
    const std::size_t src = problem.direction == Direction::remaining_time ? n : nt - 1 - n;
    return std::vector<double>(S.slice(src), S.slice(src) + ny);
  };
  std::vector<std::vector<double>> R(nt);
  for (std::size_t n = 0; n < nt; ++n) R[n] = row(n);

  FhjbResidual out;
  std::vector<SampledFunction> full(ny), shifted(ny);
  for (std::size_t j = 0; j < ny; ++j) {
    full[j].lower = 0.0;
    full[j].step = ht;
    full[j].decay = Decay::zero;
    full[j].values.resize(nt);
    for (std::size_t n = 0; n < nt; ++n) full[j].values[n] = R[n][j];
    shifted[j] = full[j];
    for (auto& v : shifted[j].values) v -= R[0][j];
  }
  for (std::size_t n = 1; n < nt; ++n) {
    const double s = static_cast<double>(n) * ht;
    const double reward_t = problem.direction == Direction::remaining_time ? s : problem.horizon - s;
    const auto H = ham.sup(R[n], reward_t);
    for (std::size_t j = 0; j < ny; ++j) {
      const double src = problem.initial(S.y_nodes[j]) * std::pow(s, -problem.beta) / g1;
      const double a_full = dual_generator_form(full[j], order, s);
      const double a_shift = dual_generator_form(shifted[j], order, s);
      const double rl = std::abs(src + H[j] + a_full);
      if (rl > out.rl_form) {
        out.rl_form = rl;
        out.rl_form_at = s;
      }
      if (s >= kSettleFraction * problem.horizon * (1.0 - 1e-12)) out.rl_form_settled = std::max(out.rl_form_settled, rl);
      out.caputo_form = std::max(out.caputo_form, std::abs(H[j] + a_shift));
      const double gap = (-a_full) - (-a_shift) - R[0][j] * std::pow(s, -problem.beta) / g1;
      out.boundary_gap = std::max(out.boundary_gap, std::abs(gap));
    }
  }
  return out;
}

inline double fhjb_residual(const FhjbProblem& problem, const GridFunction& S, const FhjbOptions& options = {}) {
  return fhjb_residual_report(problem, S, options).rl_form;
}

}  // namespace ctrw
