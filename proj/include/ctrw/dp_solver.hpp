#pragma once

// Scaled dynamic-programming equation of the controlled walk on a (t, y)
// grid, in remaining time s:
//
//   S(s, y) = sup_u [ S0(y) P(gamma' > s)
//                     + int_(0,s] E S(s - r, y + xi') nu'(dr)
//                     + F'_u(y) P(gamma' <= s) + g_u(y) E min(gamma', s) ]
//
// with gamma' = gamma tau^(1/beta), xi' = xi tau^(1/alpha) and F'_u the mean
// jump reward. S(s - r, .) is piecewise linear in time between nodes, so
// the r-integral becomes exact hat-function weights of the waiting law; the
// jump expectation is a lattice kernel on the uniform y grid. The weight of
// the current slice is positive, so each slice is a small fixed-point
// problem, solved exactly by policy iteration.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ctrw/error.hpp"
#include "ctrw/grid.hpp"
#include "ctrw/laws.hpp"
#include "ctrw/model.hpp"

namespace ctrw {

struct DpOptions {
  /// Two-sided Gaussian tail mass dropped when truncating the jump kernel.
  double jump_tail_tolerance = 1e-8;
  int max_policy_iterations = 200;
};

struct DpResult {
  GridFunction value;
  Policy policy;
  int max_policy_iterations_used = 0;
};

namespace detail {

struct LatticeKernel {
  std::vector<int> offsets;
  std::vector<double> weights;
  /// Mass landing beyond the window, lumped at a real-valued lattice offset.
  std::vector<double> far_offsets;
  std::vector<double> far_weights;
};

inline void add_split_atom(LatticeKernel& k, double offset, double mass, int reach) {
  if (std::abs(offset) > reach) {
    k.far_offsets.push_back(offset);
    k.far_weights.push_back(mass);
    return;
  }
  const double lo = std::floor(offset);
  const double frac = offset - lo;
  k.offsets.push_back(static_cast<int>(lo));
  k.weights.push_back(mass * (1.0 - frac));
  if (frac > 0.0) {
    k.offsets.push_back(static_cast<int>(lo) + 1);
    k.weights.push_back(mass * frac);
  }
}

inline double gaussian_tail_quantile(double tail_mass) {
  // Two-sided: P(|Z| > z) = tail_mass, by bisection on erfc.
  double lo = 0.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > tail_mass) lo = mid; else hi = mid;
  }
  return hi;
}

inline LatticeKernel build_kernel(const JumpLaw& law, double jump_scale, double h, std::size_t ny,
                                  SpaceRule rule, double tail_tolerance) {
  LatticeKernel k;
  const int reach = static_cast<int>(ny) - 1;
  const double width = h * static_cast<double>(reach);
  switch (law.kind) {
    case JumpKind::discrete:
      for (std::size_t i = 0; i < law.atoms.size(); ++i) {
        if (law.probs[i] > 0.0) add_split_atom(k, law.atoms[i] * jump_scale / h, law.probs[i], reach);
      }
      break;
    case JumpKind::gaussian: {
      const double s = law.scale * jump_scale;
      const double m = law.mean_shift * jump_scale;
      if (s == 0.0) {
        add_split_atom(k, m / h, 1.0, reach);
        break;
      }
      if (s < h) {
        throw ResolutionError("jump standard deviation " + format_number(s) + " is below the space step " +
                              format_number(h) + "; refine the y grid");
      }
      const double z = gaussian_tail_quantile(tail_tolerance);
      if (z * s > width) {
        throw WindowError("space window of width " + format_number(width) +
                          " cannot hold the truncated jump law (half-width " + format_number(z * s) + ")");
      }
      const int kmin = static_cast<int>(std::floor((m - z * s) / h));
      const int kmax = static_cast<int>(std::ceil((m + z * s) / h));
      double total = 0.0;
      std::vector<double> raw;
      for (int o = kmin; o <= kmax; ++o) {
        const double d = (o * h - m) / s;
        raw.push_back(std::exp(-0.5 * d * d));
        total += raw.back();
      }
      for (int o = kmin; o <= kmax; ++o) {
        const double w = raw[static_cast<std::size_t>(o - kmin)] / total;
        if (std::abs(o) > reach) {
          k.far_offsets.push_back(o);
          k.far_weights.push_back(w);
        } else {
          k.offsets.push_back(o);
          k.weights.push_back(w);
        }
      }
      break;
    }
    case JumpKind::symmetric_pareto: {
      const double alpha = law.alpha;
      // P(|xi'| > n) = tau scale n^(-alpha) for n >= n0, else 1.
      const double tail_const = law.scale * std::pow(jump_scale, alpha);
      const double n0 = std::pow(tail_const, 1.0 / alpha);
      auto tail = [&](double n) { return n < n0 ? 1.0 : tail_const * std::pow(n, -alpha); };
      k.offsets.push_back(0);
      k.weights.push_back(1.0 - tail(0.5 * h));
      for (int o = 1; o <= reach; ++o) {
        const double half = 0.5 * (tail((o - 0.5) * h) - tail((o + 0.5) * h));
        k.offsets.push_back(o);
        k.weights.push_back(half);
        k.offsets.push_back(-o);
        k.weights.push_back(half);
      }
      const double m = (reach + 0.5) * h;
      const double far_half = 0.5 * tail(m);
      if (far_half > 0.0) {
        double mean_offset;
        if (alpha > 1.0) {
          mean_offset = alpha * std::max(m, n0) / (alpha - 1.0) / h;
        } else if (rule == SpaceRule::linear) {
          throw WindowError("linear extrapolation needs a finite jump mean (alpha > 1)");
        } else {
          mean_offset = reach + 1.0;  // any point past the edge reads the edge value
        }
        k.far_offsets.push_back(mean_offset);
        k.far_weights.push_back(far_half);
        k.far_offsets.push_back(-mean_offset);
        k.far_weights.push_back(far_half);
      }
      break;
    }
  }
  return k;
}

// Value of the space slice v at (possibly fractional, possibly outside) index p.
inline double extended_value(const double* v, std::size_t n, double p, SpaceRule rule) {
  const double last = static_cast<double>(n - 1);
  if (p >= 0.0 && p <= last) {
    auto i = static_cast<std::size_t>(std::floor(p));
    if (i >= n - 1) return v[n - 1];
    const double f = p - static_cast<double>(i);
    return f == 0.0 ? v[i] : v[i] + f * (v[i + 1] - v[i]);
  }
  if (rule == SpaceRule::constant || n < 2) return p < 0.0 ? v[0] : v[n - 1];
  if (p < 0.0) return v[0] + p * (v[1] - v[0]);
  return v[n - 1] + (p - last) * (v[n - 1] - v[n - 2]);
}

// Coefficients (column, weight) realizing extended_value at an integer or
// real index, appended to `out`.
inline void extended_stencil(std::size_t n, double p, SpaceRule rule,
                             std::vector<std::pair<std::size_t, double>>& out, double w) {
  const double last = static_cast<double>(n - 1);
  if (p >= 0.0 && p <= last) {
    auto i = static_cast<std::size_t>(std::floor(p));
    if (i >= n - 1) {
      out.emplace_back(n - 1, w);
      return;
    }
    const double f = p - static_cast<double>(i);
    out.emplace_back(i, w * (1.0 - f));
    if (f > 0.0) out.emplace_back(i + 1, w * f);
    return;
  }
  if (rule == SpaceRule::constant || n < 2) {
    out.emplace_back(p < 0.0 ? 0 : n - 1, w);
    return;
  }
  if (p < 0.0) {
    out.emplace_back(0, w * (1.0 - p));
    out.emplace_back(1, w * p);
    return;
  }
  const double d = p - last;
  out.emplace_back(n - 1, w * (1.0 + d));
  out.emplace_back(n - 2, -w * d);
}

inline void apply_kernel(const LatticeKernel& k, const double* v, std::size_t n, SpaceRule rule, double* out) {
  const auto last = static_cast<long>(n) - 1;
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    const auto jl = static_cast<long>(j);
    for (std::size_t e = 0; e < k.offsets.size(); ++e) {
      const long p = jl + k.offsets[e];
      const double val = (p >= 0 && p <= last) ? v[p] : extended_value(v, n, static_cast<double>(p), rule);
      acc += k.weights[e] * val;
    }
    for (std::size_t e = 0; e < k.far_offsets.size(); ++e) {
      acc += k.far_weights[e] * extended_value(v, n, static_cast<double>(j) + k.far_offsets[e], rule);
    }
    out[j] = acc;
  }
}

// Everything about the DP equation that does not depend on the unknown.
class DpOperator {
 public:
  DpOperator(const ModelSpec& model, const std::vector<double>& remaining, const std::vector<double>& y_nodes,
             SpaceRule rule, const DpOptions& options)
      : model_(model), s_(remaining), y_(y_nodes), rule_(rule) {
    model.validate();
    if (model.has_inner_motion()) {
      throw UnsupportedError("inner motion is not supported by the DP solver; use the Monte Carlo path engine");
    }
    const std::size_t n = s_.size();
    if (n < 2) throw ConfigError("DP time grid needs at least 2 nodes");
    if (std::abs(s_.front()) > 1e-12 || std::abs(s_.back() - model.horizon) > 1e-9 * model.horizon) {
      throw ConfigError("DP time grid must run from 0 to the model horizon " + format_number(model.horizon));
    }
    h_ = GridFunction(std::vector<double>{0.0}, y_).y_step();
    if (y_.size() < 3 || !(h_ > 0.0)) throw ConfigError("DP space grid must be uniform with at least 3 nodes");

    const auto& law = model.waiting;
    const double tau = model.tau;
    no_jump_.resize(n);
    waiting_mean_.resize(n);
    weights_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
      no_jump_[i] = law.scaled_tail(s_[i], tau);
      waiting_mean_[i] = law.scaled_integrated_tail(s_[i], tau);
      weights_[i].assign(i + 1, 0.0);
      for (std::size_t j = 0; j < i; ++j) {
        const double a = s_[i] - s_[j + 1];
        const double b = s_[i] - s_[j];
        const double cell = s_[j + 1] - s_[j];
        const double ita = law.scaled_integrated_tail(a, tau);
        const double itb = law.scaled_integrated_tail(b, tau);
        const double rise = itb - ita - (b - a) * law.scaled_tail(b, tau);
        const double fall = (b - a) * law.scaled_tail(a, tau) - (itb - ita);
        weights_[i][j] += std::max(rise, 0.0) / cell;
        weights_[i][j + 1] += std::max(fall, 0.0) / cell;
      }
    }
    if (no_jump_[1] > 1.0 - 1e-12) {
      throw ResolutionError("no-jump mass at the first time node is " + format_number(no_jump_[1]) +
                            "; the time grid is too coarse for tau = " + format_number(tau));
    }

    const double jump_scale = model.jump_scale();
    for (const auto& c : model.controls) {
      kernels_.push_back(build_kernel(c.jump, jump_scale, h_, y_.size(), rule_, options.jump_tail_tolerance));
      std::vector<double> reward(y_.size(), 0.0);
      if (c.jump_reward_coef) {
        const double moment = c.jump.alpha_moment();
        if (!std::isfinite(moment)) throw ConfigError("jump reward needs a finite alpha-th jump moment");
        const double per_jump = moment * std::pow(jump_scale, c.jump.alpha);
        for (std::size_t j = 0; j < y_.size(); ++j) reward[j] = c.jump_reward_coef(y_[j]) * per_jump;
      }
      jump_reward_.push_back(std::move(reward));
    }
  }

  std::size_t nt() const { return s_.size(); }
  std::size_t ny() const { return y_.size(); }
  std::size_t controls() const { return kernels_.size(); }
  double self_weight(std::size_t i) const { return weights_[i][i]; }
  double weight(std::size_t i, std::size_t j) const { return weights_[i][j]; }
  double no_jump(std::size_t i) const { return no_jump_[i]; }
  const LatticeKernel& kernel(std::size_t u) const { return kernels_[u]; }
  SpaceRule rule() const { return rule_; }

  /// Time argument of g at remaining-time node i.
  double reward_time(std::size_t i) const {
    return model_.direction == Direction::remaining_time ? s_[i] : model_.horizon - s_[i];
  }

  /// Control-dependent part of the RHS that does not involve S: jump and
  /// waiting rewards, plus the control-free no-jump term.
  void constant_part(std::size_t u, std::size_t i, double* out) const {
    const auto& c = model_.controls[u];
    const double t = reward_time(i);
    for (std::size_t j = 0; j < y_.size(); ++j) {
      out[j] = no_jump_[i] * model_.terminal(y_[j]) + jump_reward_[u][j] * (1.0 - no_jump_[i]) +
               c.waiting_rate(t, y_[j]) * waiting_mean_[i];
    }
  }

  /// sum_{j < i} w_ij S_j (self slice excluded); S indexed by remaining time.
  void history(const std::vector<double>& S, std::size_t i, double* out) const {
    const std::size_t n = y_.size();
    std::fill(out, out + n, 0.0);
    for (std::size_t j = 0; j < i; ++j) {
      const double w = weights_[i][j];
      if (w == 0.0) continue;
      const double* row = S.data() + j * n;
      for (std::size_t k = 0; k < n; ++k) out[k] += w * row[k];
    }
  }

  void apply(std::size_t u, const double* v, double* out) const {
    apply_kernel(kernels_[u], v, y_.size(), rule_, out);
  }

  /// Row-assembled matrix of the jump kernel for policy `pi` on one slice.
  Eigen::SparseMatrix<double> policy_matrix(const std::vector<int>& pi) const {
    const std::size_t n = y_.size();
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<std::pair<std::size_t, double>> st;
    for (std::size_t j = 0; j < n; ++j) {
      const auto& k = kernels_[static_cast<std::size_t>(pi[j])];
      st.clear();
      for (std::size_t e = 0; e < k.offsets.size(); ++e) {
        extended_stencil(n, static_cast<double>(j) + k.offsets[e], rule_, st, k.weights[e]);
      }
      for (std::size_t e = 0; e < k.far_offsets.size(); ++e) {
        extended_stencil(n, static_cast<double>(j) + k.far_offsets[e], rule_, st, k.far_weights[e]);
      }
      for (const auto& [col, w] : st) trips.emplace_back(static_cast<int>(j), static_cast<int>(col), w);
    }
    Eigen::SparseMatrix<double> m(static_cast<int>(n), static_cast<int>(n));
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
  }

 private:
  const ModelSpec& model_;
  std::vector<double> s_;
  std::vector<double> y_;
  SpaceRule rule_;
  double h_ = 0.0;
  std::vector<double> no_jump_;
  std::vector<double> waiting_mean_;
  std::vector<std::vector<double>> weights_;
  std::vector<LatticeKernel> kernels_;
  std::vector<std::vector<double>> jump_reward_;
};

inline std::vector<double> remaining_nodes(const GridFunction& grid, Direction direction, double horizon) {
  if (direction == Direction::remaining_time) return grid.t_nodes;
  std::vector<double> s;
  for (auto it = grid.t_nodes.rbegin(); it != grid.t_nodes.rend(); ++it) s.push_back(horizon - *it);
  if (!s.empty()) s.front() = 0.0;
  return s;
}

// Ties (within rounding) go to the smallest control index.
inline bool strictly_better(double candidate, double incumbent) {
  return candidate > incumbent + 1e-12 * (1.0 + std::abs(incumbent));
}

// Per-control one-step values q_u = c_u + K_u (history + self * x), control-major.
inline void one_step_values(const DpOperator& op, std::size_t i, const double* history_plus_self,
                            std::vector<double>& q) {
  const std::size_t n = op.ny();
  const std::size_t U = op.controls();
  q.assign(U * n, 0.0);
  std::vector<double> tmp(n);
  for (std::size_t u = 0; u < U; ++u) {
    op.constant_part(u, i, q.data() + u * n);
    op.apply(u, history_plus_self, tmp.data());
    for (std::size_t j = 0; j < n; ++j) q[u * n + j] += tmp[j];
  }
}

inline std::vector<int> argmax_controls(const std::vector<double>& q, std::size_t U, std::size_t n) {
  std::vector<int> pi(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    double best = q[j];
    for (std::size_t u = 1; u < U; ++u) {
      if (strictly_better(q[u * n + j], best)) {
        best = q[u * n + j];
        pi[j] = static_cast<int>(u);
      }
    }
  }
  return pi;
}

inline GridFunction to_output_grid(const std::vector<double>& S, const std::vector<double>& remaining,
                                   const std::vector<double>& y, const ModelSpec& model, SpaceRule rule) {
  const std::size_t n = y.size();
  const std::size_t nt = remaining.size();
  std::vector<double> t = remaining;
  if (model.direction == Direction::elapsed_time) {
    for (std::size_t i = 0; i < nt; ++i) t[i] = model.horizon - remaining[nt - 1 - i];
    t.front() = 0.0;
  }
  GridFunction g(t, y, rule);
  for (std::size_t i = 0; i < nt; ++i) {
    const std::size_t src = model.direction == Direction::remaining_time ? i : nt - 1 - i;
    std::copy(S.begin() + static_cast<std::ptrdiff_t>(src * n),
              S.begin() + static_cast<std::ptrdiff_t>((src + 1) * n), g.slice(i));
  }
  return g;
}

inline std::vector<double> to_remaining_values(const GridFunction& g, Direction direction) {
  if (direction == Direction::remaining_time) return g.values;
  const std::size_t n = g.ny();
  const std::size_t nt = g.nt();
  std::vector<double> S(g.values.size());
  for (std::size_t i = 0; i < nt; ++i) {
    std::copy(g.slice(nt - 1 - i), g.slice(nt - 1 - i) + n, S.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  return S;
}

}  // namespace detail

/// Solves the scaled DP equation on the nodes of `grid` (values ignored).
inline DpResult solve_dp_detailed(const ModelSpec& model, const GridFunction& grid, const DpOptions& options = {}) {
  const auto s = detail::remaining_nodes(grid, model.direction, model.horizon);
  detail::DpOperator op(model, s, grid.y_nodes, grid.space_rule, options);
  const std::size_t n = op.ny();
  const std::size_t nt = op.nt();
  const std::size_t U = op.controls();
  std::vector<double> S(nt * n, 0.0);
  std::vector<int> table(nt * n, 0);
  for (std::size_t j = 0; j < n; ++j) S[j] = model.terminal(grid.y_nodes[j]);

  int worst_iterations = 0;
  std::vector<double> hist(n), c(U * n), q, x(n), work(n);
  for (std::size_t i = 1; i < nt; ++i) {
    op.history(S, i, hist.data());
    const double self = op.self_weight(i);
    for (std::size_t u = 0; u < U; ++u) {
      op.constant_part(u, i, c.data() + u * n);
      op.apply(u, hist.data(), work.data());
      for (std::size_t j = 0; j < n; ++j) c[u * n + j] += work[j];
    }
    // Initial policy: greedy against the previous slice.
    const double* prev = S.data() + (i - 1) * n;
    for (std::size_t j = 0; j < n; ++j) work[j] = hist[j] + self * prev[j];
    detail::one_step_values(op, i, work.data(), q);
    std::vector<int> pi = detail::argmax_controls(q, U, n);

    int iterations = 0;
    while (true) {
      ++iterations;
      if (self == 0.0) {
        for (std::size_t j = 0; j < n; ++j) x[j] = c[static_cast<std::size_t>(pi[j]) * n + j];
      } else {
        Eigen::SparseMatrix<double> A = op.policy_matrix(pi);
        A *= -self;
        for (int j = 0; j < static_cast<int>(n); ++j) A.coeffRef(j, j) += 1.0;
        A.makeCompressed();
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success) throw ResolutionError("DP slice system is singular");
        Eigen::VectorXd rhs(static_cast<int>(n));
        for (std::size_t j = 0; j < n; ++j) rhs[static_cast<int>(j)] = c[static_cast<std::size_t>(pi[j]) * n + j];
        Eigen::VectorXd sol = lu.solve(rhs);
        for (std::size_t j = 0; j < n; ++j) x[j] = sol[static_cast<int>(j)];
      }
      // Improvement step against the evaluated slice.
      for (std::size_t j = 0; j < n; ++j) work[j] = hist[j] + self * x[j];
      detail::one_step_values(op, i, work.data(), q);
      bool changed = false;
      for (std::size_t j = 0; j < n; ++j) {
        const auto cur = static_cast<std::size_t>(pi[j]);
        std::size_t best = cur;
        for (std::size_t u = 0; u < U; ++u) {
          if (u != cur && detail::strictly_better(q[u * n + j], q[best * n + j])) best = u;
        }
        if (best != cur) {
          pi[j] = static_cast<int>(best);
          changed = true;
        }
      }
      if (!changed) break;
      if (iterations >= options.max_policy_iterations) {
        throw ResolutionError("policy iteration did not settle on slice " + std::to_string(i));
      }
    }
    worst_iterations = std::max(worst_iterations, iterations);
    std::copy(x.begin(), x.end(), S.begin() + static_cast<std::ptrdiff_t>(i * n));
    std::copy(pi.begin(), pi.end(), table.begin() + static_cast<std::ptrdiff_t>(i * n));
  }

  DpResult result;
  result.value = detail::to_output_grid(S, s, grid.y_nodes, model, grid.space_rule);
  result.policy.t_nodes = result.value.t_nodes;
  result.policy.y_nodes = grid.y_nodes;
  result.policy.direction = model.direction;
  result.policy.table.resize(nt * n);
  for (std::size_t i = 0; i < nt; ++i) {
    const std::size_t src = model.direction == Direction::remaining_time ? i : nt - 1 - i;
    std::copy(table.begin() + static_cast<std::ptrdiff_t>(src * n),
              table.begin() + static_cast<std::ptrdiff_t>((src + 1) * n),
              result.policy.table.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  result.max_policy_iterations_used = worst_iterations;
  auto& meta = result.value.metadata;
  meta["solver"] = "dp";
  meta["tau"] = format_number(model.tau);
  meta["beta"] = format_number(model.waiting.beta());
  meta["alpha"] = format_number(model.alpha());
  meta["horizon"] = format_number(model.horizon);
  meta["direction"] = to_string(model.direction);
  meta["controls"] = std::to_string(U);
  meta["policy_iterations_max"] = std::to_string(worst_iterations);
  return result;
}

inline GridFunction solve_dp(const ModelSpec& model, const GridFunction& grid, const DpOptions& options = {}) {
  return solve_dp_detailed(model, grid, options).value;
}

/// max over nodes of |S - RHS(S)| for the DP equation, all slices of S used.
inline double dp_residual(const ModelSpec& model, const GridFunction& S, const DpOptions& options = {}) {
  const auto s = detail::remaining_nodes(S, model.direction, model.horizon);
  detail::DpOperator op(model, s, S.y_nodes, S.space_rule, options);
  const auto values = detail::to_remaining_values(S, model.direction);
  const std::size_t n = op.ny();
  const std::size_t U = op.controls();
  double worst = 0.0;
  for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(values[j] - model.terminal(S.y_nodes[j])));
  std::vector<double> hist(n), q;
  for (std::size_t i = 1; i < op.nt(); ++i) {
    op.history(values, i, hist.data());
    const double self = op.self_weight(i);
    for (std::size_t j = 0; j < n; ++j) hist[j] += self * values[i * n + j];
    detail::one_step_values(op, i, hist.data(), q);
    for (std::size_t j = 0; j < n; ++j) {
      double best = q[j];
      for (std::size_t u = 1; u < U; ++u) best = std::max(best, q[u * n + j]);
      worst = std::max(worst, std::abs(values[i * n + j] - best));
    }
  }
  return worst;
}

/// Per node, the control maximizing the one-step DP right-hand side built
/// from `value`; ties go to the smallest index. Nodes with no jump mass
/// (remaining time 0) are ties and get index 0.
inline Policy greedy_policy_improvement(const ModelSpec& model, const GridFunction& value,
                                        const DpOptions& options = {}) {
  const auto s = detail::remaining_nodes(value, model.direction, model.horizon);
  detail::DpOperator op(model, s, value.y_nodes, value.space_rule, options);
  const auto values = detail::to_remaining_values(value, model.direction);
  const std::size_t n = op.ny();
  const std::size_t nt = op.nt();
  std::vector<int> table(nt * n, 0);
  std::vector<double> hist(n), q;
  for (std::size_t i = 1; i < nt; ++i) {
    op.history(values, i, hist.data());
    const double self = op.self_weight(i);
    for (std::size_t j = 0; j < n; ++j) hist[j] += self * values[i * n + j];
    detail::one_step_values(op, i, hist.data(), q);
    const auto pi = detail::argmax_controls(q, op.controls(), n);
    std::copy(pi.begin(), pi.end(), table.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  Policy p;
  p.t_nodes = value.t_nodes;
  p.y_nodes = value.y_nodes;
  p.direction = model.direction;
  p.table.resize(nt * n);
  for (std::size_t i = 0; i < nt; ++i) {
    const std::size_t src = model.direction == Direction::remaining_time ? i : nt - 1 - i;
    std::copy(table.begin() + static_cast<std::ptrdiff_t>(src * n),
              table.begin() + static_cast<std::ptrdiff_t>((src + 1) * n),
              p.table.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  return p;
}

}  // namespace ctrw
