#pragma once

// tau-sweep comparing the scaled DP value S^tau with the limit solution on
// the nodes shared by both grids. Early times (source singularity) and an
// outer band of the space window (boundary truncation) are excluded.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "ctrw/ctrw_sim.hpp"
#include "ctrw/dp_solver.hpp"
#include "ctrw/error.hpp"
#include "ctrw/fhjb_solver.hpp"
#include "ctrw/grid.hpp"
#include "ctrw/model.hpp"

namespace ctrw {

enum class SweepMode { dp, monte_carlo };

struct SweepOptions {
  SweepMode mode = SweepMode::dp;
  /// Nodes with t < exclude_steps * h_t (limit grid step) are skipped.
  double exclude_steps = 2.0;
  /// Fraction of the common space window dropped at each end.
  double y_margin = 0.1;
  /// Optional explicit comparison window, intersected with the trimmed one.
  double window_y_min = -INFINITY;
  double window_y_max = INFINITY;
  std::size_t mc_paths = 2000;
  std::uint64_t seed = 1;
  /// Wall-clock timing makes the report non-reproducible, so it is opt-in.
  bool record_runtime = false;
};

struct SweepReport {
  std::vector<double> tau_values;
  std::vector<double> sup_err;
  std::vector<double> l2_err;
  std::vector<double> mc_stderr;
  std::vector<double> runtime_s;
  double fitted_decay_slope = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, std::string> metadata;
};

/// Least-squares slope of log(error) against log(tau); NaN when fewer than
/// two errors are positive.
inline double fit_log_slope(const std::vector<double>& taus, const std::vector<double>& errors) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(errors[i] > 0.0)) continue;
    const double x = std::log(taus[i]);
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double denom = n * sxx - sx * sx;
  return denom == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (n * sxy - sx * sy) / denom;
}

/// Leading-order tau-bias of E[Y_t^2] = tau sigma^2 E[renewals in (0, t]]
/// against sigma^2 t^beta / Gamma(1+beta), for the spliced waiting law.
/// From the Laplace transform of the renewal function,
///   tau U(t) = t^beta / Gamma(1+beta) - D0 tau^((1-beta)/beta) t^(2 beta - 1) / Gamma(2 beta) - tau + ...,
/// D0 = integral_0^inf (P(gamma > r) - r^(-beta) / Gamma(1-beta)) dr (negative).
inline double subordination_bias(const WaitingLaw& law, double tau, double t, double variance) {
  if (law.kind() != WaitingKind::spliced_pareto) throw ConfigError("bias model needs the spliced waiting law");
  const double beta = law.beta();
  const double t0 = law.cutoff();
  const double d0 = law.integrated_tail(t0) - std::pow(t0, 1.0 - beta) / ((1.0 - beta) * std::tgamma(1.0 - beta));
  const double lead = -d0 * std::pow(tau, (1.0 - beta) / beta) * std::pow(t, 2.0 * beta - 1.0) / std::tgamma(2.0 * beta);
  return variance * (lead - tau);
}

/// Declared Monte Carlo bias budget: twice the leading-order bias.
inline double mc_bias_budget(const WaitingLaw& law, double tau, double t, double variance) {
  return 2.0 * std::abs(subordination_bias(law, tau, t, variance));
}

namespace detail {

struct NodePair {
  std::size_t ia, ja, ib, jb;
};

inline bool same_node(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

inline std::vector<NodePair> common_nodes(const GridFunction& a, const GridFunction& b, double t_min, double y_lo,
                                          double y_hi) {
  std::vector<NodePair> out;
  for (std::size_t ia = 0; ia < a.nt(); ++ia) {
    if (a.t_nodes[ia] < t_min - 1e-12) continue;
    const std::size_t ib = nearest_index(b.t_nodes, a.t_nodes[ia]);
    if (!same_node(a.t_nodes[ia], b.t_nodes[ib])) continue;
    for (std::size_t ja = 0; ja < a.ny(); ++ja) {
      const double y = a.y_nodes[ja];
      if (y < y_lo - 1e-12 || y > y_hi + 1e-12) continue;
      const std::size_t jb = nearest_index(b.y_nodes, y);
      if (!same_node(y, b.y_nodes[jb])) continue;
      out.push_back({ia, ja, ib, jb});
    }
  }
  return out;
}

// Bilinear interpolation of g at (t, y), clamped to the grid.
inline double interpolate_grid(const GridFunction& g, double t, double y) {
  auto locate = [](const std::vector<double>& v, double x, std::size_t& i, double& f) {
    if (x <= v.front()) { i = 0; f = 0.0; return; }
    if (x >= v.back()) { i = v.size() - 2; f = 1.0; return; }
    const auto it = std::upper_bound(v.begin(), v.end(), x);
    i = static_cast<std::size_t>(it - v.begin()) - 1;
    f = (x - v[i]) / (v[i + 1] - v[i]);
  };
  std::size_t i, j;
  double ft, fy;
  locate(g.t_nodes, t, i, ft);
  locate(g.y_nodes, y, j, fy);
  const double a = g.at(i, j) * (1 - fy) + g.at(i, j + 1) * fy;
  const double b = g.at(i + 1, j) * (1 - fy) + g.at(i + 1, j + 1) * fy;
  return a * (1 - ft) + b * ft;
}

}  // namespace detail

/// Runs the sweep. `dp_grid` provides the DP nodes (and the Monte Carlo
/// policy grid), `limit_grid` the limit-solver nodes.
inline SweepReport run_sweep(const ModelSpec& model, const FhjbProblem& problem, const std::vector<double>& taus,
                             const GridFunction& dp_grid, const GridFunction& limit_grid,
                             const SweepOptions& options = {}) {
  model.validate();
  problem.validate();
  if (taus.size() < 3) throw ConfigError("a sweep needs at least 3 tau values");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] > 0.0 && taus[i] <= 1.0)) throw ConfigError("tau values must lie in (0,1]");
    if (i > 0 && !(taus[i] < taus[i - 1])) throw ConfigError("tau values must be strictly decreasing");
  }
  if (std::abs(model.waiting.beta() - problem.beta) > 1e-14 || std::abs(model.alpha() - problem.alpha) > 1e-14 ||
      model.controls.size() != problem.controls.size()) {
    throw ConfigError("model and limit problem disagree on (beta, alpha, control set)");
  }
  if (std::abs(model.horizon - problem.horizon) > 1e-12 || model.direction != problem.direction) {
    throw ConfigError("model and limit problem disagree on horizon or direction");
  }

  const GridFunction limit = solve_fhjb(problem, limit_grid);
  const double ht = limit.t_nodes[1] - limit.t_nodes[0];
  const double t_min = options.exclude_steps * ht;
  const double lo = std::max(dp_grid.y_nodes.front(), limit.y_nodes.front());
  const double hi = std::min(dp_grid.y_nodes.back(), limit.y_nodes.back());
  const double margin = options.y_margin * (hi - lo);
  const double y_lo = std::max(lo + margin, options.window_y_min);
  const double y_hi = std::min(hi - margin, options.window_y_max);
  if (!(y_hi >= y_lo)) throw ConfigError("comparison window is empty");

  SweepReport report;
  report.metadata["mode"] = options.mode == SweepMode::dp ? "dp" : "monte-carlo";
  report.metadata["excluded_t_below"] = format_number(t_min);
  report.metadata["window_y_min"] = format_number(y_lo);
  report.metadata["window_y_max"] = format_number(y_hi);
  report.metadata["y_margin_fraction"] = format_number(options.y_margin);
  report.metadata["beta"] = format_number(problem.beta);
  report.metadata["alpha"] = format_number(problem.alpha);
  report.metadata["controls"] = std::to_string(problem.controls.size());

  for (double tau : taus) {
    const auto start = std::chrono::steady_clock::now();
    ModelSpec m = model;
    m.tau = tau;
    double sup = 0.0, sq = 0.0, stderr_max = std::numeric_limits<double>::quiet_NaN();
    std::size_t count = 0;
    if (options.mode == SweepMode::dp) {
      const GridFunction S = solve_dp(m, dp_grid);
      const auto nodes = detail::common_nodes(S, limit, t_min, y_lo, y_hi);
      if (nodes.empty()) throw ConfigError("DP and limit grids share no nodes inside the comparison window");
      for (const auto& p : nodes) {
        const double e = std::abs(S.at(p.ia, p.ja) - limit.at(p.ib, p.jb));
        sup = std::max(sup, e);
        sq += e * e;
        ++count;
      }
    } else {
      // Policy: greedy against the limit solution resampled on the DP grid.
      GridFunction guess(dp_grid.t_nodes, dp_grid.y_nodes, dp_grid.space_rule);
      for (std::size_t i = 0; i < guess.nt(); ++i) {
        for (std::size_t j = 0; j < guess.ny(); ++j) {
          guess.at(i, j) = detail::interpolate_grid(limit, guess.t_nodes[i], guess.y_nodes[j]);
        }
      }
      const Policy policy = greedy_policy_improvement(m, guess);
      const std::size_t top = limit.nt() - 1;
      stderr_max = 0.0;
      std::uint64_t stream = 0;
      for (std::size_t j = 0; j < limit.ny(); ++j) {
        const double y = limit.y_nodes[j];
        if (y < y_lo - 1e-12 || y > y_hi + 1e-12) continue;
        const auto est = evaluate_policy_mc(m, policy, model.horizon, y, options.mc_paths, options.seed, stream);
        stream += options.mc_paths;
        const double target = problem.direction == Direction::remaining_time ? limit.at(top, j) : limit.at(0, j);
        const double e = std::abs(est.mean - target);
        sup = std::max(sup, e);
        sq += e * e;
        stderr_max = std::max(stderr_max, est.std_error);
        ++count;
      }
      if (count == 0) throw ConfigError("no limit-grid node inside the comparison window");
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.tau_values.push_back(tau);
    report.sup_err.push_back(sup);
    report.l2_err.push_back(std::sqrt(sq / static_cast<double>(count)));
    report.mc_stderr.push_back(stderr_max);
    report.runtime_s.push_back(options.record_runtime ? elapsed : std::numeric_limits<double>::quiet_NaN());
  }
  report.fitted_decay_slope = fit_log_slope(report.tau_values, report.sup_err);
  return report;
}

inline std::string number_or_na(double v) { return std::isfinite(v) ? format_number(v) : "NA"; }

inline std::string report_csv(const SweepReport& report) {
  std::string out = "tau,sup_err,l2_err,mc_stderr,runtime_s\n";
  for (std::size_t i = 0; i < report.tau_values.size(); ++i) {
    out += format_number(report.tau_values[i]) + ',' + format_number(report.sup_err[i]) + ',' +
           format_number(report.l2_err[i]) + ',' + number_or_na(report.mc_stderr[i]) + ',' +
           number_or_na(report.runtime_s[i]) + '\n';
  }
  return out;
}

/// Writes the report CSV at `path` and its sidecar at `path`.meta.
inline void emit_report(const SweepReport& report, const std::string& path) {
  if (report.tau_values.empty()) throw ConfigError("sweep report has no tau values");
  const std::string csv = report_csv(report);
  auto meta = report.metadata;
  meta["fitted_decay_slope"] = number_or_na(report.fitted_decay_slope);
  meta["rows"] = std::to_string(report.tau_values.size());
  write_text_file(path, csv);
  write_text_file(path + ".meta", sidecar_text(meta, csv));
}

}  // namespace ctrw
