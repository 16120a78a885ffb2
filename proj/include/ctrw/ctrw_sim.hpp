#pragma once

// Path engine for the scaled controlled walk and Monte Carlo policy
// evaluation. Path p draws from the counter stream (seed, p), and the
// estimator reduces in path order, so results do not depend on scheduling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ctrw/error.hpp"
#include "ctrw/grid.hpp"
#include "ctrw/laws.hpp"
#include "ctrw/model.hpp"
#include "ctrw/rng.hpp"

namespace ctrw {

struct PathEvent {
  /// Scaled wait gamma tau^(1/beta); the last event's wait is censored at the horizon.
  double wait = 0.0;
  int control = 0;
  /// Scaled jump xi tau^(1/alpha); zero for the censored last event.
  double jump = 0.0;
  double inner_displacement = 0.0;
  bool jumped = false;
  /// Position after the event.
  double position = 0.0;
  /// Jump plus waiting rewards accumulated through this event.
  double reward_accum = 0.0;
};

struct PathRecord {
  std::vector<PathEvent> events;
  double terminal_position = 0.0;
  double jump_reward = 0.0;
  double waiting_reward = 0.0;
  /// The position left the policy window at some point.
  bool truncated = false;

  std::size_t jump_count() const {
    std::size_t n = 0;
    for (const auto& e : events) n += e.jumped ? 1 : 0;
    return n;
  }
};

/// One path over [0, horizon]; controls are read from `policy` at the
/// start of every wait.
inline PathRecord simulate_path(const ModelSpec& model, const Policy& policy, double y0, Rng& rng,
                                double horizon) {
  model.validate();
  policy.validate(model.controls.size());
  if (!(horizon > 0.0)) throw ConfigError("simulation horizon must be positive");
  const double time_scale = model.waiting.time_scale(model.tau);
  const double jump_scale = model.jump_scale();
  const double y_lo = policy.y_nodes.front();
  const double y_hi = policy.y_nodes.back();

  PathRecord rec;
  double elapsed = 0.0;
  double y = y0;
  double rewards = 0.0;
  if (y < y_lo || y > y_hi) rec.truncated = true;
  while (elapsed < horizon) {
    const double remaining = horizon - elapsed;
    const double key = policy.direction == Direction::remaining_time ? remaining : model.horizon - remaining;
    const int u = policy.lookup(key, y);
    const auto& c = model.controls[static_cast<std::size_t>(u)];
    const double rate = c.waiting_rate(key, y);

    PathEvent ev;
    ev.control = u;
    const double wait = model.waiting.sample(rng) * time_scale;
    ev.jumped = wait <= remaining;
    ev.wait = ev.jumped ? wait : remaining;
    rewards += rate * ev.wait;

    if (c.inner) {
      const double start = y;
      double left = ev.wait;
      while (left > 0.0) {
        const double dt = std::min(time_scale, left);
        const double sigma = c.inner->diffusion ? c.inner->diffusion(y) : 0.0;
        const double drift = c.inner->drift ? c.inner->drift(y) : 0.0;
        y += drift * dt + sigma * std::sqrt(dt) * rng.normal();
        left -= dt;
      }
      ev.inner_displacement = y - start;
    }
    if (ev.jumped) {
      const double xi = c.jump.sample(rng) * jump_scale;
      const double r = c.jump_reward(y, xi);
      rec.jump_reward += r;
      rewards += r;
      y += xi;
      ev.jump = xi;
      elapsed += wait;
    } else {
      elapsed = horizon;
    }
    rec.waiting_reward += rate * ev.wait;
    if (y < y_lo || y > y_hi) rec.truncated = true;
    ev.position = y;
    ev.reward_accum = rewards;
    rec.events.push_back(ev);
  }
  rec.terminal_position = y;
  return rec;
}

inline PathRecord simulate_path(const ModelSpec& model, const Policy& policy, double y0, Rng& rng) {
  return simulate_path(model, policy, y0, rng, model.horizon);
}

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t paths = 0;
  std::size_t truncated_paths = 0;
  double mean_events = 0.0;
};

inline double path_payoff(const ModelSpec& model, const PathRecord& rec) {
  return model.terminal(rec.terminal_position) + rec.jump_reward + rec.waiting_reward;
}

/// Mean and standard error of S0(Y_t) + rewards under a fixed policy.
/// Path p uses the stream (seed, first_stream + p).
inline McEstimate evaluate_policy_mc(const ModelSpec& model, const Policy& policy, double t, double y0,
                                     std::size_t n_paths, std::uint64_t seed, std::uint64_t first_stream = 0,
                                     std::vector<PathRecord>* keep = nullptr, std::size_t keep_count = 0) {
  if (n_paths < 2) throw ConfigError("Monte Carlo needs at least 2 paths, got " + std::to_string(n_paths));
  McEstimate est;
  est.paths = n_paths;
  double sum = 0.0;
  double sum_sq = 0.0;
  double events = 0.0;
  // Sums are shifted by the first payoff to keep the variance accurate.
  double shift = 0.0;
  for (std::size_t p = 0; p < n_paths; ++p) {
    Rng rng(seed, first_stream + p);
    PathRecord rec = simulate_path(model, policy, y0, rng, t);
    const double v = path_payoff(model, rec);
    if (p == 0) shift = v;
    sum += v - shift;
    sum_sq += (v - shift) * (v - shift);
    events += static_cast<double>(rec.events.size());
    if (rec.truncated) ++est.truncated_paths;
    if (keep && p < keep_count) keep->push_back(std::move(rec));
  }
  const double n = static_cast<double>(n_paths);
  const double mean_shifted = sum / n;
  est.mean = shift + mean_shifted;
  const double var = std::max(0.0, (sum_sq - n * mean_shifted * mean_shifted) / (n - 1.0));
  est.std_error = std::sqrt(var / n);
  est.mean_events = events / n;
  return est;
}

/// CSV of path events: path_id,event_id,wait,control,jump,position,reward_accum.
inline std::string path_csv(const std::vector<PathRecord>& paths) {
  std::string out = "path_id,event_id,wait,control,jump,position,reward_accum\n";
  for (std::size_t p = 0; p < paths.size(); ++p) {
    for (std::size_t e = 0; e < paths[p].events.size(); ++e) {
      const auto& ev = paths[p].events[e];
      out += std::to_string(p) + ',' + std::to_string(e) + ',' + format_number(ev.wait) + ',' +
             std::to_string(ev.control) + ',' + format_number(ev.jump) + ',' + format_number(ev.position) + ',' +
             format_number(ev.reward_accum) + '\n';
    }
  }
  return out;
}

}  // namespace ctrw
