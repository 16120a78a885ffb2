#pragma once

// Problem descriptions shared by the simulator and both solvers: the scaled
// controlled walk (ModelSpec), its tau -> 0 limit (FhjbProblem), and
// feedback policies on a (t, y) grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ctrw/error.hpp"
#include "ctrw/grid.hpp"
#include "ctrw/laws.hpp"

namespace ctrw {

using Fn1 = std::function<double(double)>;
/// Function of (t, y).
using Fn2 = std::function<double(double, double)>;

/// remaining_time: S(t, y) with t the time left, initial data S(0, .) = S0.
/// elapsed_time: S(t, y) on [0, T] with terminal data S(T, .) = S0.
enum class Direction { remaining_time, elapsed_time };

inline const char* to_string(Direction d) {
  return d == Direction::remaining_time ? "remaining-time" : "elapsed-time";
}

/// Drift-diffusion followed between renewals: dY = drift dt + diffusion dW.
struct InnerMotion {
  Fn1 drift;
  Fn1 diffusion;
};

struct Control {
  std::string label;
  JumpLaw jump;
  /// Jump reward f(u, y, xi) = coef(y) |xi|^alpha; empty means no reward.
  Fn1 jump_reward_coef;
  /// Waiting reward rate g(u, t, y); empty means none.
  Fn2 waiting_reward;
  std::optional<InnerMotion> inner;

  double jump_reward(double y, double xi) const {
    if (!jump_reward_coef) return 0.0;
    return jump_reward_coef(y) * std::pow(std::abs(xi), jump.alpha);
  }
  double waiting_rate(double t, double y) const { return waiting_reward ? waiting_reward(t, y) : 0.0; }
};

struct ModelSpec {
  WaitingLaw waiting = WaitingLaw::spliced_pareto(0.5);
  std::vector<Control> controls;
  Fn1 terminal;
  double tau = 0.1;
  double horizon = 1.0;
  Direction direction = Direction::remaining_time;

  void validate() const {
    if (controls.empty()) throw ConfigError("control set must be non-empty");
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    if (!terminal) throw ConfigError("terminal pay-off missing");
    for (const auto& c : controls) {
      c.jump.validate();
      if (c.jump.alpha != controls.front().jump.alpha) {
        throw ConfigError("all controls must share the jump index alpha");
      }
    }
  }

  double alpha() const { return controls.front().jump.alpha; }
  /// Spatial scale tau^(1/alpha) applied to every jump.
  double jump_scale() const { return std::pow(tau, 1.0 / alpha()); }
  bool has_inner_motion() const {
    return std::any_of(controls.begin(), controls.end(), [](const Control& c) { return c.inner.has_value(); });
  }
};

struct FhjbControl {
  std::string label;
  /// Tail constant of the stable generator; for alpha = 2 the jump variance.
  Fn1 scale;
  /// F(u, y): mean jump reward per unit operational time.
  Fn1 jump_reward_density;
  Fn2 waiting_reward;
  Fn1 drift;
  Fn1 diffusion;

  double scale_at(double y) const { return scale ? scale(y) : 0.0; }
  double jump_reward_at(double y) const { return jump_reward_density ? jump_reward_density(y) : 0.0; }
  double waiting_at(double t, double y) const { return waiting_reward ? waiting_reward(t, y) : 0.0; }
  double drift_at(double y) const { return drift ? drift(y) : 0.0; }
  double diffusion_at(double y) const { return diffusion ? diffusion(y) : 0.0; }
};

struct FhjbProblem {
  double beta = 0.5;
  double alpha = 2.0;
  std::vector<FhjbControl> controls;
  /// S0: initial data (remaining time) or terminal data (elapsed time).
  Fn1 initial;
  double horizon = 1.0;
  Direction direction = Direction::remaining_time;

  void validate() const {
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0,1)");
    if (alpha == 1.0) throw UnsupportedError("unsupported order alpha = 1: no generator form is provided for it");
    if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigError("alpha must lie in (0,1) u (1,2]");
    if (controls.empty()) throw ConfigError("control set must be non-empty");
    if (!initial) throw ConfigError("initial data missing");
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  }
};

/// The tau -> 0 limit of a model: generator scales and reward densities are
/// read off the jump laws (variance for alpha = 2, tail constant otherwise).
inline FhjbProblem limit_problem(const ModelSpec& model) {
  model.validate();
  if (model.waiting.kind() != WaitingKind::spliced_pareto) {
    throw ConfigError("the limit equation needs the heavy-tailed waiting law");
  }
  FhjbProblem p;
  p.beta = model.waiting.beta();
  p.alpha = model.alpha();
  p.initial = model.terminal;
  p.horizon = model.horizon;
  p.direction = model.direction;
  for (const auto& c : model.controls) {
    FhjbControl fc;
    fc.label = c.label;
    double scale = 0.0;
    switch (c.jump.kind) {
      case JumpKind::gaussian:
      case JumpKind::discrete:
        if (c.jump.alpha != 2.0) throw ConfigError("discrete jumps have a limit generator only for alpha = 2");
        if (std::abs(c.jump.mean()) > 1e-14) throw ConfigError("jumps with non-zero mean have no diffusive limit");
        scale = c.jump.alpha_moment();
        break;
      case JumpKind::symmetric_pareto:
        scale = c.jump.scale;
        break;
    }
    fc.scale = [scale](double) { return scale; };
    if (c.jump_reward_coef) {
      const double moment = c.jump.alpha_moment();
      if (!std::isfinite(moment)) throw ConfigError("jump reward needs a finite alpha-th jump moment");
      fc.jump_reward_density = [coef = c.jump_reward_coef, moment](double y) { return coef(y) * moment; };
    }
    fc.waiting_reward = c.waiting_reward;
    if (c.inner) {
      fc.drift = c.inner->drift;
      fc.diffusion = c.inner->diffusion;
    }
    p.controls.push_back(std::move(fc));
  }
  return p;
}

/// Index of the node nearest to x in an increasing list (ties to the lower node).
inline std::size_t nearest_index(const std::vector<double>& nodes, double x) {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), x);
  if (it == nodes.begin()) return 0;
  if (it == nodes.end()) return nodes.size() - 1;
  const auto hi = static_cast<std::size_t>(it - nodes.begin());
  return (x - nodes[hi - 1] <= nodes[hi] - x) ? hi - 1 : hi;
}

/// Feedback control table over grid nodes, read by nearest node.
struct Policy {
  std::vector<double> t_nodes;
  std::vector<double> y_nodes;
  std::vector<int> table;
  Direction direction = Direction::remaining_time;

  int at(std::size_t i, std::size_t j) const { return table[i * y_nodes.size() + j]; }
  int& at(std::size_t i, std::size_t j) { return table[i * y_nodes.size() + j]; }

  /// Control at grid time coordinate t and position y.
  int lookup(double t, double y) const { return at(nearest_index(t_nodes, t), nearest_index(y_nodes, y)); }

  void validate(std::size_t control_count) const {
    if (table.size() != t_nodes.size() * y_nodes.size() || table.empty()) {
      throw ConfigError("policy table does not match its grid");
    }
    for (int u : table) {
      if (u < 0 || static_cast<std::size_t>(u) >= control_count) throw ConfigError("policy index out of range");
    }
  }
};

inline Policy constant_policy(const std::vector<double>& t_nodes, const std::vector<double>& y_nodes,
                              int control, Direction direction = Direction::remaining_time) {
  Policy p;
  p.t_nodes = t_nodes;
  p.y_nodes = y_nodes;
  p.table.assign(t_nodes.size() * y_nodes.size(), control);
  p.direction = direction;
  return p;
}

}  // namespace ctrw
