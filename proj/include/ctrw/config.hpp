#pragma once

// Experiment configuration: one JSON document with sections model, problem
// (optional; derived from model when absent), grid, sweep, simulate, rng
// and output. Unknown keys anywhere are rejected, and every value is
// checked against the invariants of the type it feeds.
//
// Scalar functions of y are written as a number (constant), {"poly": [c0,
// c1, ...]} (c0 + c1 y + ...) or {"table": {"x": [...], "y": [...]}}
// (piecewise linear, constant beyond the first and last abscissa).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctrw/convergence.hpp"
#include "ctrw/error.hpp"
#include "ctrw/grid.hpp"
#include "ctrw/laws.hpp"
#include "ctrw/model.hpp"

namespace ctrw {

struct DpGridConfig {
  std::size_t t_nodes = 101;
  double t_grading = 1.0;
  double t_snap = 0.0;
  double y_min = -4.0;
  double y_max = 4.0;
  std::size_t y_nodes = 161;
  SpaceRule space_rule = SpaceRule::constant;
};

struct FhjbGridConfig {
  double t_step = 1e-3;
  double y_min = -6.0;
  double y_max = 6.0;
  std::size_t y_nodes = 25;
  SpaceRule space_rule = SpaceRule::constant;
};

enum class SimulatePolicy { constant, dp };

struct SimulateConfig {
  std::size_t paths = 1000;
  double y0 = 0.0;
  /// Evaluation time; defaults to the model horizon.
  std::optional<double> time;
  SimulatePolicy policy = SimulatePolicy::constant;
  int control = 0;
  std::size_t dump_paths = 10;
};

struct ExperimentConfig {
  bool has_model = false;
  ModelSpec model;
  FhjbProblem problem;
  bool problem_from_model = true;
  /// Why no limit problem could be derived from the model, rethrown on use.
  std::exception_ptr problem_error;
  DpGridConfig dp_grid;
  FhjbGridConfig fhjb_grid;
  std::vector<double> taus = {0.1, 0.05, 0.02, 0.01};
  SweepOptions sweep;
  SimulateConfig simulate;
  std::uint64_t seed = 1;
  std::string output_directory;

  GridFunction dp_template() const {
    const auto t = graded_nodes(model.horizon, dp_grid.t_nodes - 1, dp_grid.t_grading, dp_grid.t_snap);
    return GridFunction(t, uniform_nodes(dp_grid.y_min, dp_grid.y_max, dp_grid.y_nodes), dp_grid.space_rule);
  }

  /// The limit problem; throws the stored reason when there is none.
  const FhjbProblem& limit() const {
    if (problem_error) std::rethrow_exception(problem_error);
    return problem;
  }

  GridFunction fhjb_template() const {
    const double cells = problem.horizon / fhjb_grid.t_step;
    const auto n = static_cast<std::size_t>(std::llround(cells));
    if (n < 1 || std::abs(cells - static_cast<double>(n)) > 1e-6 * cells) {
      throw ConfigError("grid.fhjb.t_step must divide the horizon");
    }
    return GridFunction(uniform_nodes(0.0, problem.horizon, n + 1),
                        uniform_nodes(fhjb_grid.y_min, fhjb_grid.y_max, fhjb_grid.y_nodes), fhjb_grid.space_rule);
  }
};

namespace detail {

using nlohmann::json;

inline void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + " must be finite");
  return v;
}

inline double number_or(const json& j, const char* key, const std::string& where, double fallback) {
  return j.contains(key) ? number(j.at(key), where + "." + key) : fallback;
}

inline std::size_t count(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw ConfigError(where + " must be a non-negative integer");
  return static_cast<std::size_t>(j.get<long long>());
}

inline std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return v;
}

inline std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + " must be a string");
  return j.get<std::string>();
}

inline Fn1 scalar_function(const json& j, const std::string& where) {
  if (j.is_number()) {
    const double c = number(j, where);
    return [c](double) { return c; };
  }
  if (!j.is_object()) throw ConfigError(where + " must be a number, {\"poly\": ...} or {\"table\": ...}");
  allow_keys(j, where, {"poly", "table"});
  if (j.size() != 1) throw ConfigError(where + " needs exactly one of poly or table");
  if (j.contains("poly")) {
    const auto c = numbers(j.at("poly"), where + ".poly");
    if (c.empty()) throw ConfigError(where + ".poly must be non-empty");
    return [c](double y) {
      double v = 0.0;
      for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * y + *it;
      return v;
    };
  }
  const auto& t = j.at("table");
  allow_keys(t, where + ".table", {"x", "y"});
  if (!t.contains("x") || !t.contains("y")) throw ConfigError(where + ".table needs x and y");
  const auto x = numbers(t.at("x"), where + ".table.x");
  const auto v = numbers(t.at("y"), where + ".table.y");
  if (x.empty() || x.size() != v.size()) throw ConfigError(where + ".table needs matching non-empty x and y");
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw ConfigError(where + ".table.x must be strictly increasing");
  }
  return [x, v](double y) {
    if (y <= x.front()) return v.front();
    if (y >= x.back()) return v.back();
    const auto k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), y) - x.begin()) - 1;
    const double f = (y - x[k]) / (x[k + 1] - x[k]);
    return v[k] + f * (v[k + 1] - v[k]);
  };
}

// Waiting rewards in the config depend on position only.
inline Fn2 rate_function(const json& j, const std::string& where) {
  Fn1 f = scalar_function(j, where);
  return [f](double, double y) { return f(y); };
}

inline Direction direction(const json& j, const std::string& where) {
  const auto s = text(j, where);
  if (s == "remaining-time") return Direction::remaining_time;
  if (s == "elapsed-time") return Direction::elapsed_time;
  throw ConfigError(where + " must be remaining-time or elapsed-time");
}

inline SpaceRule space_rule(const json& j, const std::string& where) {
  const auto s = text(j, where);
  if (s == "constant") return SpaceRule::constant;
  if (s == "linear") return SpaceRule::linear;
  throw ConfigError(where + " must be constant or linear");
}

inline WaitingLaw waiting_law(const json& j, double beta, const std::string& where) {
  allow_keys(j, where, {"kind", "value", "atoms", "probs"});
  const auto kind = j.contains("kind") ? text(j.at("kind"), where + ".kind") : std::string("spliced-pareto");
  if (kind == "spliced-pareto") {
    if (j.size() > (j.contains("kind") ? 1u : 0u)) throw ConfigError(where + ": spliced-pareto takes no parameters");
    return WaitingLaw::spliced_pareto(beta);
  }
  if (kind == "deterministic") {
    if (!j.contains("value")) throw ConfigError(where + ".value is required for deterministic waits");
    return WaitingLaw::deterministic(beta, number(j.at("value"), where + ".value"));
  }
  if (kind == "discrete") {
    if (!j.contains("atoms") || !j.contains("probs")) throw ConfigError(where + " needs atoms and probs");
    return WaitingLaw::discrete(beta, numbers(j.at("atoms"), where + ".atoms"), numbers(j.at("probs"), where + ".probs"));
  }
  throw ConfigError(where + ".kind must be spliced-pareto, deterministic or discrete");
}

inline JumpLaw jump_law(const json& j, const std::string& where) {
  allow_keys(j, where, {"kind", "alpha", "scale", "mean_shift", "atoms", "probs"});
  const auto kind = text(j.at("kind"), where + ".kind");
  JumpLaw law;
  if (kind == "gaussian") {
    law.kind = JumpKind::gaussian;
    law.alpha = number_or(j, "alpha", where, 2.0);
    law.scale = number_or(j, "scale", where, 1.0);
    law.mean_shift = number_or(j, "mean_shift", where, 0.0);
    if (j.contains("atoms") || j.contains("probs")) throw ConfigError(where + ": gaussian jumps take no atoms");
  } else if (kind == "symmetric-pareto") {
    law.kind = JumpKind::symmetric_pareto;
    if (!j.contains("alpha")) throw ConfigError(where + ".alpha is required for pareto jumps");
    law.alpha = number(j.at("alpha"), where + ".alpha");
    law.scale = number_or(j, "scale", where, 1.0);
    law.mean_shift = number_or(j, "mean_shift", where, 0.0);
    if (j.contains("atoms") || j.contains("probs")) throw ConfigError(where + ": pareto jumps take no atoms");
  } else if (kind == "discrete") {
    law.kind = JumpKind::discrete;
    law.alpha = number_or(j, "alpha", where, 2.0);
    law.scale = 0.0;
    law.mean_shift = number_or(j, "mean_shift", where, 0.0);
    if (j.contains("scale")) throw ConfigError(where + ": discrete jumps take no scale");
    if (!j.contains("atoms") || !j.contains("probs")) throw ConfigError(where + " needs atoms and probs");
    law.atoms = numbers(j.at("atoms"), where + ".atoms");
    law.probs = numbers(j.at("probs"), where + ".probs");
  } else {
    throw ConfigError(where + ".kind must be gaussian, symmetric-pareto or discrete");
  }
  law.validate();
  return law;
}

inline ModelSpec model_spec(const json& j) {
  const std::string where = "model";
  allow_keys(j, where, {"beta", "waiting", "controls", "terminal", "tau", "horizon", "direction"});
  for (const char* key : {"beta", "controls", "terminal"}) {
    if (!j.contains(key)) throw ConfigError(where + "." + key + " is required");
  }
  ModelSpec m;
  const double beta = number(j.at("beta"), where + ".beta");
  m.waiting = waiting_law(j.contains("waiting") ? j.at("waiting") : json::object(), beta, where + ".waiting");
  const auto& cs = j.at("controls");
  if (!cs.is_array() || cs.empty()) throw ConfigError(where + ".controls must be a non-empty array");
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const std::string w = where + ".controls[" + std::to_string(i) + "]";
    allow_keys(cs[i], w, {"label", "jump", "jump_reward_coef", "waiting_reward", "inner_motion"});
    if (!cs[i].contains("jump")) throw ConfigError(w + ".jump is required");
    Control c;
    c.label = cs[i].contains("label") ? text(cs[i].at("label"), w + ".label") : "u" + std::to_string(i);
    c.jump = jump_law(cs[i].at("jump"), w + ".jump");
    if (cs[i].contains("jump_reward_coef")) c.jump_reward_coef = scalar_function(cs[i].at("jump_reward_coef"), w + ".jump_reward_coef");
    if (cs[i].contains("waiting_reward")) c.waiting_reward = rate_function(cs[i].at("waiting_reward"), w + ".waiting_reward");
    if (cs[i].contains("inner_motion")) {
      const auto& im = cs[i].at("inner_motion");
      allow_keys(im, w + ".inner_motion", {"drift", "diffusion"});
      InnerMotion inner;
      inner.drift = scalar_function(im.contains("drift") ? im.at("drift") : json(0.0), w + ".inner_motion.drift");
      inner.diffusion = scalar_function(im.contains("diffusion") ? im.at("diffusion") : json(0.0), w + ".inner_motion.diffusion");
      c.inner = inner;
    }
    m.controls.push_back(std::move(c));
  }
  m.terminal = scalar_function(j.at("terminal"), where + ".terminal");
  m.tau = number_or(j, "tau", where, 0.1);
  m.horizon = number_or(j, "horizon", where, 1.0);
  if (j.contains("direction")) m.direction = direction(j.at("direction"), where + ".direction");
  m.validate();
  return m;
}

inline FhjbProblem fhjb_problem(const json& j) {
  const std::string where = "problem";
  allow_keys(j, where, {"beta", "alpha", "controls", "initial", "horizon", "direction"});
  for (const char* key : {"beta", "alpha", "controls", "initial"}) {
    if (!j.contains(key)) throw ConfigError(where + "." + key + " is required");
  }
  FhjbProblem p;
  p.beta = number(j.at("beta"), where + ".beta");
  p.alpha = number(j.at("alpha"), where + ".alpha");
  const auto& cs = j.at("controls");
  if (!cs.is_array() || cs.empty()) throw ConfigError(where + ".controls must be a non-empty array");
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const std::string w = where + ".controls[" + std::to_string(i) + "]";
    allow_keys(cs[i], w, {"label", "scale", "jump_reward_density", "waiting_reward", "drift", "diffusion"});
    FhjbControl c;
    c.label = cs[i].contains("label") ? text(cs[i].at("label"), w + ".label") : "u" + std::to_string(i);
    c.scale = scalar_function(cs[i].contains("scale") ? cs[i].at("scale") : json(1.0), w + ".scale");
    if (cs[i].contains("jump_reward_density")) c.jump_reward_density = scalar_function(cs[i].at("jump_reward_density"), w + ".jump_reward_density");
    if (cs[i].contains("waiting_reward")) c.waiting_reward = rate_function(cs[i].at("waiting_reward"), w + ".waiting_reward");
    if (cs[i].contains("drift")) c.drift = scalar_function(cs[i].at("drift"), w + ".drift");
    if (cs[i].contains("diffusion")) c.diffusion = scalar_function(cs[i].at("diffusion"), w + ".diffusion");
    p.controls.push_back(std::move(c));
  }
  p.initial = scalar_function(j.at("initial"), where + ".initial");
  p.horizon = number_or(j, "horizon", where, 1.0);
  if (j.contains("direction")) p.direction = direction(j.at("direction"), where + ".direction");
  p.validate();
  return p;
}

}  // namespace detail

/// Parses and validates a configuration document.
inline ExperimentConfig parse_config(const std::string& document) {
  using detail::json;
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  detail::allow_keys(root, "config", {"model", "problem", "grid", "sweep", "simulate", "rng", "output"});
  ExperimentConfig cfg;
  const bool has_model = root.contains("model");
  cfg.has_model = has_model;
  if (has_model) cfg.model = detail::model_spec(root.at("model"));
  if (root.contains("problem")) {
    cfg.problem = detail::fhjb_problem(root.at("problem"));
    cfg.problem_from_model = false;
  } else if (has_model && cfg.model.waiting.kind() == WaitingKind::spliced_pareto) {
    // Models without a limit (stub waiting laws, alpha = 1) leave the problem unset.
    try {
      cfg.problem = limit_problem(cfg.model);
      cfg.problem.validate();
    } catch (const ValidationError&) {
      cfg.problem = FhjbProblem{};
      cfg.problem_from_model = false;
      cfg.problem_error = std::current_exception();
    }
  } else {
    cfg.problem_from_model = false;
    cfg.problem_error = std::make_exception_ptr(
        ConfigError("no problem section, and the model's waiting law has no fractional limit"));
  }
  if (!has_model && !root.contains("problem")) throw ConfigError("config needs a model or a problem section");

  if (root.contains("grid")) {
    const auto& g = root.at("grid");
    detail::allow_keys(g, "grid", {"dp", "fhjb"});
    if (g.contains("dp")) {
      const auto& d = g.at("dp");
      const std::string w = "grid.dp";
      detail::allow_keys(d, w, {"t_nodes", "t_grading", "t_snap", "y_min", "y_max", "y_nodes", "space_rule"});
      auto& c = cfg.dp_grid;
      if (d.contains("t_nodes")) c.t_nodes = detail::count(d.at("t_nodes"), w + ".t_nodes");
      c.t_grading = detail::number_or(d, "t_grading", w, c.t_grading);
      c.t_snap = detail::number_or(d, "t_snap", w, c.t_snap);
      c.y_min = detail::number_or(d, "y_min", w, c.y_min);
      c.y_max = detail::number_or(d, "y_max", w, c.y_max);
      if (d.contains("y_nodes")) c.y_nodes = detail::count(d.at("y_nodes"), w + ".y_nodes");
      if (d.contains("space_rule")) c.space_rule = detail::space_rule(d.at("space_rule"), w + ".space_rule");
      if (c.t_nodes < 2 || c.y_nodes < 3) throw ConfigError(w + " needs t_nodes >= 2 and y_nodes >= 3");
      if (!(c.t_grading >= 1.0) || !(c.t_snap >= 0.0)) throw ConfigError(w + " needs t_grading >= 1 and t_snap >= 0");
      if (!(c.y_max > c.y_min)) throw ConfigError(w + " needs y_max > y_min");
    }
    if (g.contains("fhjb")) {
      const auto& f = g.at("fhjb");
      const std::string w = "grid.fhjb";
      detail::allow_keys(f, w, {"t_step", "y_min", "y_max", "y_nodes", "space_rule"});
      auto& c = cfg.fhjb_grid;
      c.t_step = detail::number_or(f, "t_step", w, c.t_step);
      c.y_min = detail::number_or(f, "y_min", w, c.y_min);
      c.y_max = detail::number_or(f, "y_max", w, c.y_max);
      if (f.contains("y_nodes")) c.y_nodes = detail::count(f.at("y_nodes"), w + ".y_nodes");
      if (f.contains("space_rule")) c.space_rule = detail::space_rule(f.at("space_rule"), w + ".space_rule");
      if (!(c.t_step > 0.0)) throw ConfigError(w + ".t_step must be positive");
      if (c.y_nodes < 5) throw ConfigError(w + ".y_nodes must be at least 5");
      if (!(c.y_max > c.y_min)) throw ConfigError(w + " needs y_max > y_min");
    }
  }

  if (root.contains("sweep")) {
    const auto& s = root.at("sweep");
    const std::string w = "sweep";
    detail::allow_keys(s, w, {"taus", "exclude_steps", "y_margin", "window", "mode", "mc_paths", "record_runtime"});
    auto& o = cfg.sweep;
    if (s.contains("taus")) cfg.taus = detail::numbers(s.at("taus"), w + ".taus");
    o.exclude_steps = detail::number_or(s, "exclude_steps", w, o.exclude_steps);
    o.y_margin = detail::number_or(s, "y_margin", w, o.y_margin);
    if (s.contains("window")) {
      const auto win = detail::numbers(s.at("window"), w + ".window");
      if (win.size() != 2 || !(win[1] > win[0])) throw ConfigError(w + ".window must be [y_lo, y_hi] with y_hi > y_lo");
      o.window_y_min = win[0];
      o.window_y_max = win[1];
    }
    if (s.contains("mode")) {
      const auto mode = detail::text(s.at("mode"), w + ".mode");
      if (mode == "dp") o.mode = SweepMode::dp;
      else if (mode == "monte-carlo") o.mode = SweepMode::monte_carlo;
      else throw ConfigError(w + ".mode must be dp or monte-carlo");
    }
    if (s.contains("mc_paths")) o.mc_paths = detail::count(s.at("mc_paths"), w + ".mc_paths");
    if (s.contains("record_runtime")) {
      if (!s.at("record_runtime").is_boolean()) throw ConfigError(w + ".record_runtime must be a boolean");
      o.record_runtime = s.at("record_runtime").get<bool>();
    }
    if (!(o.exclude_steps >= 0.0)) throw ConfigError(w + ".exclude_steps must be non-negative");
    if (!(o.y_margin >= 0.0 && o.y_margin < 0.5)) throw ConfigError(w + ".y_margin must lie in [0, 0.5)");
  }

  if (root.contains("simulate")) {
    const auto& s = root.at("simulate");
    const std::string w = "simulate";
    detail::allow_keys(s, w, {"paths", "y0", "time", "policy", "control", "dump_paths"});
    auto& c = cfg.simulate;
    if (s.contains("paths")) c.paths = detail::count(s.at("paths"), w + ".paths");
    c.y0 = detail::number_or(s, "y0", w, c.y0);
    if (s.contains("time")) {
      c.time = detail::number(s.at("time"), w + ".time");
      if (!(*c.time > 0.0)) throw ConfigError(w + ".time must be positive");
    }
    if (s.contains("policy")) {
      const auto p = detail::text(s.at("policy"), w + ".policy");
      if (p == "constant") c.policy = SimulatePolicy::constant;
      else if (p == "dp") c.policy = SimulatePolicy::dp;
      else throw ConfigError(w + ".policy must be constant or dp");
    }
    if (s.contains("control")) c.control = static_cast<int>(detail::count(s.at("control"), w + ".control"));
    if (s.contains("dump_paths")) c.dump_paths = detail::count(s.at("dump_paths"), w + ".dump_paths");
    if (has_model && static_cast<std::size_t>(c.control) >= cfg.model.controls.size()) {
      throw ConfigError(w + ".control is out of range");
    }
  }

  if (root.contains("rng")) {
    const auto& r = root.at("rng");
    detail::allow_keys(r, "rng", {"seed"});
    if (r.contains("seed")) {
      if (!r.at("seed").is_number_unsigned()) throw ConfigError("rng.seed must be a non-negative integer");
      cfg.seed = r.at("seed").get<std::uint64_t>();
    }
  }
  if (root.contains("output")) {
    const auto& o = root.at("output");
    detail::allow_keys(o, "output", {"directory"});
    if (o.contains("directory")) cfg.output_directory = detail::text(o.at("directory"), "output.directory");
  }
  cfg.sweep.seed = cfg.seed;
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

}  // namespace ctrw
