// ctrwlab: command-line front end. Every subcommand except frac-deriv is
// driven by a JSON config; outputs are written with %.17g so reruns with the
// same config and seed are byte-identical.
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 numerical or
// solver failure.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctrw/ctrw.hpp"

namespace {

using namespace ctrw;

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

std::function<double(double)> builtin_function(const std::string& name) {
  if (name == "const") return [](double) { return 1.0; };
  if (name == "linear") return [](double y) { return y; };
  if (name == "quad") return [](double y) { return y * y; };
  if (name == "step") return [](double y) { return y > 0.0 ? 1.0 : (y < 0.0 ? 0.0 : 0.5); };
  if (name == "exp") return [](double y) { return std::exp(-y); };
  throw ConfigError("unknown builtin function '" + name + "' (const, linear, quad, step, exp)");
}

struct FracArgs {
  std::string op;
  double beta = 0.5;
  std::string fn = "linear";
  double a = 0.0;
  double b = 1.0;
  std::vector<double> x;
  double h = 1e-3;
};

int run_frac_deriv(const FracArgs& args) {
  const FracOrder order(args.beta);
  if (!(args.b > args.a)) throw DomainError("--b must exceed --a");
  const auto fn = builtin_function(args.fn);
  SampledFunction f = sample_function(fn, args.a, args.b, args.h, Decay::zero);
  // Endpoint samples stand for the one-sided limits f(a+) and f(b-).
  const double nudge = 1e-9 * f.step;
  f.values.front() = fn(args.a + nudge);
  f.values.back() = fn(args.b - nudge);

  using Op = double (*)(const SampledFunction&, FracOrder, double);
  static const std::map<std::string, Op> ops = {
      {"caputo-left", [](const SampledFunction& g, FracOrder o, double x) { return caputo_left(g, o, x); }},
      {"caputo-right", [](const SampledFunction& g, FracOrder o, double x) { return caputo_right(g, o, x); }},
      {"rl-left", [](const SampledFunction& g, FracOrder o, double x) { return rl_left(g, o, x); }},
      {"rl-right", [](const SampledFunction& g, FracOrder o, double x) { return rl_right(g, o, x); }},
      {"reg-caputo", [](const SampledFunction& g, FracOrder o, double x) { return regularized_caputo_left(g, o, x); }},
      {"gen", [](const SampledFunction& g, FracOrder o, double x) { return generator_form(g, o, x); }},
      {"dual-gen", [](const SampledFunction& g, FracOrder o, double x) { return dual_generator_form(g, o, x); }},
      {"a-beta", [](const SampledFunction& g, FracOrder o, double x) { return a_beta(g, o, x); }},
  };
  const auto it = ops.find(args.op);
  if (it == ops.end()) throw ConfigError("unknown operator '" + args.op + "'");
  std::string out = "x,value\n";
  for (double x : args.x) out += format_number(x) + "," + format_number(it->second(f, order, x)) + "\n";
  std::cout << out;
  return 0;
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<long long> paths;
};

std::string output_directory(const RunArgs& args, const ExperimentConfig& cfg) {
  std::string dir = args.out;
  if (dir.empty()) dir = cfg.output_directory;
  if (dir.empty()) {
    const char* env = std::getenv("CTRWLAB_OUTPUT_DIR");
    if (env && *env) dir = env;
  }
  if (dir.empty()) dir = ".";
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

ExperimentConfig load(const RunArgs& args) {
  ExperimentConfig cfg = load_config(args.config);
  if (args.seed) {
    cfg.seed = *args.seed;
    cfg.sweep.seed = *args.seed;
  }
  return cfg;
}

void require_model(const RunArgs& args, const ExperimentConfig& cfg) {
  if (!cfg.has_model) throw ConfigError(args.config + ": this subcommand needs a model section");
}

std::string policy_csv(const Policy& p) {
  std::string out = "t,y,control\n";
  for (std::size_t i = 0; i < p.t_nodes.size(); ++i) {
    for (std::size_t j = 0; j < p.y_nodes.size(); ++j) {
      out += format_number(p.t_nodes[i]) + "," + format_number(p.y_nodes[j]) + "," + std::to_string(p.at(i, j)) + "\n";
    }
  }
  return out;
}

int run_simulate(const RunArgs& args) {
  ExperimentConfig cfg = load(args);
  require_model(args, cfg);
  if (args.paths) {
    if (*args.paths < 0) throw ConfigError("--paths must be non-negative");
    cfg.simulate.paths = static_cast<std::size_t>(*args.paths);
  }
  const auto& sim = cfg.simulate;
  const std::string dir = output_directory(args, cfg);
  const GridFunction grid = cfg.dp_template();
  Policy policy;
  if (sim.policy == SimulatePolicy::dp) {
    policy = solve_dp_detailed(cfg.model, grid).policy;
  } else {
    policy = constant_policy(grid.t_nodes, grid.y_nodes, sim.control, cfg.model.direction);
  }
  const double t = sim.time.value_or(cfg.model.horizon);
  std::vector<PathRecord> kept;
  const McEstimate est = evaluate_policy_mc(cfg.model, policy, t, sim.y0, sim.paths, cfg.seed, 0, &kept, sim.dump_paths);

  std::map<std::string, std::string> summary;
  summary["mean"] = format_number(est.mean);
  summary["std_error"] = format_number(est.std_error);
  summary["paths"] = std::to_string(est.paths);
  summary["truncated_paths"] = std::to_string(est.truncated_paths);
  summary["mean_events"] = format_number(est.mean_events);
  summary["seed"] = std::to_string(cfg.seed);
  summary["tau"] = format_number(cfg.model.tau);
  summary["time"] = format_number(t);
  summary["y0"] = format_number(sim.y0);
  summary["policy"] = sim.policy == SimulatePolicy::dp ? "dp" : "constant:" + std::to_string(sim.control);
  const std::string paths = path_csv(kept);
  write_text_file(dir + "/paths.csv", paths);
  const std::string text = sidecar_text(summary, paths);
  write_text_file(dir + "/simulate_summary.txt", text);
  std::cout << text;
  return 0;
}

int run_solve_dp(const RunArgs& args) {
  const ExperimentConfig cfg = load(args);
  require_model(args, cfg);
  const std::string dir = output_directory(args, cfg);
  DpResult r = solve_dp_detailed(cfg.model, cfg.dp_template());
  const double residual = dp_residual(cfg.model, r.value);
  r.value.metadata["dp_residual"] = format_number(residual);
  write_grid(r.value, dir + "/dp_value.csv");
  write_text_file(dir + "/dp_policy.csv", policy_csv(r.policy));
  std::cout << "dp_residual = " << format_number(residual) << "\n";
  return 0;
}

int run_solve_fhjb(const RunArgs& args) {
  const ExperimentConfig cfg = load(args);
  const FhjbProblem& problem = cfg.limit();
  const std::string dir = output_directory(args, cfg);
  GridFunction S = solve_fhjb(problem, cfg.fhjb_template());
  const FhjbResidual res = fhjb_residual_report(problem, S);
  S.metadata["residual_rl_form"] = format_number(res.rl_form);
  S.metadata["residual_rl_form_at"] = format_number(res.rl_form_at);
  S.metadata["residual_rl_form_settled"] = format_number(res.rl_form_settled);
  S.metadata["residual_caputo_form"] = format_number(res.caputo_form);
  S.metadata["residual_boundary_gap"] = format_number(res.boundary_gap);
  write_grid(S, dir + "/fhjb_value.csv");
  std::cout << "residual_rl_form = " << format_number(res.rl_form) << "\n"
            << "residual_rl_form_at = " << format_number(res.rl_form_at) << "\n"
            << "residual_rl_form_settled = " << format_number(res.rl_form_settled) << "\n"
            << "residual_caputo_form = " << format_number(res.caputo_form) << "\n";
  return 0;
}

int run_converge(const RunArgs& args) {
  const ExperimentConfig cfg = load(args);
  require_model(args, cfg);
  const FhjbProblem& problem = cfg.limit();
  const std::string dir = output_directory(args, cfg);
  const SweepReport report = run_sweep(cfg.model, problem, cfg.taus, cfg.dp_template(), cfg.fhjb_template(), cfg.sweep);
  emit_report(report, dir + "/sweep.csv");
  std::cout << report_csv(report) << "fitted_decay_slope = " << number_or_na(report.fitted_decay_slope) << "\n";
  return 0;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return kExitNumeric;
  }
}

void add_run_options(CLI::App* cmd, RunArgs& args) {
  cmd->add_option("--config", args.config, "JSON experiment config")->required();
  cmd->add_option("--seed", args.seed, "RNG seed, overrides rng.seed");
  cmd->add_option("--out", args.out, "output directory (default: output.directory, then $CTRWLAB_OUTPUT_DIR, then .)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Controlled CTRW laboratory: fractional operators, DP and fractional HJB solvers, tau-sweeps"};
  app.require_subcommand(1);
  // --h is the sample step of frac-deriv, so help is long-form only.
  app.set_help_flag("--help", "print this help and exit");

  FracArgs frac;
  auto* fd = app.add_subcommand("frac-deriv", "evaluate a fractional operator on a builtin function");
  fd->add_option("--op", frac.op, "caputo-left|caputo-right|rl-left|rl-right|reg-caputo|gen|dual-gen|a-beta")->required();
  fd->add_option("--beta", frac.beta, "order in (0,1)")->required();
  fd->add_option("--fn", frac.fn, "const|linear|quad|step|exp");
  fd->add_option("--a", frac.a, "lower end of the sampled window");
  fd->add_option("--b", frac.b, "upper end of the sampled window");
  fd->add_option("--x", frac.x, "evaluation points")->required();
  fd->add_option("--h", frac.h, "sample step");

  RunArgs sim_args, dp_args, fhjb_args, conv_args;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo evaluation of a policy, with a path dump");
  add_run_options(sim, sim_args);
  sim->add_option("--paths", sim_args.paths, "number of paths, overrides simulate.paths");
  auto* dp = app.add_subcommand("solve-dp", "solve the scaled DP equation on grid.dp");
  add_run_options(dp, dp_args);
  auto* fh = app.add_subcommand("solve-fhjb", "solve the limit equation on grid.fhjb");
  add_run_options(fh, fhjb_args);
  auto* cv = app.add_subcommand("converge", "tau-sweep of the DP value against the limit solution");
  add_run_options(cv, conv_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  if (*fd) return guarded([&] { return run_frac_deriv(frac); });
  if (*sim) return guarded([&] { return run_simulate(sim_args); });
  if (*dp) return guarded([&] { return run_solve_dp(dp_args); });
  if (*fh) return guarded([&] { return run_solve_fhjb(fhjb_args); });
  if (*cv) return guarded([&] { return run_converge(conv_args); });
  return kExitValidation;
}
