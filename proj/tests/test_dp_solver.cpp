#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "ctrw/dp_solver.hpp"
#include "ctrw/grid.hpp"
#include "ctrw/model.hpp"
#include "oracles.hpp"

using namespace ctrw;

namespace {

Control gaussian_control(const std::string& label, double stddev) {
  Control c;
  c.label = label;
  c.jump = JumpLaw::gaussian(stddev);
  return c;
}

ModelSpec smooth_model(Fn1 terminal, double tau = 0.05) {
  ModelSpec m;
  m.waiting = WaitingLaw::spliced_pareto(0.5);
  m.controls = {gaussian_control("one", 1.0)};
  m.terminal = std::move(terminal);
  m.tau = tau;
  m.horizon = 1.0;
  return m;
}

GridFunction smooth_grid(SpaceRule rule = SpaceRule::linear, std::size_t nt = 21, std::size_t ny = 121) {
  return GridFunction(uniform_nodes(0.0, 1.0, nt), uniform_nodes(-6.0, 6.0, ny), rule);
}

// Lattice stub whose waits and jumps land on grid nodes; its brute-force
// value over all 2^9 feedback policies is in tests/data.
ModelSpec stub_model() {
  ModelSpec m;
  m.waiting = WaitingLaw::discrete(0.5, {1.0, 2.0}, {0.6, 0.4});
  Control spread;
  spread.label = "spread";
  spread.jump = JumpLaw::discrete(2.0, {-1.0, 0.0, 1.0}, {0.25, 0.5, 0.25});
  spread.waiting_reward = [](double, double y) { return 0.1 + 0.05 * y; };
  Control kick;
  kick.label = "kick";
  kick.jump = JumpLaw::discrete(2.0, {-1.0, 1.0}, {0.3, 0.7});
  kick.jump_reward_coef = [](double y) { return 0.1 - 0.2 * y; };
  m.controls = {spread, kick};
  m.terminal = [](double y) { return y < -0.5 ? 0.0 : (y < 0.5 ? 1.0 : 3.0); };
  m.tau = 1.0;
  m.horizon = 2.0;
  return m;
}

double max_abs_diff(const GridFunction& a, const GridFunction& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) worst = std::max(worst, std::abs(a.values[k] - b.values[k]));
  return worst;
}

}  // namespace

TEST(SolveDp, ConstantPayoffStaysConstant) {
  for (auto rule : {SpaceRule::constant, SpaceRule::linear}) {
    const auto S = solve_dp(smooth_model([](double) { return 2.5; }), smooth_grid(rule));
    for (double v : S.values) EXPECT_NEAR(v, 2.5, 1e-12);
  }
}

TEST(SolveDp, LinearPayoffIsPreservedBySymmetricJumps) {
  const auto S = solve_dp(smooth_model([](double y) { return y; }), smooth_grid(SpaceRule::linear));
  for (std::size_t i = 0; i < S.nt(); ++i) {
    for (std::size_t j = 0; j < S.ny(); ++j) EXPECT_NEAR(S.at(i, j), S.y_nodes[j], 1e-10);
  }
}

TEST(SolveDp, StubMatchesExhaustivePolicyEnumeration) {
  const auto rows = oracle::read_grid_rows(std::string(CTRW_TEST_DATA_DIR) + "/stub3x3_oracle.csv");
  ASSERT_EQ(rows.size(), 9u);
  const GridFunction grid({0.0, 1.0, 2.0}, {-1.0, 0.0, 1.0}, SpaceRule::constant);
  const auto S = solve_dp(stub_model(), grid);
  for (const auto& r : rows) {
    const auto i = nearest_index(S.t_nodes, r.t);
    const auto j = nearest_index(S.y_nodes, r.y);
    EXPECT_NEAR(S.at(i, j), r.value, 1e-10) << "t " << r.t << " y " << r.y;
  }
}

TEST(DpResidual, SolutionIsAFixedPoint) {
  ModelSpec m = smooth_model([](double y) { return std::exp(-y * y); });
  m.controls.push_back(gaussian_control("two", 2.0));
  const auto grid = smooth_grid();
  const auto S = solve_dp(m, grid);
  EXPECT_LE(dp_residual(m, S), 1e-8);
  const auto stub = solve_dp(stub_model(), GridFunction({0.0, 1.0, 2.0}, {-1.0, 0.0, 1.0}));
  EXPECT_LE(dp_residual(stub_model(), stub), 1e-12);
}

TEST(DpResidual, PerturbationIsDetected) {
  const auto m = smooth_model([](double y) { return std::exp(-y * y); });
  auto S = solve_dp(m, smooth_grid());
  const std::size_t i = 10, j = 60;
  S.at(i, j) += 1.0;
  // At the perturbed node the right-hand side sees S(t_i) only through the
  // jump branch, so at least the no-jump mass P(gamma' > t_i) remains.
  const double g = std::tgamma(0.5);
  const double t0 = std::pow(1.5 / g, 2.0);
  const double r = S.t_nodes[i] / (m.tau * m.tau);
  const double no_jump = r < t0 ? 1.0 - 0.5 * std::pow(t0, -1.5) / g * r : std::pow(r, -0.5) / g;
  const double res = dp_residual(m, S);
  EXPECT_GE(res, no_jump);
  EXPECT_LE(res, 1.0 + 1e-8);
}

TEST(DpResidual, ConstantGridHasNoResidual) {
  const auto m = smooth_model([](double) { return -0.75; });
  auto grid = smooth_grid();
  for (auto& v : grid.values) v = -0.75;
  EXPECT_LE(dp_residual(m, grid), 1e-12);
}

TEST(SolveDp, ErrorsForUnresolvedGrids) {
  // No-jump mass at the first node within 1e-12 of one.
  ModelSpec m = smooth_model([](double y) { return y; }, 1.0);
  EXPECT_THROW(solve_dp(m, GridFunction({0.0, 1e-13, 1.0}, uniform_nodes(-6, 6, 121))), ResolutionError);
  // A window narrower than the truncated Gaussian kernel.
  ModelSpec wide = smooth_model([](double y) { return y; }, 1.0);
  EXPECT_THROW(solve_dp(wide, GridFunction(uniform_nodes(0, 1, 11), uniform_nodes(-2, 2, 41))), WindowError);
  // Jump spread below the space step.
  EXPECT_THROW(solve_dp(m, GridFunction(uniform_nodes(0, 1, 11), uniform_nodes(-60, 60, 41))), ResolutionError);
  // Alpha <= 1 needs constant extrapolation.
  ModelSpec heavy = m;
  heavy.controls[0].jump = JumpLaw::symmetric_pareto(0.8, 1.0);
  EXPECT_THROW(solve_dp(heavy, smooth_grid(SpaceRule::linear)), WindowError);
  EXPECT_NO_THROW(solve_dp(heavy, smooth_grid(SpaceRule::constant)));
  // Grid must span the horizon.
  EXPECT_THROW(solve_dp(m, GridFunction(uniform_nodes(0, 0.5, 11), uniform_nodes(-6, 6, 121))), ConfigError);
}

TEST(SolveDp, InnerMotionIsRejected) {
  ModelSpec m = smooth_model([](double y) { return y; });
  m.controls[0].inner = InnerMotion{[](double) { return 1.0; }, nullptr};
  EXPECT_THROW(solve_dp(m, smooth_grid()), UnsupportedError);
}

TEST(SolveDp, MonotoneInTheTerminalPayoff) {
  ModelSpec lo = smooth_model([](double y) { return std::exp(-y * y); });
  lo.controls.push_back(gaussian_control("two", 1.7));
  ModelSpec hi = lo;
  hi.terminal = [](double y) { return std::exp(-y * y) + 0.1 * (1.0 + std::tanh(y)); };
  const auto a = solve_dp(lo, smooth_grid());
  const auto b = solve_dp(hi, smooth_grid());
  for (std::size_t k = 0; k < a.values.size(); ++k) EXPECT_LE(a.values[k], b.values[k] + 1e-12);
}

TEST(SolveDp, LargerControlSetsDominate) {
  ModelSpec small = smooth_model([](double y) { return std::cos(y) + 0.1 * y * y; });
  ModelSpec large = small;
  large.controls.push_back(gaussian_control("two", 2.0));
  large.controls.back().waiting_reward = [](double, double y) { return -0.2 * y * y; };
  const auto a = solve_dp(small, smooth_grid());
  const auto b = solve_dp(large, smooth_grid());
  for (std::size_t k = 0; k < a.values.size(); ++k) EXPECT_LE(a.values[k], b.values[k] + 1e-8);
  EXPECT_GT(max_abs_diff(a, b), 1e-3);
}

TEST(SolveDp, RefinementChangesTheSolutionLittle) {
  const auto m = smooth_model([](double y) { return std::exp(-y * y); });
  // Graded time nodes resolve the t^(-beta) layer at t = 0; node 2i of the
  // fine grid is node i of the coarse one.
  const auto coarse =
      solve_dp(m, GridFunction(graded_nodes(1.0, 40, 2.0, 0.0), uniform_nodes(-6, 6, 121), SpaceRule::linear));
  const auto fine =
      solve_dp(m, GridFunction(graded_nodes(1.0, 80, 2.0, 0.0), uniform_nodes(-6, 6, 241), SpaceRule::linear));
  double worst = 0.0;
  for (std::size_t i = 0; i < coarse.nt(); ++i) {
    for (std::size_t j = 0; j < coarse.ny(); ++j) {
      worst = std::max(worst, std::abs(coarse.at(i, j) - fine.at(2 * i, 2 * j)));
    }
  }
  EXPECT_LT(worst, 2e-3);
}

TEST(SolveDp, ElapsedTimeIsTheMirrorOfRemainingTime) {
  ModelSpec m = smooth_model([](double y) { return std::exp(-y * y); });
  m.controls.push_back(gaussian_control("two", 1.5));
  m.controls.back().waiting_reward = [](double, double y) { return 0.05 * y; };
  const auto grid = smooth_grid();
  const auto fwd = solve_dp(m, grid);
  ModelSpec back = m;
  back.direction = Direction::elapsed_time;
  const auto bwd = solve_dp(back, grid);
  EXPECT_LE(dp_residual(back, bwd), 1e-8);
  const std::size_t nt = grid.nt();
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t j = 0; j < grid.ny(); ++j) EXPECT_NEAR(bwd.at(nt - 1 - i, j), fwd.at(i, j), 1e-12);
  }
  for (std::size_t j = 0; j < grid.ny(); ++j) EXPECT_EQ(bwd.at(nt - 1, j), m.terminal(grid.y_nodes[j]));
}

TEST(GridIo, RoundTripKeepsValuesAndChecksum) {
  const auto S = solve_dp(smooth_model([](double y) { return std::sin(y); }), smooth_grid());
  const auto dir = std::filesystem::temp_directory_path() / "ctrw_dp_io";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "value.csv").string();
  write_grid(S, path);
  const auto back = read_grid(path);
  EXPECT_EQ(back.t_nodes, S.t_nodes);
  EXPECT_EQ(back.y_nodes, S.y_nodes);
  EXPECT_EQ(back.values, S.values);
  EXPECT_EQ(back.space_rule, SpaceRule::linear);
  EXPECT_EQ(back.metadata.at("solver"), "dp");
  // Corrupting the payload breaks the checksum.
  write_text_file(path, grid_csv(S) + "9,9,9\n");
  EXPECT_THROW(read_grid(path), IoError);
  std::filesystem::remove_all(dir);
}
