#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ctrw/fhjb_solver.hpp"
#include "ctrw/grid.hpp"
#include "ctrw/model.hpp"
#include "oracles.hpp"

using namespace ctrw;

namespace {

FhjbControl stable_control(double scale) {
  FhjbControl c;
  c.label = "u";
  c.scale = [scale](double) { return scale; };
  return c;
}

FhjbProblem problem(double beta, double alpha, Fn1 initial, std::vector<FhjbControl> controls = {stable_control(1.0)}) {
  FhjbProblem p;
  p.beta = beta;
  p.alpha = alpha;
  p.initial = std::move(initial);
  p.controls = std::move(controls);
  p.horizon = 1.0;
  return p;
}

GridFunction grid(std::size_t nt, double ylo, double yhi, std::size_t ny, SpaceRule rule = SpaceRule::linear) {
  return GridFunction(uniform_nodes(0.0, 1.0, nt), uniform_nodes(ylo, yhi, ny), rule);
}

std::vector<double> sample(const std::vector<double>& y, const Fn1& f) {
  std::vector<double> v(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) v[j] = f(y[j]);
  return v;
}

}  // namespace

TEST(ApplyLAlpha, ConstantSliceGivesZero) {
  const std::vector<double> v(21, 3.0), s(21, 1.3);
  for (double alpha : {0.5, 1.5, 2.0}) {
    for (auto rule : {SpaceRule::constant, SpaceRule::linear}) {
      for (double x : apply_l_alpha(v, 0.1, alpha, s, LAlphaForm::automatic, rule)) EXPECT_EQ(x, 0.0);
    }
  }
}

TEST(ApplyLAlpha, CompensatedFormAnnihilatesLinearSlices) {
  const auto y = uniform_nodes(-2.0, 2.0, 41);
  const auto v = sample(y, [](double x) { return 0.5 - 2.0 * x; });
  const std::vector<double> s(y.size(), 1.0);
  for (double alpha : {1.2, 1.5, 1.9}) {
    for (double x : apply_l_alpha(v, 0.1, alpha, s, LAlphaForm::compensated, SpaceRule::linear)) {
      EXPECT_NEAR(x, 0.0, 1e-10);
    }
  }
}

TEST(ApplyLAlpha, DiffusionStencilOnQuadratics) {
  const auto y = uniform_nodes(-3.0, 3.0, 13);
  const auto v = sample(y, [](double x) { return x * x; });
  const std::vector<double> one(y.size(), 1.0), two(y.size(), 2.0);
  const auto out = apply_l_alpha(v, 0.5, 2.0, one);
  for (std::size_t j = 1; j + 1 < y.size(); ++j) EXPECT_NEAR(out[j], 1.0, 1e-12);
  const auto doubled = apply_l_alpha(v, 0.5, 2.0, two);
  for (std::size_t j = 1; j + 1 < y.size(); ++j) EXPECT_NEAR(doubled[j], 2.0, 1e-12);
}

TEST(ApplyLAlpha, MatchesTheSingularIntegralOfAGaussian) {
  // (alpha s / 2) int_0^inf (f(y+r) + f(y-r) - 2 f(y)) r^(-1-alpha) dr by
  // Gauss-Kronrod. For f = exp(-y^2) the bracket is
  // 2 f(y) (exp(-r^2) cosh(2 y r) - 1), written without cancellation.
  // On [0, 1] the substitution r = u^(1/(2-alpha)) removes the r^(1-alpha)
  // cusp that stops the adaptive rule early.
  auto f = [](double x) { return std::exp(-x * x); };
  const double h = 0.01;
  const auto y = uniform_nodes(-12.0, 12.0, 2401);
  const auto v = sample(y, f);
  for (double alpha : {0.6, 1.4, 1.8}) {
    const std::vector<double> s(y.size(), 1.0);
    const auto out = apply_l_alpha(v, h, alpha, s, LAlphaForm::automatic, SpaceRule::constant);
    for (double x0 : {0.0, 0.5, 1.5}) {
      auto g = [&](double r) {
        const double sh = std::sinh(x0 * r);
        const double bracket = 2.0 * f(x0) * std::expm1(-r * r + std::log1p(2.0 * sh * sh));
        return bracket * std::pow(r, -1.0 - alpha);
      };
      const double k = 1.0 / (2.0 - alpha);
      auto g_flat = [&](double u) { return u > 0.0 ? g(std::pow(u, k)) * k * std::pow(u, k - 1.0) : 0.0; };
      // Beyond r = 30 only -2 f(y) survives.
      const double exact = 0.5 * alpha *
                           (oracle::gauss_kronrod(g_flat, 0.0, 1.0, 1e-12) + oracle::gauss_kronrod(g, 1.0, 30.0, 1e-11) -
                            2.0 * f(x0) * std::pow(30.0, -alpha) / alpha);
      const auto j = nearest_index(y, x0);
      EXPECT_NEAR(out[j], exact, 2e-3 * std::max(1.0, std::abs(exact))) << "alpha " << alpha << " y " << x0;
    }
  }
}

TEST(ApplyLAlpha, Errors) {
  const std::vector<double> v(9, 0.0), s(9, 1.0);
  EXPECT_THROW(apply_l_alpha(v, 0.1, 1.0, s), UnsupportedError);
  EXPECT_THROW(apply_l_alpha(std::vector<double>(4, 0.0), 0.1, 1.5, std::vector<double>(4, 1.0)), ResolutionError);
  EXPECT_THROW(apply_l_alpha(v, 0.1, 1.5, s, LAlphaForm::uncompensated), UnsupportedError);
  EXPECT_THROW(apply_l_alpha(v, 0.1, 2.5, s), DomainError);
}

TEST(SolveFhjb, ConstantInitialDataStaysConstant) {
  for (double alpha : {0.7, 1.5, 2.0}) {
    // h_y = 0.5 keeps h_t^beta * stiffness <= beta at h_t = 1e-3 for every alpha.
    const auto S =
        solve_fhjb(problem(0.5, alpha, [](double) { return 1.25; }), grid(1001, -4, 4, 17, SpaceRule::constant));
    for (double v : S.values) EXPECT_NEAR(v, 1.25, 1e-12) << "alpha " << alpha;
  }
}

TEST(SolveFhjb, LinearInitialDataIsPreserved) {
  const auto S = solve_fhjb(problem(0.6, 1.5, [](double y) { return y; }), grid(201, -4, 4, 17));
  for (std::size_t i = 0; i < S.nt(); ++i) {
    for (std::size_t j = 0; j < S.ny(); ++j) ASSERT_NEAR(S.at(i, j), S.y_nodes[j], 1e-9);
  }
}

TEST(SolveFhjb, QuadraticBenchmarkAgainstTheSubordinationOracle) {
  // S(1, 0) = E E_1 for the inverse stable subordinator, unit jump variance.
  const auto mc = oracle::inverse_subordinator_mean(0.5, 1.0, 400000, 2024);
  const double closed = 1.0 / std::tgamma(1.5);
  ASSERT_NEAR(mc.mean, closed, 4.0 * mc.std_error);
  const auto S = solve_fhjb(problem(0.5, 2.0, [](double y) { return y * y; }), grid(1001, -6, 6, 25));
  const auto j = nearest_index(S.y_nodes, 0.0);
  EXPECT_NEAR(S.at(S.nt() - 1, j), closed, 0.02 * closed);
  EXPECT_EQ(S.metadata.at("first_valid_t"), format_number(1e-3));
}

TEST(SolveFhjb, StabilityErrorReportsTheAdmissibleStep) {
  const auto p = problem(0.5, 2.0, [](double y) { return y * y; });
  // stiffness 1 / 0.5^2 = 4; explicit bound h_t^(1/2) * 4 <= 1/2.
  try {
    solve_fhjb(p, grid(21, -6, 6, 25));
    FAIL() << "expected a stability error";
  } catch (const StabilityError& e) {
    EXPECT_NEAR(e.admissible_step(), 1.0 / 64.0, 1e-15);
  }
  EXPECT_NO_THROW(solve_fhjb(p, grid(101, -6, 6, 25)));
}

TEST(SolveFhjb, ConfigurationErrors) {
  EXPECT_THROW(solve_fhjb(problem(0.5, 1.0, [](double y) { return y; }), grid(101, -6, 6, 25)), UnsupportedError);
  EXPECT_THROW(solve_fhjb(problem(0.5, 2.0, [](double y) { return y; }), grid(101, -6, 6, 4)), ResolutionError);
  GridFunction ragged({0.0, 0.3, 1.0}, uniform_nodes(-6, 6, 25));
  EXPECT_THROW(solve_fhjb(problem(0.5, 2.0, [](double y) { return y; }), ragged), ConfigError);
}

TEST(FhjbResidual, ZeroAndSourceOnlyCases) {
  auto zero = grid(101, -2, 2, 9);
  EXPECT_EQ(fhjb_residual(problem(0.5, 2.0, [](double) { return 0.0; }), zero), 0.0);
  // S = 0 with S0 = 1: only the source survives, largest at the first node.
  const auto r = fhjb_residual_report(problem(0.4, 2.0, [](double) { return 1.0; }), zero);
  EXPECT_NEAR(r.rl_form, std::pow(0.01, -0.4) / std::tgamma(0.6), 1e-12);
  EXPECT_NEAR(r.rl_form_at, 0.01, 1e-15);
}

TEST(FhjbResidual, ConstantSolutionAtTwoResolutions) {
  for (double beta : {0.3, 0.7}) {
    // A small scale keeps beta = 0.3 inside the explicit bound.
    const auto p = problem(beta, 1.5, [](double) { return 2.0; }, {stable_control(0.05)});
    for (std::size_t nt : {101, 1001}) {
      const auto S = solve_fhjb(p, grid(nt, -2, 2, 9, SpaceRule::constant));
      const double ht = 1.0 / static_cast<double>(nt - 1);
      EXPECT_LE(fhjb_residual(p, S), 10.0 * std::pow(ht, std::min(1.0, 2.0 - beta))) << beta << " " << nt;
    }
  }
}

TEST(FhjbResidual, RiemannLiouvilleAndCaputoFormsDifferByTheBoundaryTerm) {
  const auto p = problem(0.5, 2.0, [](double y) { return std::exp(-y * y); });
  std::vector<double> settled;
  for (std::size_t nt : {201, 401}) {
    const auto r = fhjb_residual_report(p, solve_fhjb(p, grid(nt, -4, 4, 17)));
    EXPECT_LE(r.boundary_gap, 1e-12);
    // The largest residual sits on the first step, inside the t^(-beta)
    // layer that piecewise-linear time samples cannot resolve.
    EXPECT_NEAR(r.rl_form_at, 1.0 / static_cast<double>(nt - 1), 1e-12);
    settled.push_back(r.rl_form_settled);
  }
  EXPECT_LT(settled[1], 5e-3);
  EXPECT_GE(std::log2(settled[0] / settled[1]), 0.9) << settled[0] << " " << settled[1];
}

TEST(SolveFhjb, ComparisonPrinciple) {
  const auto lo = problem(0.5, 1.5, [](double y) { return std::exp(-y * y); });
  auto hi = lo;
  hi.initial = [](double y) { return std::exp(-y * y) + 0.2 / (1.0 + y * y); };
  const auto g = grid(1001, -5, 5, 21, SpaceRule::constant);
  const auto a = solve_fhjb(lo, g);
  const auto b = solve_fhjb(hi, g);
  for (std::size_t k = 0; k < a.values.size(); ++k) ASSERT_LE(a.values[k], b.values[k] + 1e-12);
}

TEST(SolveFhjb, LargerControlSetsDominate) {
  auto small = problem(0.5, 2.0, [](double y) { return std::cos(y); });
  auto large = small;
  auto extra = stable_control(0.3);
  extra.jump_reward_density = [](double y) { return 0.1 * std::sin(y); };
  extra.waiting_reward = [](double, double y) { return -0.05 * y * y; };
  large.controls.push_back(extra);
  const auto g = grid(201, -6, 6, 25);
  const auto a = solve_fhjb(small, g);
  const auto b = solve_fhjb(large, g);
  double gain = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    ASSERT_LE(a.values[k], b.values[k] + 1e-8);
    gain = std::max(gain, b.values[k] - a.values[k]);
  }
  EXPECT_GT(gain, 1e-3);
}

TEST(SolveFhjb, ElapsedTimeIsTheMirrorOfRemainingTime) {
  auto p = problem(0.5, 1.5, [](double y) { return std::exp(-y * y); });
  const auto g = grid(1001, -5, 5, 21);
  const auto fwd = solve_fhjb(p, g);
  p.direction = Direction::elapsed_time;
  const auto bwd = solve_fhjb(p, g);
  const std::size_t nt = g.nt();
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t j = 0; j < g.ny(); ++j) ASSERT_EQ(bwd.at(nt - 1 - i, j), fwd.at(i, j));
  }
  EXPECT_LE(fhjb_residual_report(p, bwd).boundary_gap, 1e-9);
}
