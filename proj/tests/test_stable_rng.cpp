#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "ctrw/laws.hpp"
#include "ctrw/rng.hpp"
#include "oracles.hpp"

using namespace ctrw;

namespace {

// The spliced law written out independently: uniform density c on [0, t0],
// power tail t^(-beta)/Gamma(1-beta) above, with c t0 + tail(t0) = 1 and
// matching densities at t0.
struct SplicedReference {
  double beta, g, t0, c;
  explicit SplicedReference(double b)
      : beta(b), g(std::tgamma(1.0 - b)), t0(std::pow((1.0 + b) / g, 1.0 / b)), c(b * std::pow(t0, -b - 1.0) / g) {}
  double tail(double t) const { return t < t0 ? 1.0 - c * t : std::pow(t, -beta) / g; }
  double cdf(double t) const { return 1.0 - tail(t); }
};

struct Moments {
  double mean, se;
};

Moments moments(const std::vector<double>& v) {
  double s = 0.0, q = 0.0;
  for (double x : v) {
    s += x;
    q += x * x;
  }
  const double n = static_cast<double>(v.size());
  const double m = s / n;
  return {m, std::sqrt((q / n - m * m) / n)};
}

}  // namespace

TEST(Philox, KnownAnswerVectors) {
  using Block = std::array<std::uint32_t, 4>;
  EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}), (Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (Block{0xd16cfe09u, 0x94fdcceb, 0x5001e420u, 0x24126ea1u}));
}

TEST(Rng, SameStateGivesSameSequence) {
  Rng a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.uniform(), b.uniform());
  // Resuming from a saved state reproduces the continuation.
  Rng c(RngState{42, 7, a.state().counter});
  Rng d(RngState{42, 7, a.state().counter});
  EXPECT_EQ(c.normal(), d.normal());
}

TEST(Rng, StreamsAndSeedsDiffer) {
  Rng a(1, 0), b(1, 1), c(2, 0);
  const double x = a.uniform();
  EXPECT_NE(x, b.uniform());
  EXPECT_NE(x, c.uniform());
}

TEST(Rng, UniformStaysInsideTheOpenInterval) {
  Rng r(3, 0);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / n, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(WaitingLaw, TailNormalizationIsExactAboveTheCutoff) {
  for (double beta : {0.3, 0.5, 0.8}) {
    const auto law = WaitingLaw::spliced_pareto(beta);
    const SplicedReference ref(beta);
    EXPECT_NEAR(law.cutoff(), ref.t0, 1e-12 * ref.t0);
    for (double t : {ref.t0, 2.0 * ref.t0, 10.0, 1e3, 1e6}) {
      EXPECT_NEAR(law.tail(t) * std::tgamma(1.0 - beta) * std::pow(t, beta), 1.0, 1e-12);
    }
    // Non-increasing, continuous at the splice, mass one.
    EXPECT_EQ(law.tail(0.0), 1.0);
    EXPECT_NEAR(law.tail(ref.t0 * (1 - 1e-12)), law.tail(ref.t0), 1e-10);
    double prev = 1.0;
    for (double t = 0.0; t < 50.0; t += 0.01) {
      ASSERT_LE(law.tail(t), prev);
      prev = law.tail(t);
    }
  }
}

TEST(WaitingLaw, MedianOfThePureTailBranch) {
  const auto law = WaitingLaw::spliced_pareto(0.5);
  const double expected = 4.0 / std::numbers::pi;  // (2 / sqrt(pi))^2
  EXPECT_NEAR(expected, 1.27324, 1e-5);
  EXPECT_NEAR(law.quantile_of_tail(0.5), expected, 1e-12);
  EXPECT_NEAR(law.tail(expected), 0.5, 1e-12);
  // Empirical CDF at the median from 10^6 draws.
  Rng r(11, 0);
  const int n = 1000000;
  int below = 0;
  for (int i = 0; i < n; ++i) below += law.sample(r) <= expected ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(below) / n, 0.5, 3.0 * std::sqrt(0.25 / n));
}

TEST(WaitingLaw, TruncatedMeanMatchesTheIntegratedTail) {
  const double beta = 0.5, cap = 1e3;
  const auto law = WaitingLaw::spliced_pareto(beta);
  const SplicedReference ref(beta);
  const double analytic = oracle::gauss_kronrod([&](double t) { return ref.tail(t); }, 0.0, ref.t0, 1e-13) +
                          oracle::gauss_kronrod([&](double t) { return ref.tail(t); }, ref.t0, cap, 1e-11);
  EXPECT_NEAR(law.integrated_tail(cap), analytic, 1e-8);
  Rng r(5, 0);
  std::vector<double> v(1000000);
  for (auto& x : v) x = std::min(law.sample(r), cap);
  const auto m = moments(v);
  EXPECT_NEAR(m.mean, analytic, 3.0 * m.se) << "se " << m.se;
}

TEST(WaitingLaw, KolmogorovSmirnovDistanceIsSmall) {
  for (double beta : {0.3, 0.5, 0.8}) {
    const auto law = WaitingLaw::spliced_pareto(beta);
    const SplicedReference ref(beta);
    Rng r(100 + static_cast<std::uint64_t>(beta * 10), 0);
    std::vector<double> v(100000);
    for (auto& x : v) x = law.sample(r);
    std::sort(v.begin(), v.end());
    double ks = 0.0;
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double F = ref.cdf(v[i]);
      ks = std::max({ks, std::abs(F - i / n), std::abs(F - (i + 1) / n)});
    }
    EXPECT_LT(ks, 0.01) << "beta " << beta;
  }
}

TEST(WaitingLaw, ScaledTailCarriesTheFactorTau) {
  const double beta = 0.5, tau = 0.01, n = 1e-2;
  const auto law = WaitingLaw::spliced_pareto(beta);
  const double expected = tau * std::pow(n, -beta) / std::tgamma(1.0 - beta);
  EXPECT_NEAR(law.scaled_tail(n, tau), expected, 1e-14);
  Rng r(9, 0);
  const int draws = 1000000;
  int above = 0;
  for (int i = 0; i < draws; ++i) above += law.sample(r) * law.time_scale(tau) > n ? 1 : 0;
  const double p = static_cast<double>(above) / draws;
  EXPECT_NEAR(p, expected, 3.0 * std::sqrt(expected * (1 - expected) / draws));
}

TEST(WaitingLaw, DiscreteAndDeterministicStubs) {
  const auto det = WaitingLaw::deterministic(0.5, 2.0);
  Rng r(1, 0);
  EXPECT_EQ(det.sample(r), 2.0);
  EXPECT_EQ(det.tail(1.999), 1.0);
  EXPECT_EQ(det.tail(2.0), 0.0);
  const auto disc = WaitingLaw::discrete(0.5, {2.0, 1.0}, {0.4, 0.6});
  EXPECT_EQ(disc.tail(1.5), 0.4);
  EXPECT_NEAR(disc.integrated_tail(10.0), 1.4, 1e-15);
  int ones = 0;
  for (int i = 0; i < 100000; ++i) ones += disc.sample(r) == 1.0 ? 1 : 0;
  EXPECT_NEAR(ones / 1e5, 0.6, 3.0 * std::sqrt(0.24 / 1e5));
  EXPECT_THROW(WaitingLaw::discrete(0.5, {1.0}, {0.9}), ConfigError);
  EXPECT_THROW(WaitingLaw::spliced_pareto(1.0), ConfigError);
  EXPECT_THROW(WaitingLaw::deterministic(0.5, 0.0), ConfigError);
}

TEST(JumpLaw, GaussianMomentsAndDegenerateScale) {
  const auto law = JumpLaw::gaussian(1.0);
  Rng r(21, 0);
  std::vector<double> v(1000000), sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = law.sample(r);
    sq[i] = v[i] * v[i];
  }
  EXPECT_NEAR(moments(v).mean, 0.0, 3e-3);
  EXPECT_NEAR(moments(sq).mean, 1.0, 3.0 * moments(sq).se);
  const auto point = JumpLaw::gaussian(0.0, 0.75);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(point.sample(r), 0.75);
  EXPECT_EQ(point.alpha_moment(), 0.75 * 0.75);
}

TEST(JumpLaw, ParetoTailCountMatchesTheAnalyticTail) {
  const auto law = JumpLaw::symmetric_pareto(1.5, 1.0);
  const double expected = std::pow(10.0, -1.5);
  EXPECT_NEAR(law.abs_tail(10.0), expected, 1e-15);
  Rng r(33, 0);
  const int n = 10000000;
  int above = 0, positive = 0;
  for (int i = 0; i < n; ++i) {
    const double x = law.sample(r);
    above += std::abs(x) > 10.0 ? 1 : 0;
    positive += x > 0.0 ? 1 : 0;
  }
  EXPECT_NEAR(static_cast<double>(above) / n, expected, 3.0 * std::sqrt(expected * (1 - expected) / n));
  EXPECT_NEAR(static_cast<double>(positive) / n, 0.5, 3.0 * std::sqrt(0.25 / n));
  EXPECT_TRUE(std::isinf(law.alpha_moment()));
}

TEST(JumpLaw, ValidationAndProductJumps) {
  EXPECT_THROW(JumpLaw::symmetric_pareto(2.0, 1.0), ConfigError);
  EXPECT_THROW(JumpLaw::symmetric_pareto(1.5, 0.0), ConfigError);
  EXPECT_THROW(JumpLaw::gaussian(-1.0), ConfigError);
  EXPECT_THROW(JumpLaw::discrete(2.0, {1.0, -1.0}, {0.5, 0.4}), ConfigError);
  const auto law = JumpLaw::gaussian(1.0);
  Rng a(8, 0), b(8, 0);
  const auto xi = sample_jump(law, a, 3);
  ASSERT_EQ(xi.size(), 3u);
  for (double component : xi) EXPECT_EQ(component, law.sample(b));
}

TEST(CountingProcess, Examples) {
  const std::vector<double> ones(10, 1.0);
  EXPECT_EQ(counting_process(ones, 2.5), 3u);
  EXPECT_EQ(counting_process(ones, 2.0), 2u);
  EXPECT_EQ(counting_process(ones, 0.0), 0u);
  EXPECT_THROW(counting_process(ones, 10.5), InsufficientPathError);
  EXPECT_THROW(counting_process(std::vector<double>{1.0, 0.0}, 1.5), DomainError);
}

TEST(CountingProcess, NonDecreasingAndContinuousFromTheLeft) {
  std::mt19937_64 engine(17);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 40.0);
  for (int seq = 0; seq < 5; ++seq) {
    std::vector<double> waits(100);
    for (auto& w : waits) w = expo(engine);
    std::vector<double> probes(1000);
    for (auto& t : probes) t = unif(engine);
    std::sort(probes.begin(), probes.end());
    std::size_t prev = 0;
    for (double t : probes) {
      const auto n = counting_process(waits, t);
      ASSERT_GE(n, prev);
      prev = n;
    }
    // With inf{n : X(n) >= t} the count equals k at X(k) and k+1 just above.
    double x = 0.0;
    for (std::size_t k = 1; k <= 20; ++k) {
      x += waits[k - 1];
      EXPECT_EQ(counting_process(waits, x), k);
      EXPECT_EQ(counting_process(waits, std::nextafter(x, 0.0)), k);
      EXPECT_EQ(counting_process(waits, x * (1 + 1e-12)), k + 1);
    }
  }
}
