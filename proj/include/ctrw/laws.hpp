#pragma once

// Waiting-time and jump laws of the random walk, and the counting process.
//
// The heavy-tailed waiting law has an exact power tail
//   P(gamma > t) = t^(-beta) / Gamma(1 - beta),  t >= t0,
// spliced below t0 with a uniform density, t0 fixed by continuity of the
// density and total mass one. Deterministic and discrete waiting laws exist
// for brute-force checks; they keep `beta` only for the tau^(1/beta) scaling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ctrw/error.hpp"
#include "ctrw/rng.hpp"

namespace ctrw {

enum class WaitingKind { spliced_pareto, deterministic, discrete };

class WaitingLaw {
 public:
  static WaitingLaw spliced_pareto(double beta) {
    check_beta(beta);
    WaitingLaw law(WaitingKind::spliced_pareto, beta);
    const double g = std::tgamma(1.0 - beta);
    law.t0_ = std::pow((1.0 + beta) / g, 1.0 / beta);
    law.slope_ = beta * std::pow(law.t0_, -beta - 1.0) / g;
    return law;
  }

  static WaitingLaw deterministic(double beta, double value) {
    check_beta(beta);
    if (!(value > 0.0)) throw ConfigError("deterministic waiting time must be positive");
    WaitingLaw law(WaitingKind::deterministic, beta);
    law.atoms_ = {value};
    law.probs_ = {1.0};
    return law;
  }

  static WaitingLaw discrete(double beta, std::vector<double> atoms, std::vector<double> probs) {
    check_beta(beta);
    if (atoms.empty() || atoms.size() != probs.size()) {
      throw ConfigError("discrete waiting law needs matching non-empty atoms and probs");
    }
    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return atoms[a] < atoms[b]; });
    WaitingLaw law(WaitingKind::discrete, beta);
    double total = 0.0;
    for (auto i : order) {
      if (!(atoms[i] > 0.0)) throw ConfigError("waiting atoms must be positive");
      if (!(probs[i] >= 0.0)) throw ConfigError("waiting probabilities must be non-negative");
      law.atoms_.push_back(atoms[i]);
      law.probs_.push_back(probs[i]);
      total += probs[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("waiting probabilities must sum to 1");
    return law;
  }

  WaitingKind kind() const noexcept { return kind_; }
  double beta() const noexcept { return beta_; }
  /// Splice point t0 (spliced law only).
  double cutoff() const noexcept { return t0_; }
  const std::vector<double>& atoms() const noexcept { return atoms_; }
  const std::vector<double>& probs() const noexcept { return probs_; }

  /// P(gamma > t); right-continuous.
  double tail(double t) const {
    if (t < 0.0) return 1.0;
    if (kind_ == WaitingKind::spliced_pareto) {
      if (t < t0_) return 1.0 - slope_ * t;
      return std::pow(t, -beta_) / std::tgamma(1.0 - beta_);
    }
    double mass = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (atoms_[i] > t) mass += probs_[i];
    }
    return mass;
  }

  /// E[min(gamma, r)] = integral_0^r tail.
  double integrated_tail(double r) const {
    if (r <= 0.0) return 0.0;
    if (kind_ == WaitingKind::spliced_pareto) {
      if (r < t0_) return r - 0.5 * slope_ * r * r;
      const double g = std::tgamma(1.0 - beta_);
      const double e = 1.0 - beta_;
      return t0_ - 0.5 * slope_ * t0_ * t0_ + (std::pow(r, e) - std::pow(t0_, e)) / (e * g);
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) mean += probs_[i] * std::min(atoms_[i], r);
    return mean;
  }

  /// Tail and integrated tail of gamma * tau^(1/beta).
  double scaled_tail(double r, double tau) const { return tail(r / time_scale(tau)); }
  double scaled_integrated_tail(double r, double tau) const {
    const double s = time_scale(tau);
    return s * integrated_tail(r / s);
  }
  double time_scale(double tau) const { return std::pow(tau, 1.0 / beta_); }

  /// Inverse of the tail: the t with tail(t) = q for q in (0,1).
  double quantile_of_tail(double q) const {
    if (kind_ == WaitingKind::spliced_pareto) {
      if (q > tail(t0_)) return (1.0 - q) / slope_;
      return std::pow(q * std::tgamma(1.0 - beta_), -1.0 / beta_);
    }
    // Smallest atom a with P(gamma > a) < q, i.e. cumulative mass >= 1 - q.
    double above = 1.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      above -= probs_[i];
      if (above < q) return atoms_[i];
    }
    return atoms_.back();
  }

  double sample(Rng& rng) const {
    if (kind_ == WaitingKind::deterministic) return atoms_.front();
    return quantile_of_tail(rng.uniform());
  }

 private:
  WaitingLaw(WaitingKind kind, double beta) : kind_(kind), beta_(beta) {}
  static void check_beta(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("waiting index beta must lie in (0,1)");
  }

  WaitingKind kind_;
  double beta_;
  double t0_ = 0.0;
  double slope_ = 0.0;
  std::vector<double> atoms_;
  std::vector<double> probs_;
};

enum class JumpKind { gaussian, symmetric_pareto, discrete };

struct JumpLaw {
  JumpKind kind = JumpKind::gaussian;
  double alpha = 2.0;
  /// Gaussian: standard deviation. Pareto: tail constant, P(|xi| > n) = scale n^(-alpha).
  double scale = 1.0;
  double mean_shift = 0.0;
  std::vector<double> atoms;
  std::vector<double> probs;

  static JumpLaw gaussian(double stddev, double mean_shift = 0.0) {
    JumpLaw law;
    law.kind = JumpKind::gaussian;
    law.alpha = 2.0;
    law.scale = stddev;
    law.mean_shift = mean_shift;
    law.validate();
    return law;
  }

  static JumpLaw symmetric_pareto(double alpha, double scale) {
    JumpLaw law;
    law.kind = JumpKind::symmetric_pareto;
    law.alpha = alpha;
    law.scale = scale;
    law.validate();
    return law;
  }

  static JumpLaw discrete(double alpha, std::vector<double> atoms, std::vector<double> probs) {
    JumpLaw law;
    law.kind = JumpKind::discrete;
    law.alpha = alpha;
    law.scale = 0.0;
    law.atoms = std::move(atoms);
    law.probs = std::move(probs);
    law.validate();
    return law;
  }

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigError("jump index alpha must lie in (0,2]");
    switch (kind) {
      case JumpKind::gaussian:
        if (alpha != 2.0) throw ConfigError("gaussian jumps require alpha = 2");
        if (!(scale >= 0.0)) throw ConfigError("gaussian jump scale must be non-negative");
        break;
      case JumpKind::symmetric_pareto:
        if (!(alpha < 2.0)) throw ConfigError("pareto jumps require alpha < 2");
        if (!(scale > 0.0)) throw ConfigError("pareto jump scale must be positive");
        if (mean_shift != 0.0) throw ConfigError("mean_shift applies to gaussian jumps only");
        break;
      case JumpKind::discrete: {
        if (atoms.empty() || atoms.size() != probs.size()) {
          throw ConfigError("discrete jump law needs matching non-empty atoms and probs");
        }
        double total = 0.0;
        for (double p : probs) {
          if (!(p >= 0.0)) throw ConfigError("jump probabilities must be non-negative");
          total += p;
        }
        if (std::abs(total - 1.0) > 1e-12) throw ConfigError("jump probabilities must sum to 1");
        if (mean_shift != 0.0) throw ConfigError("mean_shift applies to gaussian jumps only");
        break;
      }
    }
  }

  /// Lower end of the pure power tail.
  double pareto_threshold() const { return std::pow(scale, 1.0 / alpha); }

  /// P(|xi| > n).
  double abs_tail(double n) const {
    switch (kind) {
      case JumpKind::symmetric_pareto:
        return n < pareto_threshold() ? 1.0 : scale * std::pow(n, -alpha);
      case JumpKind::gaussian: {
        if (scale == 0.0) return std::abs(mean_shift) > n ? 1.0 : 0.0;
        const double r2 = std::sqrt(2.0) * scale;
        return 0.5 * std::erfc((n - mean_shift) / r2) + 0.5 * std::erfc((n + mean_shift) / r2);
      }
      case JumpKind::discrete: {
        double mass = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
          if (std::abs(atoms[i]) > n) mass += probs[i];
        }
        return mass;
      }
    }
    return 0.0;
  }

  /// E|xi|^alpha; infinite for the pareto law.
  double alpha_moment() const {
    switch (kind) {
      case JumpKind::gaussian: return scale * scale + mean_shift * mean_shift;
      case JumpKind::symmetric_pareto: return INFINITY;
      case JumpKind::discrete: {
        double m = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) m += probs[i] * std::pow(std::abs(atoms[i]), alpha);
        return m;
      }
    }
    return INFINITY;
  }

  double mean() const {
    switch (kind) {
      case JumpKind::gaussian: return mean_shift;
      case JumpKind::symmetric_pareto: return 0.0;
      case JumpKind::discrete: {
        double m = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) m += probs[i] * atoms[i];
        return m;
      }
    }
    return 0.0;
  }

  double sample(Rng& rng) const {
    switch (kind) {
      case JumpKind::gaussian:
        return mean_shift + scale * rng.normal();
      case JumpKind::symmetric_pareto: {
        const double magnitude = std::pow(scale / rng.uniform(), 1.0 / alpha);
        return rng.uniform() < 0.5 ? -magnitude : magnitude;
      }
      case JumpKind::discrete: {
        const double u = rng.uniform();
        double cumulative = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
          cumulative += probs[i];
          if (u <= cumulative) return atoms[i];
        }
        return atoms.back();
      }
    }
    return 0.0;
  }
};

/// Product-form jump in R^d: independent components from the same law.
inline std::vector<double> sample_jump(const JumpLaw& law, Rng& rng, std::size_t dimension = 1) {
  std::vector<double> xi(dimension);
  for (auto& component : xi) component = law.sample(rng);
  return xi;
}

/// Smallest n with waits[0] + ... + waits[n-1] >= t; zero for t <= 0.
inline std::size_t counting_process(std::span<const double> waits, double t) {
  if (t <= 0.0) return 0;
  double total = 0.0;
  for (std::size_t n = 0; n < waits.size(); ++n) {
    if (!(waits[n] > 0.0)) throw DomainError("waiting times must be positive");
    total += waits[n];
    if (total >= t) return n + 1;
  }
  throw InsufficientPathError("waiting times sum to " + std::to_string(total) +
                              ", short of t = " + std::to_string(t));
}

}  // namespace ctrw
