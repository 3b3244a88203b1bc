#pragma once

// Innovation and noise laws: finite discrete distributions (which make exact
// enumeration possible) and three symmetric continuous laws. Each law knows
// its moment generating functions, which drive moment certificates and
// exponential tilting.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "steinmd/errors.hpp"
#include "steinmd/gauss.hpp"
#include "steinmd/kernel_function.hpp"
#include "steinmd/random.hpp"

namespace steinmd {

class DiscreteDistribution {
 public:
  struct Atom {
    double value;
    double prob;
  };

  DiscreteDistribution() : DiscreteDistribution(std::vector<Atom>{{0.0, 1.0}}) {}

  explicit DiscreteDistribution(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw model_error("DiscreteDistribution: no atoms");
    double total = 0.0;
    for (const auto& a : atoms_) {
      if (!std::isfinite(a.value)) throw model_error("DiscreteDistribution: non-finite atom");
      if (!(a.prob > 0.0)) throw model_error("DiscreteDistribution: probabilities must be > 0");
      total += a.prob;
    }
    if (std::abs(total - 1.0) > 1e-12) throw model_error("DiscreteDistribution: probabilities must sum to 1");
    cumulative_.resize(atoms_.size());
    double c = 0.0;
    for (std::size_t k = 0; k < atoms_.size(); ++k) cumulative_[k] = (c += atoms_[k].prob);
  }

  static DiscreteDistribution rademacher() { return DiscreteDistribution({{-1.0, 0.5}, {1.0, 0.5}}); }
  static DiscreteDistribution bernoulli(double p) { return DiscreteDistribution({{0.0, 1.0 - p}, {1.0, p}}); }

  std::span<const Atom> atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  double mean() const noexcept {
    double m = 0.0;
    for (const auto& a : atoms_) m += a.prob * a.value;
    return m;
  }
  double variance() const noexcept {
    const double m = mean();
    double v = 0.0;
    for (const auto& a : atoms_) v += a.prob * (a.value - m) * (a.value - m);
    return v;
  }

  /// The same law shifted to mean zero.
  DiscreteDistribution centered() const {
    const double m = mean();
    std::vector<Atom> out = atoms_;
    for (auto& a : out) a.value -= m;
    return DiscreteDistribution(std::move(out));
  }

  double sample(SplitMix64& rng) const noexcept {
    const double u = rng.uniform() * cumulative_.back();
    for (std::size_t k = 0; k + 1 < atoms_.size(); ++k)
      if (u < cumulative_[k]) return atoms_[k].value;
    return atoms_.back().value;
  }

 private:
  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
};

enum class LawKind { discrete, uniform, gaussian, laplace };

class InnovationLaw {
 public:
  static InnovationLaw discrete(DiscreteDistribution d) {
    InnovationLaw l(LawKind::discrete, 0.0);
    l.discrete_ = std::move(d);
    return l;
  }
  /// Uniform on [-half_width, half_width].
  static InnovationLaw uniform(double half_width = std::sqrt(3.0)) {
    if (!(half_width > 0.0)) throw model_error("uniform law: half width must be > 0");
    return InnovationLaw(LawKind::uniform, half_width);
  }
  static InnovationLaw gaussian(double sd = 1.0) {
    if (!(sd > 0.0)) throw model_error("gaussian law: sd must be > 0");
    return InnovationLaw(LawKind::gaussian, sd);
  }
  /// Laplace with scale b (density exp(-|x|/b) / (2b)); heavy enough that
  /// E exp(c|X|) diverges for c >= 1/b.
  static InnovationLaw laplace(double b = 1.0 / std::sqrt(2.0)) {
    if (!(b > 0.0)) throw model_error("laplace law: scale must be > 0");
    return InnovationLaw(LawKind::laplace, b);
  }

  LawKind kind() const noexcept { return kind_; }
  bool is_discrete() const noexcept { return kind_ == LawKind::discrete; }
  double parameter() const noexcept { return param_; }
  const DiscreteDistribution& atoms() const {
    if (!is_discrete()) throw capability_error("law has no atoms: " + name());
    return discrete_;
  }

  std::string name() const {
    switch (kind_) {
      case LawKind::discrete: return "discrete";
      case LawKind::uniform: return "uniform";
      case LawKind::gaussian: return "gaussian";
      case LawKind::laplace: return "laplace";
    }
    return "?";
  }

  double mean() const noexcept { return is_discrete() ? discrete_.mean() : 0.0; }

  double variance() const noexcept {
    switch (kind_) {
      case LawKind::discrete: return discrete_.variance();
      case LawKind::uniform: return param_ * param_ / 3.0;
      case LawKind::gaussian: return param_ * param_;
      case LawKind::laplace: return 2.0 * param_ * param_;
    }
    return 0.0;
  }

  /// Largest |x| in the support; +inf for unbounded laws.
  double max_abs() const noexcept {
    switch (kind_) {
      case LawKind::discrete: {
        double m = 0.0;
        for (const auto& a : discrete_.atoms()) m = std::max(m, std::abs(a.value));
        return m;
      }
      case LawKind::uniform: return param_;
      default: return std::numeric_limits<double>::infinity();
    }
  }

  double sample(SplitMix64& rng) const noexcept {
    switch (kind_) {
      case LawKind::discrete: return discrete_.sample(rng);
      case LawKind::uniform: return param_ * (2.0 * rng.uniform() - 1.0);
      case LawKind::gaussian: return param_ * rng.normal();
      case LawKind::laplace: {
        const double e = -std::log(rng.uniform_open());
        return (rng.uniform() < 0.5 ? -e : e) * param_;
      }
    }
    return 0.0;
  }

  /// E exp(c |X|) for c >= 0; +inf when it diverges.
  double abs_mgf(double c) const {
    switch (kind_) {
      case LawKind::discrete: {
        double s = 0.0;
        for (const auto& a : discrete_.atoms()) s += a.prob * std::exp(c * std::abs(a.value));
        return s;
      }
      case LawKind::uniform: return detail::expm1_over_x(c * param_);
      case LawKind::gaussian: {
        const double x = c * param_;
        return 2.0 * std::exp(0.5 * x * x) * gauss::cdf(x);
      }
      case LawKind::laplace:
        return c * param_ < 1.0 ? 1.0 / (1.0 - c * param_) : std::numeric_limits<double>::infinity();
    }
    return 0.0;
  }

  /// Upper end of the open interval of s on which E exp(s X) is finite.
  double mgf_radius() const noexcept {
    return kind_ == LawKind::laplace ? 1.0 / param_ : std::numeric_limits<double>::infinity();
  }

  /// Cumulant generating function log E exp(s X); +inf outside its domain.
  double log_mgf(double s) const {
    switch (kind_) {
      case LawKind::discrete: {
        double top = -std::numeric_limits<double>::infinity();
        for (const auto& a : discrete_.atoms()) top = std::max(top, s * a.value);
        double acc = 0.0;
        for (const auto& a : discrete_.atoms()) acc += a.prob * std::exp(s * a.value - top);
        return top + std::log(acc);
      }
      case LawKind::uniform: {
        const double x = std::abs(s * param_);
        if (x < 1e-3) return x * x / 6.0 - x * x * x * x / 180.0;
        // log(sinh(x)/x) = x - log(2x) + log1p(-exp(-2x))
        return x - std::log(2.0 * x) + std::log1p(-std::exp(-2.0 * x));
      }
      case LawKind::gaussian: return 0.5 * s * s * param_ * param_;
      case LawKind::laplace: {
        const double x = s * param_;
        if (std::abs(x) >= 1.0) return std::numeric_limits<double>::infinity();
        return -std::log1p(-x * x);
      }
    }
    return 0.0;
  }

  /// d/ds log E exp(s X), the mean of the tilted law.
  double log_mgf_derivative(double s) const {
    switch (kind_) {
      case LawKind::discrete: {
        double top = -std::numeric_limits<double>::infinity();
        for (const auto& a : discrete_.atoms()) top = std::max(top, s * a.value);
        double num = 0.0, den = 0.0;
        for (const auto& a : discrete_.atoms()) {
          const double e = a.prob * std::exp(s * a.value - top);
          num += a.value * e;
          den += e;
        }
        return num / den;
      }
      case LawKind::uniform: {
        const double h = param_;
        const double x = s * h;
        if (std::abs(x) < 1e-3) return h * x / 3.0 * (1.0 - x * x / 15.0);
        return h / std::tanh(x) - 1.0 / s;
      }
      case LawKind::gaussian: return s * param_ * param_;
      case LawKind::laplace: {
        const double b2 = param_ * param_;
        return 2.0 * b2 * s / (1.0 - b2 * s * s);
      }
    }
    return 0.0;
  }

  /// d^2/ds^2 log E exp(s X), the variance of the tilted law.
  double log_mgf_second_derivative(double s) const {
    switch (kind_) {
      case LawKind::discrete: {
        double top = -std::numeric_limits<double>::infinity();
        for (const auto& a : discrete_.atoms()) top = std::max(top, s * a.value);
        double m0 = 0.0, m1 = 0.0, m2 = 0.0;
        for (const auto& a : discrete_.atoms()) {
          const double e = a.prob * std::exp(s * a.value - top);
          m0 += e;
          m1 += a.value * e;
          m2 += a.value * a.value * e;
        }
        const double mu = m1 / m0;
        return std::max(0.0, m2 / m0 - mu * mu);
      }
      case LawKind::uniform: {
        const double h = param_;
        const double x = s * h;
        if (std::abs(x) < 1e-3) return h * h / 3.0 * (1.0 - x * x / 5.0);
        const double sh = std::sinh(x);
        return 1.0 / (s * s) - (sh == 0.0 ? 0.0 : h * h / (sh * sh));
      }
      case LawKind::gaussian: return param_ * param_;
      case LawKind::laplace: {
        const double b2 = param_ * param_;
        const double q = 1.0 - b2 * s * s;
        return 2.0 * b2 * (1.0 + b2 * s * s) / (q * q);
      }
    }
    return 0.0;
  }

 private:
  InnovationLaw(LawKind kind, double param) : kind_(kind), param_(param) {}

  LawKind kind_;
  double param_;
  DiscreteDistribution discrete_;
};

/// Sampler for the exponentially tilted law, density proportional to
/// exp(s x) times the base density.
class TiltedSampler {
 public:
  TiltedSampler(const InnovationLaw& law, double s) : law_(law), s_(s) {
    if (law.is_discrete()) {
      const double lm = law.log_mgf(s);
      double c = 0.0;
      for (const auto& a : law.atoms().atoms()) {
        values_.push_back(a.value);
        cumulative_.push_back(c += a.prob * std::exp(s * a.value - lm));
      }
    }
    if (law.kind() == LawKind::laplace && std::abs(s) * law.parameter() >= 1.0)
      throw domain_error("TiltedSampler: tilt outside the MGF domain");
  }

  double operator()(SplitMix64& rng) const noexcept {
    const double p = law_.parameter();
    switch (law_.kind()) {
      case LawKind::discrete: {
        const double u = rng.uniform() * cumulative_.back();
        for (std::size_t k = 0; k + 1 < values_.size(); ++k)
          if (u < cumulative_[k]) return values_[k];
        return values_.back();
      }
      case LawKind::uniform: {
        const double x = std::abs(s_) * p;
        double v;
        if (x < 1e-9) {
          v = p * (2.0 * rng.uniform() - 1.0);
        } else {
          // Inverse CDF written from the upper end: stable for any tilt.
          const double lift = std::exp(-2.0 * x);
          v = p + std::log(lift + rng.uniform_open() * (1.0 - lift)) / std::abs(s_);
          v = std::clamp(v, -p, p);
        }
        return s_ < 0.0 ? -v : v;
      }
      case LawKind::gaussian: return p * rng.normal() + s_ * p * p;
      case LawKind::laplace: {
        const double up = 1.0 / p - s_;    // rate on x > 0
        const double down = 1.0 / p + s_;  // rate on x < 0
        const double p_up = (1.0 / up) / (1.0 / up + 1.0 / down);
        const double e = -std::log(rng.uniform_open());
        return rng.uniform() < p_up ? e / up : -e / down;
      }
    }
    return 0.0;
  }

 private:
  InnovationLaw law_;
  double s_;
  std::vector<double> values_;
  std::vector<double> cumulative_;
};

}  // namespace steinmd
