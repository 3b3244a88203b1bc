#pragma once

// Bound calculators: the general relative-error bound under condition (A1),
// the parameter plumbing (tau, z0, delta(z)) it needs, the Heinrich
// comparator, and "shape-only" (r, tau) presets for the two applications.
//
// None of the absolute constants are known. Every calculator takes them as
// explicit arguments (default 1) and reports them back in its output.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "steinmd/errors.hpp"

namespace steinmd {

enum class Theorem { general, local, comb, heinrich };

inline const char* to_string(Theorem t) {
  switch (t) {
    case Theorem::general: return "general";
    case Theorem::local: return "local";
    case Theorem::comb: return "comb";
    case Theorem::heinrich: return "heinrich";
  }
  return "?";
}

struct BoundEnvelope {
  double z = 0.0;
  double envelope = 0.0;
  bool in_range = false;
  Theorem theorem = Theorem::general;
  /// Upper end of the z-range in which the bound is asserted.
  double range_limit = 0.0;
  /// The rate delta_n (applications) or delta(z) (general bound).
  double delta = 0.0;
};

/// Inputs of the general bound. r[j], tau[j] for j = 0..4.
struct GeneralParams {
  std::array<double, 5> r{};
  std::array<double, 5> tau{};
  double m0 = 1.0;
  double rho = 0.0;
  double c_abs = 1.0;
  /// Free-text provenance, e.g. "shape-only: localdep, C_i = 1".
  std::string label;

  void validate() const {
    for (int j = 0; j < 5; ++j) {
      if (!std::isfinite(r[j]) || r[j] < 0.0) throw domain_error("GeneralParams: r_j must be finite and >= 0");
      if (!std::isfinite(tau[j]) || tau[j] < 0.0) throw domain_error("GeneralParams: tau_j must be finite and >= 0");
    }
    if (!std::isfinite(m0) || !(m0 > 0.0)) throw domain_error("GeneralParams: m0 must be > 0");
    if (!std::isfinite(rho) || rho < 0.0) throw domain_error("GeneralParams: rho must be >= 0");
    if (!std::isfinite(c_abs) || !(c_abs > 0.0)) throw domain_error("GeneralParams: C must be > 0");
  }
};

/// tau = max{tau0 + 1, tau1 + 2, tau2 + 3, tau3 + 1, tau4 + 1}.
inline double tau_of(const GeneralParams& p) {
  return std::max({p.tau[0] + 1.0, p.tau[1] + 2.0, p.tau[2] + 3.0, p.tau[3] + 1.0, p.tau[4] + 1.0});
}

/// z0 = min{m0, 0.02 e^{-tau/2} (r0^{1/(tau0+1)} + r1^{1/(tau1+2)} + r2^{1/(tau2+3)})^{-1}}.
inline double z0_of(const GeneralParams& p) {
  const double roots = std::pow(p.r[0], 1.0 / (p.tau[0] + 1.0)) +
                       std::pow(p.r[1], 1.0 / (p.tau[1] + 2.0)) +
                       std::pow(p.r[2], 1.0 / (p.tau[2] + 3.0));
  if (roots <= 0.0) return p.m0;
  return std::min(p.m0, 0.02 * std::exp(-tau_of(p) / 2.0) / roots);
}

/// delta(z) = r0(1+z^{tau0+1}) + r1(1+z^{tau1+2}) + r2(1+z^{tau2+3})
///          + r3(1+z^{tau3+1}) + r4^{1/2}(1+z^{tau4+1}).
inline double delta_of(const GeneralParams& p, double z) {
  if (!(z >= 0.0)) throw domain_error("delta_of: z must be >= 0");
  return p.r[0] * (1.0 + std::pow(z, p.tau[0] + 1.0)) +
         p.r[1] * (1.0 + std::pow(z, p.tau[1] + 2.0)) +
         p.r[2] * (1.0 + std::pow(z, p.tau[2] + 3.0)) +
         p.r[3] * (1.0 + std::pow(z, p.tau[3] + 1.0)) +
         std::sqrt(p.r[4]) * (1.0 + std::pow(z, p.tau[4] + 1.0));
}

/// Set when z0 >= 8 but max{r0, r1, r2} exceeds 0.02 e^{-tau/2}; such a
/// parameter set is internally inconsistent with the z0 definition.
inline bool z0_consistency_violated(const GeneralParams& p) {
  if (z0_of(p) < 8.0) return false;
  return std::max({p.r[0], p.r[1], p.r[2]}) > 0.02 * std::exp(-tau_of(p) / 2.0);
}

/// (4/delta(m0) + C (150^tau + rho) e^{tau^2/2}) delta(z), asserted for 0 <= z <= z0.
inline double general_prefactor(const GeneralParams& p) {
  const double tau = tau_of(p);
  const double dm0 = delta_of(p, p.m0);
  if (dm0 == 0.0) return 0.0;
  return 4.0 / dm0 + p.c_abs * (std::pow(150.0, tau) + p.rho) * std::exp(tau * tau / 2.0);
}

inline BoundEnvelope general_bound(const GeneralParams& p, double z) {
  p.validate();
  if (!(z >= 0.0) || !std::isfinite(z)) throw domain_error("general_bound: z must be finite and >= 0");
  BoundEnvelope e;
  e.z = z;
  e.theorem = Theorem::general;
  e.range_limit = z0_of(p);
  e.in_range = z <= e.range_limit;
  e.delta = delta_of(p, z);
  // All r_j = 0: W is exactly standard normal, the envelope is 0.
  e.envelope = e.delta == 0.0 ? 0.0 : general_prefactor(p) * e.delta;
  return e;
}

/// Comparator C n a_n^{-3} (1 + z^3), valid for 0 <= z <= c a_n n^{-1/3}.
inline BoundEnvelope heinrich_bound(double n, double a_n, double z, double C = 1.0, double c = 1.0) {
  if (!(n >= 1.0) || !(a_n >= 1.0)) throw domain_error("heinrich_bound: n and a_n must be >= 1");
  if (!(z >= 0.0)) throw domain_error("heinrich_bound: z must be >= 0");
  BoundEnvelope e;
  e.z = z;
  e.theorem = Theorem::heinrich;
  e.delta = n / (a_n * a_n * a_n);
  e.envelope = C * e.delta * (1.0 + z * z * z);
  e.range_limit = c * a_n * std::cbrt(1.0 / n);
  e.in_range = z <= e.range_limit;
  return e;
}

/// Application-side constants C_0..C_5; unknown, so 1 unless the caller knows better.
struct PresetConstants {
  std::array<double, 6> c{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
};

/// (r, tau, rho, m0) for locally dependent sums with theta = b^{1/2} n^{1/2} a_n^{-1}.
inline GeneralParams localdep_preset(double kappa, double a_n, double b, double n,
                                     const PresetConstants& k = {}) {
  const double theta = std::sqrt(b * n) / a_n;
  const double q = kappa * theta * theta + 1.0;
  GeneralParams p;
  p.r = {0.0, k.c[1] * kappa * theta * (theta + 1.0) / a_n, k.c[2] * theta * theta / a_n,
         k.c[3] * q * q / a_n, k.c[4] * q * q / (a_n * a_n)};
  p.tau = {0.0, 1.0, 0.0, 2.0, 2.0};
  p.rho = k.c[5] * theta * theta;
  p.m0 = std::min(std::cbrt(a_n) / 4.0, a_n / 16.0);
  p.label = "shape-only: locally dependent sum, absolute constants set to the caller's values";
  return p;
}

/// (r, tau, rho, m0) for the combinatorial statistic with theta = n^{1/2} alpha_n^{-1}.
inline GeneralParams comb_preset(double alpha_n, double b, double n, const PresetConstants& k = {}) {
  const double theta = std::sqrt(n) / alpha_n;
  const double q = theta * theta + 1.0;
  GeneralParams p;
  p.r = {k.c[0] * b / alpha_n,
         k.c[1] * b * ((theta * theta + theta) / alpha_n + 1.0 / std::sqrt(n)),
         k.c[2] * b * theta * theta / alpha_n,
         2.0 * k.c[3] * b * b * q * q / alpha_n,
         2.0 * k.c[4] * b * b * q * q / (alpha_n * alpha_n)};
  p.tau = {0.0, 0.0, 0.0, 2.0, 2.0};
  p.rho = k.c[5] * b * theta * theta;
  p.m0 = std::cbrt(alpha_n) / 64.0;
  p.label = "shape-only: combinatorial statistic, absolute constants set to the caller's values";
  return p;
}

/// Berry-Esseen right-hand side 4 r0 + 4 r1 + 28 r2 + 20 r3 + 13 r4^{1/2}.
inline double berry_esseen_rhs(const std::array<double, 5>& r) {
  return 4.0 * r[0] + 4.0 * r[1] + 28.0 * r[2] + 20.0 * r[3] + 13.0 * std::sqrt(r[4]);
}

}  // namespace steinmd
