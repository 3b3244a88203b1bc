#pragma once

// Smoothed truncated exponential Psi_{beta,t}, the smoothed indicator
// h_{z,eps}, and the closed-form solution of the Stein equation
//
//     f'(w) - w f(w) = h_{z,eps}(w) - E h_{z,eps}(Z).

#include <cmath>
#include <string>

#include "steinmd/errors.hpp"
#include "steinmd/gauss.hpp"

namespace steinmd {

/// Parameters (beta, t) of Psi_{beta,t}: exp(t w) + 1 up to the knee beta,
/// reflected so that it saturates at 2 exp(t beta) + 1 beyond it.
class SmoothedExp {
 public:
  SmoothedExp(double beta, double t) : beta_(beta), t_(t) {
    if (!(beta >= 0.0) || !(t >= 0.0) || !std::isfinite(beta) || !std::isfinite(t))
      throw domain_error("SmoothedExp: beta and t must be finite and >= 0");
  }
  double beta() const noexcept { return beta_; }
  double t() const noexcept { return t_; }

 private:
  double beta_;
  double t_;
};

inline double psi(const SmoothedExp& se, double w) {
  const double b = se.beta(), t = se.t();
  if (w <= b) return std::exp(t * w) + 1.0;
  return 2.0 * std::exp(t * b) - std::exp(t * (2.0 * b - w)) + 1.0;
}

/// d/dw Psi.
inline double psi_dw(const SmoothedExp& se, double w) {
  const double b = se.beta(), t = se.t();
  if (w <= b) return t * std::exp(t * w);
  return t * std::exp(t * (2.0 * b - w));
}

/// d^2/dw^2 Psi, branch formulas; the two sides disagree at w = beta.
inline double psi_dww(const SmoothedExp& se, double w) {
  const double b = se.beta(), t = se.t();
  if (w <= b) return t * t * std::exp(t * w);
  return -t * t * std::exp(t * (2.0 * b - w));
}

/// d/dt Psi.
inline double psi_dt(const SmoothedExp& se, double w) {
  const double b = se.beta(), t = se.t();
  if (w <= b) return w * std::exp(t * w);
  const double r = 2.0 * b - w;
  return 2.0 * b * std::exp(t * b) - r * std::exp(t * r);
}

/// h_{z,eps}: 1 on (-inf, z], 0 on (z + eps, inf), linear in between.
class SteinTestFn {
 public:
  SteinTestFn(double z, double eps) : z_(z), eps_(eps) {
    if (!std::isfinite(z) || !(z >= 0.0)) throw domain_error("SteinTestFn: z must be finite and >= 0");
    if (!std::isfinite(eps) || !(eps > 0.0)) throw domain_error("SteinTestFn: eps must be > 0");
  }
  double z() const noexcept { return z_; }
  double eps() const noexcept { return eps_; }

  double operator()(double w) const noexcept {
    if (w <= z_) return 1.0;
    if (w > z_ + eps_) return 0.0;
    return 1.0 + (z_ - w) / eps_;
  }
  /// Derivative away from the kinks at z and z + eps.
  double derivative(double w) const noexcept {
    return (w > z_ && w < z_ + eps_) ? -1.0 / eps_ : 0.0;
  }

 private:
  double z_;
  double eps_;
};

namespace detail {

// I(a, b) = int_0^1 (1 - y) exp(-a y - b y^2) dy by Taylor series of the
// exponential; used for a + b <= 2 where the closed form cancels badly.
inline double one_minus_y_gauss_moment(double a, double b) {
  double p_prev = 0.0;  // P_{j-1}
  double p = 1.0;       // P_j
  double sum = 0.5;     // P_0 / (1 * 2)
  for (int j = 0; j < 120; ++j) {
    const double p_next = (-a * p - 2.0 * b * p_prev) / (j + 1);
    const double term = p_next / ((j + 2.0) * (j + 3.0));
    sum += term;
    p_prev = p;
    p = p_next;
    // Odd coefficients vanish when a = 0, so require two small ones in a row.
    if (j > 2 && std::abs(term) < 1e-18 * std::abs(sum) && std::abs(p) < 1e-18 && std::abs(p_prev) < 1e-18) break;
  }
  return sum;
}

}  // namespace detail

/// upsilon(x) / phi(low) where upsilon(x) = int_0^x s phi(c - eps s) ds,
/// c = z + eps and low = c - eps x. Stays finite when phi(low) underflows.
inline double upsilon_over_pdf(double c, double low, double eps) {
  const double d = c - low;
  if (d <= 0.0) return 0.0;
  const double x = d / eps;
  const double a = low * d;
  const double b = 0.5 * d * d;
  if (a >= 0.0 && a + b <= 2.0) return x * x * detail::one_minus_y_gauss_moment(a, b);
  const double rho = std::exp(-0.5 * d * (c + low));
  const double bracket =
      c * (gauss::mills_ratio(low) - rho * gauss::mills_ratio(c)) - 1.0 + rho;
  return bracket / (eps * eps);
}

/// upsilon(x) = (2 pi)^{-1/2} int_0^x s exp(-(z + eps - eps s)^2 / 2) ds.
inline double upsilon(double z, double eps, double x) {
  const double c = z + eps;
  const double low = c - eps * x;
  return gauss::pdf(low) * upsilon_over_pdf(c, low, eps);
}

/// Solution f_{z,eps} of the Stein equation for h_{z,eps}, with g(w) = w f(w).
class SteinSolution {
 public:
  SteinSolution(double z, double eps) : h_(z, eps) {
    const double scaled = eps * gauss::pdf(z) * upsilon_over_pdf(z + eps, z, eps);
    nh_ = gauss::cdf(z) + scaled;
    one_minus_nh_ = gauss::tail(z) - scaled;
  }

  double z() const noexcept { return h_.z(); }
  double eps() const noexcept { return h_.eps(); }
  const SteinTestFn& test_fn() const noexcept { return h_; }

  /// E h_{z,eps}(Z) = Phi(z) + eps upsilon(1).
  double nh() const noexcept { return nh_; }
  /// 1 - Nh, formed from the upper tail to keep relative accuracy for large z.
  double one_minus_nh() const noexcept { return one_minus_nh_; }

  double f(double w) const {
    const double z = h_.z(), eps = h_.eps();
    if (w <= z) return gauss::mills_ratio(-w) * one_minus_nh_;
    const double m = gauss::mills_ratio(w);
    if (w > z + eps) return m * nh_;
    return m * nh_ - eps * upsilon_over_pdf(z + eps, w, eps);
  }

  /// f'(w) from the Stein equation itself.
  double fprime(double w) const { return w * f(w) + h_(w) - nh_; }

  /// g'(w) for g(w) = w f(w).
  double gprime(double w) const {
    const double z = h_.z(), eps = h_.eps();
    const double q = 1.0 + w * w;
    if (w <= z) return (q * gauss::mills_ratio(-w) + w) * one_minus_nh_;
    const double right = (q * gauss::mills_ratio(w) - w) * nh_;
    if (w > z + eps) return right;
    return right - eps * q * upsilon_over_pdf(z + eps, w, eps) + w * (z - w + eps) / eps;
  }

 private:
  SteinTestFn h_;
  double nh_ = 0.0;
  double one_minus_nh_ = 0.0;
};

inline double nh(double z, double eps) { return SteinSolution(z, eps).nh(); }
inline double f_eval(const SteinSolution& sol, double w) { return sol.f(w); }
inline double gprime_eval(const SteinSolution& sol, double w) { return sol.gprime(w); }

}  // namespace steinmd
