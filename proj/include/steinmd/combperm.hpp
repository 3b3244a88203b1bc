#pragma once

// Combinatorial statistic W = sum_i X_{i, pi(i)} for a uniform permutation pi
// and an n x n array of independent entries X_ij = a_ij + c_ij xi_ij, with
// xi_ij i.i.d. centered and of unit variance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "steinmd/bounds.hpp"
#include "steinmd/errors.hpp"
#include "steinmd/kernel_function.hpp"
#include "steinmd/laws.hpp"
#include "steinmd/localdep.hpp"
#include "steinmd/random.hpp"

namespace steinmd {

/// Centered, unit-variance copy of `law`.
inline InnovationLaw standardized(const InnovationLaw& law) {
  switch (law.kind()) {
    case LawKind::discrete: {
      const auto& d = law.atoms();
      const double mu = d.mean();
      const double sd = std::sqrt(d.variance());
      if (!(sd > 0.0)) throw model_error("standardized: noise law has zero variance");
      std::vector<DiscreteDistribution::Atom> atoms;
      for (const auto& a : d.atoms()) atoms.push_back({(a.value - mu) / sd, a.prob});
      return InnovationLaw::discrete(DiscreteDistribution(std::move(atoms)));
    }
    case LawKind::uniform: return InnovationLaw::uniform();
    case LawKind::gaussian: return InnovationLaw::gaussian();
    case LawKind::laplace: return InnovationLaw::laplace();
  }
  return law;
}

class PermArrayModel {
 public:
  int n() const noexcept { return n_; }
  std::span<const double> means() const noexcept { return *means_; }
  double mean(int i, int j) const noexcept { return (*means_)[idx(i, j)]; }
  bool has_noise() const noexcept { return noise_.has_value(); }
  const InnovationLaw& noise() const { return noise_.value(); }
  /// Per-cell noise standard deviations c_ij; empty without noise.
  std::span<const double> noise_sd() const noexcept { return sd_; }
  /// Factor applied to the raw input by center_normalize.
  double scale() const noexcept { return scale_; }
  const std::string& label() const noexcept { return label_; }

  std::size_t idx(int i, int j) const noexcept {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j);
  }

  double max_abs_mean() const noexcept {
    double m = 0.0;
    for (double a : *means_) m = std::max(m, std::abs(a));
    return m;
  }

  /// (1/(n-1)) sum a^2 + (1/n) sum c^2; equals Var(W).
  double normalization() const noexcept {
    double sa = 0.0, sc = 0.0;
    for (double a : *means_) sa += a * a;
    for (double c : sd_) sc += c * c;
    return sa / (n_ - 1) + sc / n_;
  }

  /// Number of (pi, noise) outcomes; +inf when the noise is continuous.
  double outcome_count() const {
    double perms = std::tgamma(n_ + 1.0);
    if (!has_noise()) return perms;
    if (!noise_->is_discrete()) return std::numeric_limits<double>::infinity();
    std::size_t noisy = 0;
    for (double c : sd_) noisy += c != 0.0;
    return perms * std::pow(static_cast<double>(noise_->atoms().size()), static_cast<double>(noisy));
  }
  bool enumerable() const { return outcome_count() <= enumeration_cutoff; }

 private:
  friend PermArrayModel center_normalize(int, std::vector<double>, std::optional<InnovationLaw>,
                                         std::vector<double>, std::string);

  int n_ = 0;
  std::shared_ptr<const std::vector<double>> means_;
  std::optional<InnovationLaw> noise_;
  std::vector<double> sd_;
  double scale_ = 1.0;
  std::string label_;
};

/// Double-centers the raw means and rescales (a, c) jointly so that
/// (1/(n-1)) sum a^2 + (1/n) sum c^2 = 1. `raw_means` is row-major n x n;
/// `raw_sd` is empty (no noise), a single shared value, or n x n.
inline PermArrayModel center_normalize(int n, std::vector<double> raw_means,
                                       std::optional<InnovationLaw> noise = std::nullopt,
                                       std::vector<double> raw_sd = {}, std::string label = "") {
  if (n < 2) throw model_error("center_normalize: n must be >= 2");
  const std::size_t nn = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  if (raw_means.size() != nn) throw model_error("center_normalize: means must have n*n entries");
  for (double v : raw_means)
    if (!std::isfinite(v)) throw model_error("center_normalize: means must be finite");

  std::vector<double> row(static_cast<std::size_t>(n), 0.0), col(static_cast<std::size_t>(n), 0.0);
  double grand = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double v = raw_means[static_cast<std::size_t>(i * n + j)];
      row[static_cast<std::size_t>(i)] += v;
      col[static_cast<std::size_t>(j)] += v;
      grand += v;
    }
  for (auto& r : row) r /= n;
  for (auto& c : col) c /= n;
  grand /= static_cast<double>(nn);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      raw_means[static_cast<std::size_t>(i * n + j)] -= row[static_cast<std::size_t>(i)] + col[static_cast<std::size_t>(j)] - grand;

  PermArrayModel model;
  model.n_ = n;
  model.label_ = std::move(label);
  if (noise) {
    if (raw_sd.size() == 1) raw_sd.assign(nn, raw_sd.front());
    if (raw_sd.size() != nn) throw model_error("center_normalize: noise sd must be a scalar or n*n entries");
    for (double c : raw_sd)
      if (!std::isfinite(c) || c < 0.0) throw model_error("center_normalize: noise sd must be finite and >= 0");
    if (std::all_of(raw_sd.begin(), raw_sd.end(), [](double c) { return c == 0.0; })) {
      raw_sd.clear();
    } else {
      model.noise_ = standardized(*noise);
    }
  } else if (!raw_sd.empty()) {
    throw model_error("center_normalize: noise sd given without a noise law");
  }
  if (!model.noise_) raw_sd.clear();

  double sa = 0.0, sc = 0.0;
  for (double a : raw_means) sa += a * a;
  for (double c : raw_sd) sc += c * c;
  const double total = sa / (n - 1) + sc / n;
  if (!(total > 1e-300)) throw model_error("center_normalize: array is degenerate after centering");
  const double s = 1.0 / std::sqrt(total);
  for (auto& a : raw_means) a *= s;
  for (auto& c : raw_sd) c *= s;
  model.means_ = std::make_shared<const std::vector<double>>(std::move(raw_means));
  model.sd_ = std::move(raw_sd);
  model.scale_ = s;
  return model;
}

/// a_ij = ((i + j) mod n) - (n - 1)/2, normalized.
inline PermArrayModel latin_square_model(int n) {
  if (n < 2) throw model_error("latin_square_model: n must be >= 2");
  std::vector<double> a(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i * n + j)] = ((i + j) % n) - (n - 1) / 2.0;
  return center_normalize(n, std::move(a), std::nullopt, {}, "latin_square");
}

/// i.i.d. N(0,1) means projected onto doubly-centered arrays, normalized.
inline PermArrayModel gaussian_projected_model(int n, std::uint64_t seed) {
  if (n < 2) throw model_error("gaussian_projected_model: n must be >= 2");
  SplitMix64 rng = SplitMix64::stream(seed, 0x9a55, static_cast<std::uint64_t>(n));
  std::vector<double> a(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (auto& v : a) v = rng.normal();
  return center_normalize(n, std::move(a), std::nullopt, {}, "gaussian_projected");
}

struct PermSample {
  std::vector<int> pi;
  /// Realized array, row-major; equals the means when there is no noise.
  std::vector<double> x;
  double w = 0.0;
  int n = 0;

  double at(int i, int j) const noexcept {
    return x[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
  }
};

struct PairDelta {
  int i1;
  int i2;
  double delta;
};

inline void random_permutation(std::vector<int>& pi, SplitMix64& rng) {
  std::iota(pi.begin(), pi.end(), 0);
  for (std::size_t k = pi.size(); k > 1; --k) std::swap(pi[k - 1], pi[rng.below(k)]);
}

inline double statistic(const PermSample& s) {
  double w = 0.0;
  for (int i = 0; i < s.n; ++i) w += s.at(i, s.pi[static_cast<std::size_t>(i)]);
  return w;
}

/// Sample with a given permutation and realized array.
inline PermSample make_sample(const PermArrayModel& model, std::vector<int> pi, std::vector<double> x) {
  PermSample s;
  s.n = model.n();
  s.pi = std::move(pi);
  s.x = std::move(x);
  s.w = statistic(s);
  return s;
}

/// Draws pi by Fisher-Yates and realizes the full array.
inline PermSample sample_w(const PermArrayModel& model, SplitMix64& rng) {
  std::vector<int> pi(static_cast<std::size_t>(model.n()));
  random_permutation(pi, rng);
  std::vector<double> x(model.means().begin(), model.means().end());
  if (model.has_noise()) {
    const auto sd = model.noise_sd();
    for (std::size_t k = 0; k < x.size(); ++k)
      if (sd[k] != 0.0) x[k] += sd[k] * model.noise().sample(rng);
  }
  return make_sample(model, std::move(pi), std::move(x));
}

/// W alone; noise is realized only on the n cells W uses.
inline double draw_w(const PermArrayModel& model, SplitMix64& rng, std::vector<int>& scratch) {
  scratch.resize(static_cast<std::size_t>(model.n()));
  random_permutation(scratch, rng);
  double w = 0.0;
  for (int i = 0; i < model.n(); ++i) {
    const std::size_t k = model.idx(i, scratch[static_cast<std::size_t>(i)]);
    w += model.means()[k];
    if (model.has_noise() && model.noise_sd()[k] != 0.0) w += model.noise_sd()[k] * model.noise().sample(rng);
  }
  return w;
}

/// R = (1/n) sum_ij X_ij, the remainder for which the drift identity is exact.
inline double remainder_r(const PermSample& s) {
  double t = 0.0;
  for (double v : s.x) t += v;
  return t / s.n;
}

/// D for the ordered pair (i1, i2) under pi.
inline double pair_delta(const PermSample& s, int i1, int i2) {
  const int j1 = s.pi[static_cast<std::size_t>(i1)], j2 = s.pi[static_cast<std::size_t>(i2)];
  return s.at(i1, j1) + s.at(i2, j2) - s.at(i1, j2) - s.at(i2, j1);
}

/// |average of D over [n]_2 - 2/(n-1) (W - R)|.
inline double pair_drift_check(const PermSample& s) {
  double sum = 0.0;
  for (int i1 = 0; i1 < s.n; ++i1)
    for (int i2 = 0; i2 < s.n; ++i2)
      if (i1 != i2) sum += pair_delta(s, i1, i2);
  const double avg = sum / (static_cast<double>(s.n) * (s.n - 1));
  return std::abs(avg - 2.0 / (s.n - 1) * (s.w - remainder_r(s)));
}

/// W' after transposing pi at positions i1, i2; W - W' = D.
inline double exchanged_w(const PermSample& s, int i1, int i2) { return s.w - pair_delta(s, i1, i2); }

/// K^(u) = (1/4n) sum_{[n]_2} D {1(-D <= u <= 0) - 1(0 < u <= -D)}.
inline KernelFunction kernel_comb(const PermSample& s) {
  std::vector<KernelFunction::Piece> pieces;
  pieces.reserve(static_cast<std::size_t>(s.n) * static_cast<std::size_t>(s.n - 1));
  const double f = 1.0 / (4.0 * s.n);
  for (int i1 = 0; i1 < s.n; ++i1)
    for (int i2 = 0; i2 < s.n; ++i2) {
      if (i1 == i2) continue;
      const double d = pair_delta(s, i1, i2);
      if (d > 0.0) pieces.push_back({-d, 0.0, f * d});
      else if (d < 0.0) pieces.push_back({0.0, -d, -f * d});
    }
  return KernelFunction::from_pieces(pieces);
}

/// (1/4n) sum_{[n]_2} D^2, the integral of kernel_comb.
inline double k1_comb(const PermSample& s) {
  double t = 0.0;
  for (int i1 = 0; i1 < s.n; ++i1)
    for (int i2 = 0; i2 < s.n; ++i2)
      if (i1 != i2) {
        const double d = pair_delta(s, i1, i2);
        t += d * d;
      }
  return t / (4.0 * s.n);
}

/// Visits every (pi, noise) outcome with its probability.
template <class Visit>
void for_each_perm_outcome(const PermArrayModel& model, Visit&& visit) {
  if (!model.enumerable()) throw capability_error("PermArrayModel: outcome space too large to enumerate");
  const int n = model.n();
  std::vector<int> pi(static_cast<std::size_t>(n));
  std::iota(pi.begin(), pi.end(), 0);
  const double p_perm = 1.0 / std::tgamma(n + 1.0);
  std::vector<double> base(model.means().begin(), model.means().end());
  std::vector<std::size_t> noisy;
  if (model.has_noise())
    for (std::size_t k = 0; k < base.size(); ++k)
      if (model.noise_sd()[k] != 0.0) noisy.push_back(k);
  do {
    if (noisy.empty()) {
      visit(p_perm, static_cast<const PermSample&>(make_sample(model, pi, base)));
      continue;
    }
    const auto atoms = model.noise().atoms().atoms();
    std::vector<std::size_t> digit(noisy.size(), 0);
    while (true) {
      std::vector<double> x = base;
      double p = p_perm;
      for (std::size_t q = 0; q < noisy.size(); ++q) {
        x[noisy[q]] += model.noise_sd()[noisy[q]] * atoms[digit[q]].value;
        p *= atoms[digit[q]].prob;
      }
      visit(p, static_cast<const PermSample&>(make_sample(model, pi, std::move(x))));
      std::size_t q = 0;
      while (q < noisy.size() && ++digit[q] == atoms.size()) digit[q++] = 0;
      if (q == noisy.size()) break;
    }
  } while (std::next_permutation(pi.begin(), pi.end()));
}

/// b = max_ij E exp(alpha |X_ij|), exact for deterministic and discrete-noise cells.
inline MomentCertificate certify_array(const PermArrayModel& model, double alpha_n) {
  if (!(alpha_n >= 1.0)) throw domain_error("certify_array: alpha_n must be >= 1");
  MomentCertificate cert;
  cert.a_n = alpha_n;
  cert.b = 1.0;
  cert.exact = true;
  cert.method = CertificateMethod::analytic;
  const auto means = model.means();
  for (std::size_t k = 0; k < means.size(); ++k) {
    double v;
    const double c = model.has_noise() ? model.noise_sd()[k] : 0.0;
    if (c == 0.0) {
      v = std::exp(alpha_n * std::abs(means[k]));
    } else if (model.noise().is_discrete()) {
      v = 0.0;
      for (const auto& a : model.noise().atoms().atoms()) v += a.prob * std::exp(alpha_n * std::abs(means[k] + c * a.value));
      cert.method = CertificateMethod::enumerated;
    } else {
      // |a + c xi| <= |a| + c |xi|, so the bound is a product of known MGFs.
      const double m = model.noise().abs_mgf(alpha_n * c);
      if (!std::isfinite(m)) throw certificate_error("certify_array: E exp(alpha |X_ij|) diverges");
      v = std::exp(alpha_n * std::abs(means[k])) * m;
      cert.exact = false;
    }
    if (!std::isfinite(v)) throw certificate_error("certify_array: moment bound overflows");
    cert.b = std::max(cert.b, v);
  }
  return cert;
}

/// C delta_n (1 + z^3) with delta_n = b^2 (alpha^{-1} + n^{-1/2}) (theta^{-2} + theta^6),
/// theta = n^{1/2} / alpha; range 0 <= z <= c alpha^{1/3} min{1, b^{-1} (theta^{-1/2} + theta)^{-1}}.
inline BoundEnvelope theorem41_bound(double alpha_n, double b, double n, double z, double C = 1.0,
                                     double c = 1.0) {
  if (!(alpha_n >= 1.0) || !(b >= 1.0)) throw domain_error("theorem41_bound: alpha_n and b must be >= 1");
  if (!(n >= 1.0)) throw domain_error("theorem41_bound: n must be >= 1");
  if (!(z >= 0.0)) throw domain_error("theorem41_bound: z must be >= 0");
  const double theta = std::sqrt(n) / alpha_n;
  const double t2 = theta * theta;
  BoundEnvelope e;
  e.z = z;
  e.theorem = Theorem::comb;
  e.delta = b * b * (1.0 / alpha_n + 1.0 / std::sqrt(n)) * (1.0 / t2 + t2 * t2 * t2);
  e.envelope = C * e.delta * (1.0 + z * z * z);
  e.range_limit = c * std::cbrt(alpha_n) * std::min(1.0, 1.0 / (b * (1.0 / std::sqrt(theta) + theta)));
  e.in_range = z <= e.range_limit;
  return e;
}

/// alpha_n >= 1 minimizing delta_n when b(alpha) comes from certify_array.
inline std::pair<double, MomentCertificate> best_alpha(const PermArrayModel& model) {
  const double n = model.n();
  double best = 1.0;
  double best_delta = std::numeric_limits<double>::infinity();
  // delta_n is smooth and unimodal in log alpha here; a fine log grid suffices.
  const double hi = std::max(1.0, 4.0 * std::sqrt(n));
  for (int k = 0; k <= 400; ++k) {
    const double a = std::exp(std::log(hi) * k / 400.0);
    try {
      const double b = certify_array(model, a).b;
      const double d = theorem41_bound(a, b, n, 0.0).delta;
      if (d < best_delta) {
        best_delta = d;
        best = a;
      }
    } catch (const certificate_error&) {
      break;
    }
  }
  return {best, certify_array(model, best)};
}

}  // namespace steinmd
