#pragma once

// Locally dependent fields on a box of Z^d.
//
// X_i = scale * sum_{k in {0..m}^d} w_k eps_{i+k} for i.i.d. centered
// innovations eps. Sites at sup-distance > m share no innovation, so the
// field is m-dependent, and A_i = ball(i, m), B_i = ball(i, 2m) satisfy the
// two local-dependence conditions. scale is fixed so that Var(W) = 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "steinmd/bounds.hpp"
#include "steinmd/errors.hpp"
#include "steinmd/kernel_function.hpp"
#include "steinmd/laws.hpp"
#include "steinmd/random.hpp"

namespace steinmd {

/// Joint-outcome cutoff for exact enumeration oracles.
inline constexpr double enumeration_cutoff = 2e6;

enum class Boundary { open, periodic };

class LatticeIndexSet {
 public:
  explicit LatticeIndexSet(std::vector<int> shape) : shape_(std::move(shape)) {
    if (shape_.empty()) throw model_error("LatticeIndexSet: dimension must be >= 1");
    size_ = 1;
    for (int s : shape_) {
      if (s < 1) throw model_error("LatticeIndexSet: shape entries must be >= 1");
      size_ *= static_cast<std::size_t>(s);
    }
  }

  int dim() const noexcept { return static_cast<int>(shape_.size()); }
  std::span<const int> shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return size_; }

  std::vector<int> multi_index(std::size_t flat) const {
    std::vector<int> idx(shape_.size());
    for (std::size_t k = shape_.size(); k-- > 0;) {
      idx[k] = static_cast<int>(flat % static_cast<std::size_t>(shape_[k]));
      flat /= static_cast<std::size_t>(shape_[k]);
    }
    return idx;
  }

  std::size_t flat(std::span<const int> idx) const {
    std::size_t f = 0;
    for (std::size_t k = 0; k < shape_.size(); ++k) f = f * static_cast<std::size_t>(shape_[k]) + static_cast<std::size_t>(idx[k]);
    return f;
  }

  /// Sup-distance, wrapping around when periodic.
  int distance(std::size_t a, std::size_t b, Boundary boundary) const {
    const auto ia = multi_index(a), ib = multi_index(b);
    int d = 0;
    for (std::size_t k = 0; k < shape_.size(); ++k) {
      int diff = std::abs(ia[k] - ib[k]);
      if (boundary == Boundary::periodic) diff = std::min(diff, shape_[k] - diff);
      d = std::max(d, diff);
    }
    return d;
  }

 private:
  std::vector<int> shape_;
  std::size_t size_ = 0;
};

struct NeighborhoodSystem {
  std::vector<std::vector<std::size_t>> A;
  std::vector<std::vector<std::size_t>> B;
  std::vector<std::vector<std::size_t>> N;
  std::size_t kappa = 0;
};

namespace detail {

inline std::vector<std::vector<std::size_t>> balls(const LatticeIndexSet& J, int radius, Boundary boundary) {
  // Enumerate offsets in [-radius, radius]^d and map them onto the lattice.
  const int d = J.dim();
  const auto shape = J.shape();
  std::vector<std::vector<std::size_t>> out(J.size());
  std::vector<int> offset(static_cast<std::size_t>(d), -radius);
  std::vector<int> site(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < J.size(); ++i) {
    const auto base = J.multi_index(i);
    std::fill(offset.begin(), offset.end(), -radius);
    while (true) {
      bool inside = true;
      for (int k = 0; k < d; ++k) {
        int v = base[static_cast<std::size_t>(k)] + offset[static_cast<std::size_t>(k)];
        if (boundary == Boundary::periodic) {
          v = ((v % shape[static_cast<std::size_t>(k)]) + shape[static_cast<std::size_t>(k)]) % shape[static_cast<std::size_t>(k)];
        } else if (v < 0 || v >= shape[static_cast<std::size_t>(k)]) {
          inside = false;
          break;
        }
        site[static_cast<std::size_t>(k)] = v;
      }
      if (inside) out[i].push_back(J.flat(site));
      int k = d - 1;
      while (k >= 0 && ++offset[static_cast<std::size_t>(k)] > radius) offset[static_cast<std::size_t>(k--)] = -radius;
      if (k < 0) break;
    }
    std::sort(out[i].begin(), out[i].end());
    out[i].erase(std::unique(out[i].begin(), out[i].end()), out[i].end());
  }
  return out;
}

}  // namespace detail

/// A_i = ball(i, m), B_i = ball(i, 2m), N_i = {j : B_i and B_j intersect}.
inline NeighborhoodSystem radius_neighborhoods(const LatticeIndexSet& J, int m, Boundary boundary) {
  if (m < 0) throw model_error("radius_neighborhoods: m must be >= 0");
  NeighborhoodSystem nb;
  nb.A = detail::balls(J, m, boundary);
  nb.B = detail::balls(J, 2 * m, boundary);
  // j is in N_i iff some k lies in both B_i and B_j; B is symmetric, so
  // N_i is the union of B_k over k in B_i.
  std::vector<std::size_t> stamp(J.size(), J.size());
  nb.N.resize(J.size());
  for (std::size_t i = 0; i < J.size(); ++i) {
    for (std::size_t k : nb.B[i])
      for (std::size_t j : nb.B[k])
        if (stamp[j] != i) {
          stamp[j] = i;
          nb.N[i].push_back(j);
        }
    std::sort(nb.N[i].begin(), nb.N[i].end());
    nb.kappa = std::max(nb.kappa, nb.N[i].size());
  }
  return nb;
}

/// Declarative description of a moving-sum field.
struct FieldSpec {
  std::vector<int> shape{1};
  int m = 0;
  InnovationLaw innovation = InnovationLaw::discrete(DiscreteDistribution::rademacher());
  /// Weights over the forward window {0..m}^d in row-major order; empty means all ones.
  std::vector<double> weights;
  Boundary boundary = Boundary::open;
};

struct FieldRealization {
  std::vector<double> x;
  double w = 0.0;
};

class LocalFieldModel {
 public:
  struct Tap {
    std::size_t innovation;
    double weight;
  };

  const LatticeIndexSet& index_set() const noexcept { return index_set_; }
  const NeighborhoodSystem& neighborhoods() const noexcept { return nbhd_; }
  const InnovationLaw& innovation() const noexcept { return law_; }
  const FieldSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return index_set_.size(); }
  int m() const noexcept { return spec_.m; }
  double scale() const noexcept { return scale_; }
  std::size_t kappa() const noexcept { return nbhd_.kappa; }
  std::size_t innovation_count() const noexcept { return coeff_.size(); }

  /// Innovations feeding site i, weights already multiplied by scale.
  std::span<const Tap> taps(std::size_t i) const noexcept { return taps_[i]; }

  /// W = sum_e coefficient(e) * eps_e; coefficients include scale.
  std::span<const double> coefficients() const noexcept { return coeff_; }

  /// Var(W) from the coefficients; 1 by construction up to rounding.
  double variance_of_w() const noexcept {
    double s = 0.0;
    for (double c : coeff_) s += c * c;
    return s * law_.variance();
  }

  std::vector<double> field_from_innovations(std::span<const double> eps) const {
    std::vector<double> x(size(), 0.0);
    for (std::size_t i = 0; i < size(); ++i)
      for (const auto& t : taps_[i]) x[i] += t.weight * eps[t.innovation];
    return x;
  }

  double w_from_innovations(std::span<const double> eps) const noexcept {
    double w = 0.0;
    for (std::size_t e = 0; e < coeff_.size(); ++e) w += coeff_[e] * eps[e];
    return w;
  }

  /// Number of joint innovation outcomes; +inf for continuous laws.
  double outcome_count() const {
    if (!law_.is_discrete()) return std::numeric_limits<double>::infinity();
    return std::pow(static_cast<double>(law_.atoms().size()), static_cast<double>(innovation_count()));
  }
  bool enumerable() const { return outcome_count() <= enumeration_cutoff; }

  /// Visits every joint innovation outcome: visit(prob, realization).
  template <class Visit>
  void for_each_outcome(Visit&& visit) const {
    if (!enumerable()) throw capability_error("LocalFieldModel: outcome space too large to enumerate");
    const auto atoms = law_.atoms().atoms();
    const std::size_t E = innovation_count();
    std::vector<std::size_t> digit(E, 0);
    std::vector<double> eps(E);
    FieldRealization r;
    while (true) {
      double prob = 1.0;
      for (std::size_t e = 0; e < E; ++e) {
        eps[e] = atoms[digit[e]].value;
        prob *= atoms[digit[e]].prob;
      }
      r.x = field_from_innovations(eps);
      r.w = 0.0;
      for (double v : r.x) r.w += v;
      visit(prob, static_cast<const FieldRealization&>(r));
      std::size_t e = 0;
      while (e < E && ++digit[e] == atoms.size()) digit[e++] = 0;
      if (e == E) break;
    }
  }

  FieldRealization sample(SplitMix64& rng) const {
    std::vector<double> eps(innovation_count());
    for (auto& v : eps) v = law_.sample(rng);
    FieldRealization r;
    r.x = field_from_innovations(eps);
    for (double v : r.x) r.w += v;
    return r;
  }

  /// W alone, without forming the field.
  double sample_w(SplitMix64& rng) const noexcept {
    double w = 0.0;
    for (double c : coeff_) w += c * law_.sample(rng);
    return w;
  }

 private:
  friend LocalFieldModel build_mdep_field(const FieldSpec& spec);

  LocalFieldModel(FieldSpec spec, LatticeIndexSet J, NeighborhoodSystem nb, InnovationLaw law)
      : spec_(std::move(spec)), index_set_(std::move(J)), nbhd_(std::move(nb)), law_(std::move(law)) {}

  FieldSpec spec_;
  LatticeIndexSet index_set_;
  NeighborhoodSystem nbhd_;
  InnovationLaw law_;
  std::vector<std::vector<Tap>> taps_;
  std::vector<double> coeff_;
  double scale_ = 1.0;
};

/// Builds the moving-sum field of `spec`, centering discrete innovations and
/// rescaling so that Var(W) = 1.
inline LocalFieldModel build_mdep_field(const FieldSpec& spec) {
  if (spec.m < 0) throw model_error("build_mdep_field: m must be >= 0");
  LatticeIndexSet J(spec.shape);
  const int d = J.dim();
  std::size_t window = 1;
  for (int k = 0; k < d; ++k) window *= static_cast<std::size_t>(spec.m + 1);
  std::vector<double> weights = spec.weights;
  if (weights.empty()) weights.assign(window, 1.0);
  if (weights.size() != window)
    throw model_error("build_mdep_field: expected " + std::to_string(window) + " window weights");

  InnovationLaw law = spec.innovation.is_discrete()
                          ? InnovationLaw::discrete(spec.innovation.atoms().centered())
                          : spec.innovation;
  if (!(law.variance() > 0.0)) throw model_error("build_mdep_field: innovation law has zero variance");

  // Innovation lattice: the field box padded by m per axis, or the torus itself.
  std::vector<int> inner_shape(J.shape().begin(), J.shape().end());
  if (spec.boundary == Boundary::open)
    for (auto& s : inner_shape) s += spec.m;
  LatticeIndexSet innov(inner_shape);

  LocalFieldModel model(spec, J, radius_neighborhoods(J, spec.m, spec.boundary), law);
  model.taps_.resize(J.size());
  std::vector<int> off(static_cast<std::size_t>(d));
  std::vector<int> site(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < J.size(); ++i) {
    const auto base = J.multi_index(i);
    std::map<std::size_t, double> acc;  // merges wrapped duplicates on small tori
    for (std::size_t k = 0; k < window; ++k) {
      std::size_t rem = k;
      for (int a = d - 1; a >= 0; --a) {
        off[static_cast<std::size_t>(a)] = static_cast<int>(rem % static_cast<std::size_t>(spec.m + 1));
        rem /= static_cast<std::size_t>(spec.m + 1);
      }
      for (int a = 0; a < d; ++a) {
        int v = base[static_cast<std::size_t>(a)] + off[static_cast<std::size_t>(a)];
        if (spec.boundary == Boundary::periodic) v %= inner_shape[static_cast<std::size_t>(a)];
        site[static_cast<std::size_t>(a)] = v;
      }
      acc[innov.flat(site)] += weights[k];
    }
    for (const auto& [e, w] : acc)
      if (w != 0.0) model.taps_[i].push_back({e, w});
  }

  model.coeff_.assign(innov.size(), 0.0);
  for (const auto& site_taps : model.taps_)
    for (const auto& t : site_taps) model.coeff_[t.innovation] += t.weight;
  double ss = 0.0;
  double ww = 0.0;
  for (double c : model.coeff_) ss += c * c;
  for (double w : weights) ww += w * w;
  if (!(ss > 1e-24 * ww * static_cast<double>(J.size())))
    throw model_error("build_mdep_field: Var(W) is zero for this recipe");
  model.scale_ = 1.0 / std::sqrt(ss * law.variance());
  for (auto& site_taps : model.taps_)
    for (auto& t : site_taps) t.weight *= model.scale_;
  for (auto& c : model.coeff_) c *= model.scale_;
  return model;
}

/// Convenience overload mirroring the declarative fields.
inline LocalFieldModel build_mdep_field(int d, std::vector<int> shape, int m, InnovationLaw innovation,
                                        std::vector<double> weights = {},
                                        Boundary boundary = Boundary::open) {
  if (static_cast<int>(shape.size()) != d) throw model_error("build_mdep_field: shape does not match d");
  FieldSpec spec;
  spec.shape = std::move(shape);
  spec.m = m;
  spec.innovation = std::move(innovation);
  spec.weights = std::move(weights);
  spec.boundary = boundary;
  return build_mdep_field(spec);
}

inline FieldRealization sample_field(const LocalFieldModel& model, SplitMix64& rng) {
  return model.sample(rng);
}

/// Y_i = sum over A_i of X_j.
inline std::vector<double> neighborhood_sums(const LocalFieldModel& model, std::span<const double> x) {
  std::vector<double> y(model.size(), 0.0);
  const auto& A = model.neighborhoods().A;
  for (std::size_t i = 0; i < model.size(); ++i)
    for (std::size_t j : A[i]) y[i] += x[j];
  return y;
}

/// K^(u) = sum_i X_i {1(-Y_i <= u < 0) - 1(0 <= u <= -Y_i)}.
inline KernelFunction kernel_local(const LocalFieldModel& model, const FieldRealization& r) {
  const auto y = neighborhood_sums(model, r.x);
  std::vector<KernelFunction::Piece> pieces;
  pieces.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] > 0.0) pieces.push_back({-y[i], 0.0, r.x[i]});
    else if (y[i] < 0.0) pieces.push_back({0.0, -y[i], -r.x[i]});
  }
  return KernelFunction::from_pieces(pieces);
}

enum class CertificateMethod { analytic, enumerated, mc_upper };

inline const char* to_string(CertificateMethod m) {
  switch (m) {
    case CertificateMethod::analytic: return "analytic";
    case CertificateMethod::enumerated: return "enumerated";
    case CertificateMethod::mc_upper: return "mc_upper";
  }
  return "?";
}

/// Certifies max_i E exp(a_n T_i) <= b with T_i = sum over B_i of |X_j|.
struct MomentCertificate {
  double a_n = 1.0;
  double b = 1.0;
  CertificateMethod method = CertificateMethod::analytic;
  /// True when b equals the maximum exactly rather than bounding it.
  bool exact = false;
};

namespace detail {

// Local structure of T_i: for every j in B_i, its taps renumbered by first
// appearance. Sites with equal signatures have equal laws of T_i.
struct BlockSignature {
  std::vector<std::vector<std::pair<std::size_t, double>>> terms;
  std::size_t innovations = 0;
  auto operator<=>(const BlockSignature&) const = default;
};

inline BlockSignature block_signature(const LocalFieldModel& model, std::size_t i) {
  BlockSignature sig;
  std::map<std::size_t, std::size_t> local;
  for (std::size_t j : model.neighborhoods().B[i]) {
    std::vector<std::pair<std::size_t, double>> term;
    for (const auto& t : model.taps(j)) {
      auto [it, inserted] = local.try_emplace(t.innovation, local.size());
      term.emplace_back(it->second, t.weight);
    }
    sig.terms.push_back(std::move(term));
  }
  sig.innovations = local.size();
  return sig;
}

inline double block_value(const BlockSignature& sig, std::span<const double> eps) {
  double t = 0.0;
  for (const auto& term : sig.terms) {
    double x = 0.0;
    for (const auto& [e, w] : term) x += w * eps[e];
    t += std::abs(x);
  }
  return t;
}

}  // namespace detail

/// Computes b for the given a_n. Discrete laws are enumerated exactly over the
/// innovations feeding B_i when feasible; otherwise b is the product bound
///   E exp(a T_i) <= prod_e E exp(a |c_{i,e}| |eps_e|),  c_{i,e} = sum |weights|,
/// which is exact when every B_i holds a single tap. mc_upper forces a Monte
/// Carlo mean plus 4 standard errors instead.
inline MomentCertificate certify_moments(const LocalFieldModel& model, double a_n,
                                         CertificateMethod preferred = CertificateMethod::enumerated,
                                         std::size_t mc_samples = 100000, std::uint64_t seed = 1) {
  if (!(a_n >= 1.0)) throw domain_error("certify_moments: a_n must be >= 1");
  const auto& law = model.innovation();
  MomentCertificate cert;
  cert.a_n = a_n;
  cert.b = 1.0;
  std::map<detail::BlockSignature, double> cache;
  bool all_exact = true;
  CertificateMethod used = preferred;
  for (std::size_t i = 0; i < model.size(); ++i) {
    auto sig = detail::block_signature(model, i);
    if (auto it = cache.find(sig); it != cache.end()) continue;
    double value = 0.0;
    const double outcomes = law.is_discrete()
                                ? std::pow(static_cast<double>(law.atoms().size()), static_cast<double>(sig.innovations))
                                : std::numeric_limits<double>::infinity();
    if (preferred == CertificateMethod::mc_upper) {
      SplitMix64 rng = SplitMix64::stream(seed, 0xce57, i);
      std::vector<double> eps(sig.innovations);
      double s = 0.0, s2 = 0.0;
      for (std::size_t k = 0; k < mc_samples; ++k) {
        for (auto& v : eps) v = law.sample(rng);
        const double e = std::exp(a_n * detail::block_value(sig, eps));
        s += e;
        s2 += e * e;
      }
      const double mean = s / static_cast<double>(mc_samples);
      const double var = std::max(0.0, s2 / static_cast<double>(mc_samples) - mean * mean);
      value = mean + 4.0 * std::sqrt(var / static_cast<double>(mc_samples));
      all_exact = false;
    } else if (preferred == CertificateMethod::enumerated && outcomes <= enumeration_cutoff) {
      const auto atoms = law.atoms().atoms();
      std::vector<std::size_t> digit(sig.innovations, 0);
      std::vector<double> eps(sig.innovations);
      while (true) {
        double p = 1.0;
        for (std::size_t e = 0; e < sig.innovations; ++e) {
          eps[e] = atoms[digit[e]].value;
          p *= atoms[digit[e]].prob;
        }
        value += p * std::exp(a_n * detail::block_value(sig, eps));
        std::size_t e = 0;
        while (e < sig.innovations && ++digit[e] == atoms.size()) digit[e++] = 0;
        if (e == sig.innovations) break;
      }
      used = CertificateMethod::enumerated;
    } else {
      std::vector<double> c(sig.innovations, 0.0);
      std::size_t taps = 0;
      for (const auto& term : sig.terms)
        for (const auto& [e, w] : term) {
          c[e] += std::abs(w);
          ++taps;
        }
      value = 1.0;
      for (double ce : c) {
        const double mgf = law.abs_mgf(a_n * ce);
        if (!std::isfinite(mgf))
          throw certificate_error("certify_moments: E exp(a_n |eps|) diverges for this innovation law");
        value *= mgf;
      }
      if (!std::isfinite(value)) throw certificate_error("certify_moments: moment bound overflows");
      if (taps != 1) all_exact = false;
      used = CertificateMethod::analytic;
    }
    cache.emplace(std::move(sig), value);
    cert.b = std::max(cert.b, value);
  }
  cert.method = used;
  cert.exact = all_exact;
  return cert;
}

/// C delta_n (1 + z^3) with delta_n = kappa^2 a_n^{-1} (1 + theta_n^6),
/// theta_n = b^{1/2} n^{1/2} a_n^{-1}; range 0 <= z <= c a_n^{1/3} min{1, kappa^{-1/3} (1 + theta_n)^{-2/3}}.
inline BoundEnvelope theorem21_bound(double kappa, double a_n, double b, double n, double z,
                                     double C = 1.0, double c = 1.0) {
  if (!(kappa >= 1.0) || !(a_n >= 1.0) || !(b >= 1.0)) throw domain_error("theorem21_bound: kappa, a_n, b must be >= 1");
  if (!(n >= 1.0)) throw domain_error("theorem21_bound: n must be >= 1");
  if (!(z >= 0.0)) throw domain_error("theorem21_bound: z must be >= 0");
  const double theta = std::sqrt(b * n) / a_n;
  const double t3 = theta * theta * theta;
  BoundEnvelope e;
  e.z = z;
  e.theorem = Theorem::local;
  e.delta = kappa * kappa / a_n * (1.0 + t3 * t3);
  e.envelope = C * e.delta * (1.0 + z * z * z);
  e.range_limit = c * std::cbrt(a_n) * std::min(1.0, std::cbrt(1.0 / kappa) * std::pow(1.0 + theta, -2.0 / 3.0));
  e.in_range = z <= e.range_limit;
  return e;
}

}  // namespace steinmd
