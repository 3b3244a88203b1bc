#pragma once

// Estimators of P(W > z) and of the ratio P(W > z) / (1 - Phi(z)): plain Monte
// Carlo with common random numbers across the z grid, exponential tilting for
// fields that are linear in independent innovations, and exact enumeration.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "steinmd/bounds.hpp"
#include "steinmd/combperm.hpp"
#include "steinmd/errors.hpp"
#include "steinmd/gauss.hpp"
#include "steinmd/laws.hpp"
#include "steinmd/localdep.hpp"
#include "steinmd/montecarlo.hpp"
#include "steinmd/steinverify.hpp"

namespace steinmd {

enum class TailMethod { plain, tilt, exact };

inline const char* to_string(TailMethod m) {
  switch (m) {
    case TailMethod::plain: return "plain";
    case TailMethod::tilt: return "tilt";
    case TailMethod::exact: return "exact";
  }
  return "?";
}

struct TailEstimate {
  double z = 0.0;
  double p_hat = 0.0;
  double std_err = 0.0;
  double p_lo = 0.0;
  double p_hi = 0.0;
  double ratio = 0.0;
  double ratio_lo = 0.0;
  double ratio_hi = 0.0;
  TailMethod method = TailMethod::plain;
  std::size_t n_samples = 0;
  /// No sample hit the event; only the upper CI end is informative.
  bool low_info = false;
  /// Tilt parameter used (0 for plain and exact).
  double theta = 0.0;
};

namespace detail {

inline constexpr std::uint64_t tag_tail = 0x7a11;

inline void fill_ratio(TailEstimate& e) {
  const double q = gauss::tail(e.z);
  e.ratio = e.p_hat / q;
  e.ratio_lo = e.p_lo / q;
  e.ratio_hi = e.p_hi / q;
}

}  // namespace detail

/// Wilson score interval for k successes out of n at normal quantile zq.
inline std::pair<double, double> wilson_interval(double k, double n, double zq) {
  const double p = k / n;
  const double z2 = zq * zq;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = zq / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

/// Plain indicator means on a z grid from one shared sample set.
template <class Model>
std::vector<TailEstimate> estimate_tail_plain(const Model& model, const std::vector<double>& z_grid,
                                              const McOptions& opt) {
  if (opt.samples < 10000) throw domain_error("estimate_tail_plain: at least 1e4 samples are required");
  const auto blocks = run_blocks(opt, detail::tag_tail, [&](SplitMix64& rng, std::size_t count) {
    std::vector<std::size_t> hits(z_grid.size(), 0);
    for (std::size_t s = 0; s < count; ++s) {
      const double w = draw_statistic(model, rng);
      for (std::size_t k = 0; k < z_grid.size(); ++k) hits[k] += w > z_grid[k];
    }
    return hits;
  });
  const double n = static_cast<double>(opt.samples);
  std::vector<TailEstimate> out;
  for (std::size_t k = 0; k < z_grid.size(); ++k) {
    std::size_t h = 0;
    for (const auto& b : blocks) h += b[k];
    TailEstimate e;
    e.z = z_grid[k];
    e.method = TailMethod::plain;
    e.n_samples = opt.samples;
    e.p_hat = static_cast<double>(h) / n;
    e.std_err = std::sqrt(e.p_hat * (1.0 - e.p_hat) / n);
    std::tie(e.p_lo, e.p_hi) = wilson_interval(static_cast<double>(h), n, opt.ci_z);
    e.low_info = h == 0;
    detail::fill_ratio(e);
    out.push_back(e);
  }
  return out;
}

template <class Model>
TailEstimate estimate_tail_plain(const Model& model, double z, const McOptions& opt) {
  return estimate_tail_plain(model, std::vector<double>{z}, opt).front();
}

/// Conjugate change of measure for W = sum_e c_e eps_e with i.i.d. eps:
/// psi(theta) = sum_e Lambda(theta c_e), and theta solves psi'(theta) = z.
struct TiltPlan {
  struct Group {
    double coefficient;
    std::size_t count;
  };
  double z = 0.0;
  double theta = 0.0;
  double psi = 0.0;
  bool applicable = false;
  std::vector<Group> groups;
  InnovationLaw law = InnovationLaw::gaussian();

  double psi_at(double th) const {
    double s = 0.0;
    for (const auto& g : groups) s += static_cast<double>(g.count) * law.log_mgf(th * g.coefficient);
    return s;
  }
  double dpsi(double th) const {
    double s = 0.0;
    for (const auto& g : groups) s += static_cast<double>(g.count) * g.coefficient * law.log_mgf_derivative(th * g.coefficient);
    return s;
  }
  double d2psi(double th) const {
    double s = 0.0;
    for (const auto& g : groups)
      s += static_cast<double>(g.count) * g.coefficient * g.coefficient * law.log_mgf_second_derivative(th * g.coefficient);
    return s;
  }
};

/// Solves psi'(theta) = z by Newton steps safeguarded with bisection.
/// applicable is false when z lies outside the range of psi'.
inline TiltPlan make_tilt_plan(const LocalFieldModel& model, double z, double tol = 1e-8) {
  TiltPlan plan;
  plan.z = z;
  plan.law = model.innovation();
  std::map<double, std::size_t> counts;
  for (double c : model.coefficients())
    if (c != 0.0) ++counts[c];
  for (const auto& [c, k] : counts) plan.groups.push_back({c, k});
  if (z <= 0.0) {
    plan.applicable = true;  // no tilt needed; the estimator is plain
    return plan;
  }
  double cmax = 0.0;
  for (const auto& g : plan.groups) cmax = std::max(cmax, std::abs(g.coefficient));
  const double radius = plan.law.mgf_radius();
  double hi = std::isfinite(radius) ? radius / cmax : 1.0;
  if (std::isfinite(radius)) {
    hi *= 1.0 - 1e-12;
    if (!(plan.dpsi(hi) > z)) return plan;
  } else {
    int guard = 0;
    while (plan.dpsi(hi) <= z) {
      hi *= 2.0;
      if (++guard > 200) return plan;
    }
  }
  double lo = 0.0;
  double th = std::min(hi / 2.0, z / std::max(plan.d2psi(0.0), 1e-300));
  for (int it = 0; it < 500; ++it) {
    const double g = plan.dpsi(th) - z;
    if (std::abs(g) <= tol) break;
    if (g > 0.0) hi = th;
    else lo = th;
    const double d = plan.d2psi(th);
    double next = d > 0.0 ? th - g / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    th = next;
  }
  if (!(std::abs(plan.dpsi(th) - z) <= tol)) return plan;
  plan.theta = th;
  plan.psi = plan.psi_at(th);
  plan.applicable = true;
  return plan;
}

/// Importance-sampling estimate E_theta[1(W > z) exp(-theta W + psi(theta))]
/// with a normal confidence interval on the weighted mean.
inline TailEstimate estimate_tail_tilt(const LocalFieldModel& model, double z, const McOptions& opt) {
  if (opt.samples < 10000) throw domain_error("estimate_tail_tilt: at least 1e4 samples are required");
  const TiltPlan plan = make_tilt_plan(model, z);
  if (!plan.applicable) throw capability_error("estimate_tail_tilt: no tilt reaches this z for the model");
  std::vector<TiltedSampler> samplers;
  for (const auto& g : plan.groups) samplers.emplace_back(plan.law, plan.theta * g.coefficient);
  const auto blocks = run_blocks(opt, detail::tag_tail, [&](SplitMix64& rng, std::size_t count) {
    MeanAcc acc;
    for (std::size_t s = 0; s < count; ++s) {
      double w = 0.0;
      for (std::size_t gi = 0; gi < plan.groups.size(); ++gi) {
        const auto& sampler = samplers[gi];
        double part = 0.0;
        for (std::size_t k = 0; k < plan.groups[gi].count; ++k) part += sampler(rng);
        w += plan.groups[gi].coefficient * part;
      }
      acc.add(w > z ? std::exp(-plan.theta * w + plan.psi) : 0.0);
    }
    return acc;
  });
  MeanAcc total;
  for (const auto& b : blocks) total.merge(b);
  TailEstimate e;
  e.z = z;
  e.method = TailMethod::tilt;
  e.theta = plan.theta;
  e.n_samples = opt.samples;
  e.p_hat = total.mean();
  e.std_err = total.stderr_of_mean();
  e.p_lo = std::max(0.0, e.p_hat - opt.ci_z * e.std_err);
  e.p_hi = e.p_hat + opt.ci_z * e.std_err;
  e.low_info = total.sum == 0.0;
  detail::fill_ratio(e);
  return e;
}

inline std::vector<TailEstimate> estimate_tail_tilt(const LocalFieldModel& model, const std::vector<double>& z_grid,
                                                    const McOptions& opt) {
  std::vector<TailEstimate> out;
  for (double z : z_grid) out.push_back(estimate_tail_tilt(model, z, opt));
  return out;
}

inline std::vector<TailEstimate> estimate_tail_tilt(const PermArrayModel&, const std::vector<double>&,
                                                    const McOptions&) {
  throw capability_error("estimate_tail_tilt: permutation statistics have no factorized cumulant");
}

/// Exact P(W > z) by enumeration.
template <class Model>
std::vector<TailEstimate> exact_tail(const Model& model, const std::vector<double>& z_grid) {
  if (!stein_enumerable(model)) throw capability_error("exact_tail: model is not enumerable");
  const auto atoms = w_distribution(model);
  std::vector<TailEstimate> out;
  for (double z : z_grid) {
    TailEstimate e;
    e.z = z;
    e.method = TailMethod::exact;
    e.n_samples = atoms.size();  // support size of W
    // Sum from the top so small tails keep their relative accuracy.
    double p = 0.0;
    for (auto it = atoms.rbegin(); it != atoms.rend() && it->first > z; ++it) p += it->second;
    e.p_hat = e.p_lo = e.p_hi = std::min(1.0, p);
    detail::fill_ratio(e);
    out.push_back(e);
  }
  return out;
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw domain_error("spearman: need two equal-length samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

/// max(|ratio_lo - 1|, |ratio_hi - 1|): the CI-upper relative error.
inline double ci_upper_excess(const TailEstimate& e) {
  return std::max(std::abs(e.ratio_lo - 1.0), std::abs(e.ratio_hi - 1.0));
}

struct EnvelopeInput {
  double n = 0.0;
  double delta_n = 0.0;
  double range_limit = std::numeric_limits<double>::infinity();
  std::vector<TailEstimate> estimates;
};

struct EnvelopeFitRow {
  double n = 0.0;
  double c_hat = 0.0;
  double z_at_max = 0.0;
  std::size_t used = 0;
  std::vector<double> excluded_z;
};

struct EnvelopeFit {
  std::vector<EnvelopeFitRow> rows;
  /// max C_hat / min C_hat.
  double spread = 0.0;
  /// Spearman correlation of C_hat with n.
  double trend = 0.0;
};

/// C_hat(n) = max_z ci_upper_excess / (delta_n (1 + z^3)) over in-range z.
inline EnvelopeFit ratio_envelope_fit(const std::vector<EnvelopeInput>& inputs) {
  EnvelopeFit fit;
  std::vector<double> ns, cs;
  for (const auto& in : inputs) {
    EnvelopeFitRow row;
    row.n = in.n;
    for (const auto& e : in.estimates) {
      if (e.z > in.range_limit || e.z < 0.0) {
        row.excluded_z.push_back(e.z);
        continue;
      }
      const double c = ci_upper_excess(e) / (in.delta_n * (1.0 + e.z * e.z * e.z));
      if (row.used == 0 || c > row.c_hat) {
        row.c_hat = c;
        row.z_at_max = e.z;
      }
      ++row.used;
    }
    ns.push_back(row.n);
    cs.push_back(row.c_hat);
    fit.rows.push_back(row);
  }
  if (!cs.empty()) {
    const auto [lo, hi] = std::minmax_element(cs.begin(), cs.end());
    fit.spread = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
  }
  if (cs.size() >= 2) fit.trend = spearman(ns, cs);
  return fit;
}

/// One CSV row of the tail table.
struct TailRow {
  std::string model_id;
  double n = 0.0;
  TailEstimate estimate;
  double envelope = 0.0;
  bool in_range = true;
  std::uint64_t seed = 0;
};

inline const char* tail_csv_header() {
  return "model_id,n,z,method,p_hat,stderr,ratio,ratio_lo,ratio_hi,envelope,in_range,samples,seed";
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_tail_csv(std::ostream& os, const std::vector<TailRow>& rows) {
  os << tail_csv_header() << '\n';
  for (const auto& r : rows) {
    const auto& e = r.estimate;
    os << r.model_id << ',' << format_double(r.n) << ',' << format_double(e.z) << ',' << to_string(e.method) << ','
       << format_double(e.p_hat) << ',' << format_double(e.std_err) << ',' << format_double(e.ratio) << ','
       << format_double(e.ratio_lo) << ',' << format_double(e.ratio_hi) << ',' << format_double(r.envelope) << ','
       << (r.in_range ? "true" : "false") << ',' << e.n_samples << ',' << r.seed << '\n';
  }
}

}  // namespace steinmd
