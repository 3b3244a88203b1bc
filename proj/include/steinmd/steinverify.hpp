#pragma once

// Numerical checks of the Stein identity
//     E{W f(W)} = E int f'(W + u) K^(u) du + E{R f(W)}
// and of the functionals entering condition (A1), by exact enumeration or by
// Monte Carlo over any model that provides the three adapter functions
// stein_enumerable, for_each_stein_outcome and sample_stein_outcome.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "steinmd/bounds.hpp"
#include "steinmd/combperm.hpp"
#include "steinmd/errors.hpp"
#include "steinmd/gauss.hpp"
#include "steinmd/kernel_function.hpp"
#include "steinmd/localdep.hpp"
#include "steinmd/montecarlo.hpp"
#include "steinmd/smoothfun.hpp"

namespace steinmd {

struct SteinOutcome {
  double w = 0.0;
  double r = 0.0;
  KernelFunction kernel;
};

// Adapters for the locally dependent field (R = 0).
inline bool stein_enumerable(const LocalFieldModel& m) { return m.enumerable(); }

template <class Visit>
void for_each_stein_outcome(const LocalFieldModel& m, Visit&& visit) {
  m.for_each_outcome([&](double p, const FieldRealization& r) {
    visit(p, SteinOutcome{r.w, 0.0, kernel_local(m, r)});
  });
}

inline SteinOutcome sample_stein_outcome(const LocalFieldModel& m, SplitMix64& rng) {
  const auto r = m.sample(rng);
  return {r.w, 0.0, kernel_local(m, r)};
}

inline double draw_statistic(const LocalFieldModel& m, SplitMix64& rng) { return m.sample_w(rng); }

// Adapters for the combinatorial statistic.
inline bool stein_enumerable(const PermArrayModel& m) { return m.enumerable(); }

template <class Visit>
void for_each_stein_outcome(const PermArrayModel& m, Visit&& visit) {
  for_each_perm_outcome(m, [&](double p, const PermSample& s) {
    visit(p, SteinOutcome{s.w, remainder_r(s), kernel_comb(s)});
  });
}

inline SteinOutcome sample_stein_outcome(const PermArrayModel& m, SplitMix64& rng) {
  const auto s = sample_w(m, rng);
  return {s.w, remainder_r(s), kernel_comb(s)};
}

inline double draw_statistic(const PermArrayModel& m, SplitMix64& rng) {
  thread_local std::vector<int> scratch;
  return draw_w(m, rng, scratch);
}

/// Atoms (w, probability) of W, sorted, with coincident values merged.
template <class Model>
std::vector<std::pair<double, double>> w_distribution(const Model& model) {
  std::vector<std::pair<double, double>> atoms;
  for_each_stein_outcome(model, [&](double p, const SteinOutcome& o) { atoms.emplace_back(o.w, p); });
  std::sort(atoms.begin(), atoms.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& a : atoms) {
    if (!merged.empty() && std::abs(a.first - merged.back().first) <= 1e-12 * std::max(1.0, std::abs(a.first)))
      merged.back().second += a.second;
    else
      merged.push_back(a);
  }
  return merged;
}

/// W distribution for the local field straight from its coefficients,
/// avoiding the field itself; used when only tails are needed.
inline std::vector<std::pair<double, double>> w_distribution(const LocalFieldModel& model) {
  if (!model.enumerable()) throw capability_error("w_distribution: model is not enumerable");
  const auto atoms = model.innovation().atoms().atoms();
  const auto coeff = model.coefficients();
  const std::size_t E = coeff.size();
  std::vector<std::size_t> digit(E, 0);
  std::vector<std::pair<double, double>> out;
  while (true) {
    double w = 0.0, p = 1.0;
    for (std::size_t e = 0; e < E; ++e) {
      w += coeff[e] * atoms[digit[e]].value;
      p *= atoms[digit[e]].prob;
    }
    out.emplace_back(w, p);
    std::size_t e = 0;
    while (e < E && ++digit[e] == atoms.size()) digit[e++] = 0;
    if (e == E) break;
  }
  std::sort(out.begin(), out.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& a : out) {
    if (!merged.empty() && std::abs(a.first - merged.back().first) <= 1e-12 * std::max(1.0, std::abs(a.first)))
      merged.back().second += a.second;
    else
      merged.push_back(a);
  }
  return merged;
}

/// An absolutely continuous test function. Only f is needed: the kernel
/// integral of f' is a telescoping sum of f over step endpoints.
struct TestFunction {
  std::string name;
  std::function<double(double)> f;
};

/// 1, w, ..., w^5.
inline std::vector<TestFunction> monomial_test_functions() {
  std::vector<TestFunction> out;
  for (int k = 0; k <= 5; ++k)
    out.push_back({"w^" + std::to_string(k), [k](double w) { return std::pow(w, k); }});
  return out;
}

/// Monomials plus tanh(w), tanh(2w) and the smoothed indicator h_{1, 1/2}.
inline std::vector<TestFunction> stock_test_functions() {
  auto out = monomial_test_functions();
  out.push_back({"tanh(w)", [](double w) { return std::tanh(w); }});
  out.push_back({"tanh(2w)", [](double w) { return std::tanh(2.0 * w); }});
  const SteinTestFn h(1.0, 0.5);
  out.push_back({"h_{1,0.5}", [h](double w) { return h(w); }});
  return out;
}

struct IdentityResult {
  std::string name;
  Mode mode = Mode::enumerate;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double std_err = 0.0;
  std::size_t samples = 0;
};

namespace detail {

inline constexpr std::uint64_t tag_identity = 0x1d;
inline constexpr std::uint64_t tag_a1 = 0xa1;
inline constexpr std::uint64_t tag_psi = 0x95;
inline constexpr std::uint64_t tag_be = 0xbe;

struct IdentityTerms {
  double lhs, rhs;
};

inline IdentityTerms identity_terms(const SteinOutcome& o, const TestFunction& fn) {
  const double fw = fn.f(o.w);
  return {o.w * fw, o.kernel.integrate_derivative(fn.f, o.w) + o.r * fw};
}

}  // namespace detail

/// Both sides of the identity for each test function, sharing one pass over
/// the outcomes. MC mode reports the standard error of the residual.
template <class Model>
std::vector<IdentityResult> identity_residuals(const Model& model, const std::vector<TestFunction>& fns,
                                               Mode mode, const McOptions& opt = {}) {
  std::vector<IdentityResult> out(fns.size());
  for (std::size_t k = 0; k < fns.size(); ++k) {
    out[k].name = fns[k].name;
    out[k].mode = mode;
  }
  if (mode == Mode::enumerate) {
    if (!stein_enumerable(model)) throw capability_error("identity_residual: model is not enumerable");
    std::size_t count = 0;
    for_each_stein_outcome(model, [&](double p, const SteinOutcome& o) {
      ++count;
      for (std::size_t k = 0; k < fns.size(); ++k) {
        const auto t = detail::identity_terms(o, fns[k]);
        out[k].lhs += p * t.lhs;
        out[k].rhs += p * t.rhs;
      }
    });
    for (auto& r : out) {
      r.residual = r.lhs - r.rhs;
      r.samples = count;
    }
    return out;
  }
  struct Acc {
    std::vector<MeanAcc> lhs, rhs, diff;
  };
  const auto blocks = run_blocks(opt, detail::tag_identity, [&](SplitMix64& rng, std::size_t count) {
    Acc a{std::vector<MeanAcc>(fns.size()), std::vector<MeanAcc>(fns.size()), std::vector<MeanAcc>(fns.size())};
    for (std::size_t s = 0; s < count; ++s) {
      const auto o = sample_stein_outcome(model, rng);
      for (std::size_t k = 0; k < fns.size(); ++k) {
        const auto t = detail::identity_terms(o, fns[k]);
        a.lhs[k].add(t.lhs);
        a.rhs[k].add(t.rhs);
        a.diff[k].add(t.lhs - t.rhs);
      }
    }
    return a;
  });
  for (std::size_t k = 0; k < fns.size(); ++k) {
    MeanAcc l, r, d;
    for (const auto& b : blocks) {
      l.merge(b.lhs[k]);
      r.merge(b.rhs[k]);
      d.merge(b.diff[k]);
    }
    out[k].lhs = l.mean();
    out[k].rhs = r.mean();
    out[k].residual = d.mean();
    out[k].std_err = d.stderr_of_mean();
    out[k].samples = d.count;
  }
  return out;
}

template <class Model>
IdentityResult identity_residual(const Model& model, const TestFunction& fn, Mode mode, const McOptions& opt = {}) {
  return identity_residuals(model, std::vector<TestFunction>{fn}, mode, opt).front();
}

/// Per-realization functionals given K = E K^.
struct KernelFunctionals {
  double k1;
  double k2;  // int |u| e^{t|u|} |K^(u)| du
  double k3;  // int_{|u|<=1} e^{2t|u|} (K^ - K)^2 du
  double k4;  // int_{|u|<=1} |u| e^{2t|u|} (K^ - K)^2 du
};

inline KernelFunctionals kernel_functionals(const KernelFunction& khat, const KernelFunction& k, double t) {
  if (!(t >= 0.0)) throw domain_error("kernel_functionals: t must be >= 0");
  return {khat.integral(), khat.integrate_abs(Weight::abs_u_exp_abs(t)),
          KernelFunction::integrate_squared_difference(khat, k, Weight::exp_abs(2.0 * t), -1.0, 1.0),
          KernelFunction::integrate_squared_difference(khat, k, Weight::abs_u_exp_abs(2.0 * t), -1.0, 1.0)};
}

/// The (K^ - K)^2 integrals over |u| <= 1 by expansion, int K^2 w - 2 int K^ K w
/// + int K^2 w, with prefix integrals of K w so that each realization costs
/// O(pieces log |K|). Used in MC mode where the pooled K can be large.
class SquaredDifference {
 public:
  SquaredDifference(const KernelFunction& k, double t) : w3_(Weight::exp_abs(2.0 * t)), w4_(Weight::abs_u_exp_abs(2.0 * t)) {
    grid_.push_back(-1.0);
    for (double b : k.breakpoints())
      if (b > -1.0 && b < 1.0) grid_.push_back(b);
    grid_.push_back(1.0);
    p3_.push_back(0.0);
    p4_.push_back(0.0);
    for (std::size_t j = 0; j + 1 < grid_.size(); ++j) {
      const double lv = k(grid_[j]);
      level_.push_back(lv);
      const double i3 = detail::weight_integral(w3_.power, w3_.rate, grid_[j], grid_[j + 1]);
      const double i4 = detail::weight_integral(w4_.power, w4_.rate, grid_[j], grid_[j + 1]);
      p3_.push_back(p3_.back() + lv * i3);
      p4_.push_back(p4_.back() + lv * i4);
      kk3_ += lv * lv * i3;
      kk4_ += lv * lv * i4;
    }
  }

  /// (K^_{3,t}, K^_{4,t}) for one realization.
  std::pair<double, double> operator()(const KernelFunction& khat) const {
    double self3 = 0.0, self4 = 0.0, cross3 = 0.0, cross4 = 0.0;
    const auto br = khat.breakpoints();
    const auto lv = khat.levels();
    for (std::size_t j = 0; j < lv.size(); ++j) {
      const double a = std::max(-1.0, br[j]), b = std::min(1.0, br[j + 1]);
      if (b <= a || lv[j] == 0.0) continue;
      self3 += lv[j] * lv[j] * detail::weight_integral(w3_.power, w3_.rate, a, b);
      self4 += lv[j] * lv[j] * detail::weight_integral(w4_.power, w4_.rate, a, b);
      cross3 += lv[j] * (prefix(p3_, w3_, b) - prefix(p3_, w3_, a));
      cross4 += lv[j] * (prefix(p4_, w4_, b) - prefix(p4_, w4_, a));
    }
    return {std::max(0.0, self3 - 2.0 * cross3 + kk3_), std::max(0.0, self4 - 2.0 * cross4 + kk4_)};
  }

 private:
  // int_{-1}^{x} K w for x in [-1, 1].
  double prefix(const std::vector<double>& p, Weight w, double x) const {
    auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
    std::size_t j = static_cast<std::size_t>(it - grid_.begin());
    j = j == 0 ? 0 : j - 1;
    if (j >= level_.size()) return p.back();
    return p[j] + level_[j] * detail::weight_integral(w.power, w.rate, grid_[j], x);
  }

  Weight w3_, w4_;
  std::vector<double> grid_, level_, p3_, p4_;
  double kk3_ = 0.0, kk4_ = 0.0;
};

/// M_t = int_{|u|<=1} e^{t|u|} |K(u)| du.
inline double m_t(const KernelFunction& k, double t) { return k.integrate_abs(Weight::exp_abs(t), -1.0, 1.0); }

/// Psi-weighted ratios at one (beta, t):
/// ratio[0] = E{|R| Psi}/E Psi, ratio[1] = E{|E(K^_1|W) - 1| Psi}/E Psi,
/// ratio[2..4] = E{K^_{j,t} Psi}/E Psi.
struct A1Point {
  double beta = 0.0;
  double t = 0.0;
  double e_psi = 0.0;
  std::array<double, 5> ratio{};
  double m_t = 0.0;
  /// Unweighted expectations E K^_1, E K^_{2,t}, E K^_{3,t}, E K^_{4,t}.
  std::array<double, 4> mean{};
};

/// Cap on the pooled K grid in MC mode; continuous innovations on large
/// fields exceed it and are refused rather than silently coarsened.
inline constexpr std::size_t max_pooled_breakpoints = 1000000;

struct A1Grid {
  Mode mode = Mode::enumerate;
  /// False when E(K^_1|W) was replaced by K^_1 (an upper bound by Jensen).
  bool k1_conditional = true;
  std::size_t samples = 0;
  KernelFunction k;
  std::vector<A1Point> points;
};

namespace detail {

// E(K^_1 | W) for an enumerated model: atoms sorted by w with merged means.
struct ConditionalK1 {
  std::vector<double> w;
  std::vector<double> value;

  double at(double x) const {
    auto it = std::lower_bound(w.begin(), w.end(), x - 1e-12 * std::max(1.0, std::abs(x)));
    return value[static_cast<std::size_t>(it - w.begin())];
  }
};

inline ConditionalK1 conditional_k1(std::vector<std::array<double, 3>> rows) {
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a[0] < b[0]; });
  ConditionalK1 c;
  std::vector<double> mass;
  for (const auto& r : rows) {
    if (!c.w.empty() && std::abs(r[0] - c.w.back()) <= 1e-12 * std::max(1.0, std::abs(r[0]))) {
      mass.back() += r[1];
      c.value.back() += r[2];
    } else {
      c.w.push_back(r[0]);
      mass.push_back(r[1]);
      c.value.push_back(r[2]);
    }
  }
  for (std::size_t k = 0; k < c.value.size(); ++k) c.value[k] /= mass[k];
  return c;
}

struct GridAcc {
  std::vector<double> psi;                     // per grid point
  std::vector<std::array<double, 5>> f_psi;    // per grid point
  std::vector<std::array<double, 4>> mean;     // per t
  double weight = 0.0;

  GridAcc() = default;
  GridAcc(std::size_t points, std::size_t ts)
      : psi(points, 0.0), f_psi(points, std::array<double, 5>{}), mean(ts, std::array<double, 4>{}) {}

  void merge(const GridAcc& o) {
    for (std::size_t k = 0; k < psi.size(); ++k) {
      psi[k] += o.psi[k];
      for (int j = 0; j < 5; ++j) f_psi[k][j] += o.f_psi[k][j];
    }
    for (std::size_t k = 0; k < mean.size(); ++k)
      for (int j = 0; j < 4; ++j) mean[k][j] += o.mean[k][j];
    weight += o.weight;
  }
};

inline void grid_visit(GridAcc& acc, double p, const SteinOutcome& o, double k1_dev, const KernelFunction& k,
                       const std::vector<double>& betas, const std::vector<double>& ts,
                       const std::vector<SquaredDifference>* fast = nullptr) {
  acc.weight += p;
  for (std::size_t ti = 0; ti < ts.size(); ++ti) {
    KernelFunctionals f;
    if (fast) {
      const auto [k3, k4] = (*fast)[ti](o.kernel);
      f = {o.kernel.integral(), o.kernel.integrate_abs(Weight::abs_u_exp_abs(ts[ti])), k3, k4};
    } else {
      f = kernel_functionals(o.kernel, k, ts[ti]);
    }
    acc.mean[ti][0] += p * f.k1;
    acc.mean[ti][1] += p * f.k2;
    acc.mean[ti][2] += p * f.k3;
    acc.mean[ti][3] += p * f.k4;
    const std::array<double, 5> vals{std::abs(o.r), k1_dev, f.k2, f.k3, f.k4};
    for (std::size_t bi = 0; bi < betas.size(); ++bi) {
      const std::size_t g = bi * ts.size() + ti;
      const double ps = psi(SmoothedExp(betas[bi], ts[ti]), o.w);
      acc.psi[g] += p * ps;
      for (int j = 0; j < 5; ++j) acc.f_psi[g][j] += p * vals[static_cast<std::size_t>(j)] * ps;
    }
  }
}

}  // namespace detail

/// All (A1) functionals on the product grid betas x ts, in two passes: the
/// first forms K (exactly, or pooled over the samples), the second the
/// Psi-weighted expectations. MC mode replays the same sample streams.
template <class Model>
A1Grid a1_grid(const Model& model, const std::vector<double>& betas, const std::vector<double>& ts, Mode mode,
               const McOptions& opt = {}) {
  for (double t : ts)
    if (!(t >= 0.0)) throw domain_error("a1_grid: t must be >= 0");
  for (double b : betas)
    if (!(b >= 0.0)) throw domain_error("a1_grid: beta must be >= 0");
  A1Grid out;
  out.mode = mode;
  const std::size_t points = betas.size() * ts.size();
  detail::GridAcc total(points, ts.size());

  if (mode == Mode::enumerate) {
    if (!stein_enumerable(model)) throw capability_error("a1_grid: model is not enumerable");
    KernelAccumulator kacc;
    std::vector<std::array<double, 3>> rows;
    for_each_stein_outcome(model, [&](double p, const SteinOutcome& o) {
      kacc.add(o.kernel, p);
      rows.push_back({o.w, p, p * o.kernel.integral()});
    });
    out.k = kacc.result();
    out.samples = rows.size();
    const auto cond = detail::conditional_k1(std::move(rows));
    for_each_stein_outcome(model, [&](double p, const SteinOutcome& o) {
      detail::grid_visit(total, p, o, std::abs(cond.at(o.w) - 1.0), out.k, betas, ts);
    });
  } else {
    out.k1_conditional = false;
    const auto parts = run_blocks(opt, detail::tag_a1, [&](SplitMix64& rng, std::size_t count) {
      KernelAccumulator acc;
      for (std::size_t s = 0; s < count; ++s) acc.add(sample_stein_outcome(model, rng).kernel, 1.0);
      auto k = acc.result();
      if (k.breakpoints().size() > max_pooled_breakpoints)
        throw capability_error("a1_grid: pooled kernel has too many distinct breakpoints for MC mode");
      return k;
    });
    KernelAccumulator kacc;
    for (const auto& k : parts) kacc.add(k, 1.0 / static_cast<double>(opt.samples));
    out.k = kacc.result();
    if (out.k.breakpoints().size() > max_pooled_breakpoints)
      throw capability_error("a1_grid: pooled kernel has too many distinct breakpoints for MC mode");
    out.samples = opt.samples;
    std::vector<SquaredDifference> fast;
    for (double t : ts) fast.emplace_back(out.k, t);
    const auto grids = run_blocks(opt, detail::tag_a1, [&](SplitMix64& rng, std::size_t count) {
      detail::GridAcc g(points, ts.size());
      for (std::size_t s = 0; s < count; ++s) {
        const auto o = sample_stein_outcome(model, rng);
        detail::grid_visit(g, 1.0, o, std::abs(o.kernel.integral() - 1.0), out.k, betas, ts, &fast);
      }
      return g;
    });
    for (const auto& g : grids) total.merge(g);
  }

  for (std::size_t bi = 0; bi < betas.size(); ++bi)
    for (std::size_t ti = 0; ti < ts.size(); ++ti) {
      const std::size_t g = bi * ts.size() + ti;
      A1Point pt;
      pt.beta = betas[bi];
      pt.t = ts[ti];
      pt.e_psi = total.psi[g] / total.weight;
      for (int j = 0; j < 5; ++j) pt.ratio[static_cast<std::size_t>(j)] = total.f_psi[g][static_cast<std::size_t>(j)] / total.psi[g];
      for (int j = 0; j < 4; ++j) pt.mean[static_cast<std::size_t>(j)] = total.mean[ti][static_cast<std::size_t>(j)] / total.weight;
      pt.m_t = m_t(out.k, ts[ti]);
      out.points.push_back(pt);
    }
  return out;
}

/// The functionals at a single (beta, t).
template <class Model>
A1Point k_functionals(const Model& model, double beta, double t, Mode mode, const McOptions& opt = {}) {
  if (!(t >= 0.0)) throw domain_error("k_functionals: t must be >= 0");
  return a1_grid(model, {beta}, {t}, mode, opt).points.front();
}

struct A1Estimates {
  std::array<double, 5> r{};
  std::array<double, 5> tau{};
  double rho = 0.0;
  double m0 = 1.0;
  Mode mode = Mode::enumerate;
  bool k1_conditional = true;
  std::size_t samples = 0;
  std::vector<double> grid;
  std::vector<A1Point> points;

  GeneralParams params(double c_abs = 1.0) const {
    GeneralParams p;
    p.r = r;
    p.tau = tau;
    p.m0 = m0;
    p.rho = rho;
    p.c_abs = c_abs;
    p.label = std::string("estimated (") + to_string(mode) + ")";
    return p;
  }
};

inline std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
  std::vector<double> g;
  if (points <= 1) return {lo};
  for (std::size_t k = 0; k < points; ++k) g.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1));
  return g;
}

/// r_j = max over the grid of ratio_j / (1 + t^{tau_j}) with 0^0 = 1, and
/// rho = max_t M_t; beta and t both run over `points` values in [0, m0].
template <class Model>
A1Estimates estimate_a1(const Model& model, const std::array<double, 5>& tau, double m0, std::size_t points,
                        Mode mode, const McOptions& opt = {}) {
  if (!(m0 > 0.0)) throw domain_error("estimate_a1: m0 must be > 0");
  A1Estimates e;
  e.tau = tau;
  e.m0 = m0;
  e.mode = mode;
  e.grid = linear_grid(0.0, m0, points);
  const auto g = a1_grid(model, e.grid, e.grid, mode, opt);
  e.k1_conditional = g.k1_conditional;
  e.samples = g.samples;
  e.points = g.points;
  for (const auto& pt : g.points) {
    for (std::size_t j = 0; j < 5; ++j) e.r[j] = std::max(e.r[j], pt.ratio[j] / (1.0 + std::pow(pt.t, tau[j])));
    e.rho = std::max(e.rho, pt.m_t);
  }
  return e;
}

struct ExpBoundRow {
  double beta = 0.0;
  double t = 0.0;
  double estimate = 0.0;
  double std_err = 0.0;
  double bound = 0.0;
  bool in_range = true;
  bool pass = true;
};

/// E Psi_{beta,t}(W) by Monte Carlo against 4 e^{t^2/2}: a grid point passes
/// when estimate + 4 standard errors stays below the bound. Points with beta or t
/// above z0 are reported with in_range = false and not judged.
template <class Model>
std::vector<ExpBoundRow> exp_bound_check(const Model& model, const std::vector<double>& betas,
                                         const std::vector<double>& ts, double z0, const McOptions& opt) {
  const std::size_t points = betas.size() * ts.size();
  const auto blocks = run_blocks(opt, detail::tag_psi, [&](SplitMix64& rng, std::size_t count) {
    std::vector<MeanAcc> acc(points);
    for (std::size_t s = 0; s < count; ++s) {
      const double w = draw_statistic(model, rng);
      for (std::size_t bi = 0; bi < betas.size(); ++bi)
        for (std::size_t ti = 0; ti < ts.size(); ++ti)
          acc[bi * ts.size() + ti].add(psi(SmoothedExp(betas[bi], ts[ti]), w));
    }
    return acc;
  });
  std::vector<ExpBoundRow> rows;
  for (std::size_t bi = 0; bi < betas.size(); ++bi)
    for (std::size_t ti = 0; ti < ts.size(); ++ti) {
      MeanAcc a;
      for (const auto& b : blocks) a.merge(b[bi * ts.size() + ti]);
      ExpBoundRow r;
      r.beta = betas[bi];
      r.t = ts[ti];
      r.estimate = a.mean();
      r.std_err = a.stderr_of_mean();
      r.bound = 4.0 * std::exp(ts[ti] * ts[ti] / 2.0);
      r.in_range = betas[bi] <= z0 && ts[ti] <= z0;
      r.pass = !r.in_range || r.estimate + 4.0 * r.std_err <= r.bound;
      rows.push_back(r);
    }
  return rows;
}

struct BerryEsseenResult {
  double sup_gap = 0.0;
  double rhs = 0.0;
  /// Zero in enumerate mode; the DKW half-width at level 1e-3 in MC mode.
  double margin = 0.0;
  Mode mode = Mode::enumerate;
  std::size_t samples = 0;
  bool pass = false;
};

/// sup_z |F(z) - Phi(z)| for a sorted atom list, using both one-sided limits.
inline double sup_gap_atoms(const std::vector<std::pair<double, double>>& atoms) {
  double cdf = 0.0, gap = 0.0;
  for (const auto& [w, p] : atoms) {
    const double phi = gauss::cdf(w);
    gap = std::max(gap, std::abs(cdf - phi));
    cdf += p;
    gap = std::max(gap, std::abs(cdf - phi));
  }
  return gap;
}

template <class Model>
BerryEsseenResult berry_esseen_check(const Model& model, const A1Estimates& a1, Mode mode, const McOptions& opt = {}) {
  BerryEsseenResult res;
  res.mode = mode;
  res.rhs = berry_esseen_rhs(a1.r);
  if (mode == Mode::enumerate) {
    const auto atoms = w_distribution(model);
    res.sup_gap = sup_gap_atoms(atoms);
    res.samples = atoms.size();
  } else {
    const auto blocks = run_blocks(opt, detail::tag_be, [&](SplitMix64& rng, std::size_t count) {
      std::vector<double> w(count);
      for (auto& v : w) v = draw_statistic(model, rng);
      return w;
    });
    std::vector<std::pair<double, double>> atoms;
    const double p = 1.0 / static_cast<double>(opt.samples);
    for (const auto& b : blocks)
      for (double w : b) atoms.emplace_back(w, p);
    std::sort(atoms.begin(), atoms.end());
    res.sup_gap = sup_gap_atoms(atoms);
    res.samples = opt.samples;
    res.margin = std::sqrt(std::log(2.0 / 1e-3) / (2.0 * static_cast<double>(opt.samples)));
  }
  res.pass = res.sup_gap <= res.rhs + res.margin;
  return res;
}

}  // namespace steinmd
