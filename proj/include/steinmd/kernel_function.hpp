#pragma once

// Exact piecewise-constant functions with compact support, used for the
// Stein kernels K^(u) and their expectations K(u).
//
// A KernelFunction stores breakpoints u_0 < ... < u_k and one level per
// interval [u_j, u_{j+1}); it is zero outside [u_0, u_k]. Integrals against
// |u|^p exp(r |u|) are evaluated in closed form per interval.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace steinmd {

namespace detail {

// expm1(x)/x, continuous at 0.
inline double expm1_over_x(double x) {
  if (std::abs(x) < 1e-5) return 1.0 + x * (0.5 + x / 6.0);
  return std::expm1(x) / x;
}

// int_0^1 s exp(x s) ds = (e^x (x - 1) + 1) / x^2.
inline double s_exp_moment(double x) {
  if (std::abs(x) < 0.5) {
    double term = 1.0, sum = 0.5;
    for (int j = 1; j < 40; ++j) {
      term *= x / j;
      const double add = term / (j + 2);
      sum += add;
      if (std::abs(add) < 1e-18 * sum) break;
    }
    return sum;
  }
  return (std::exp(x) * (x - 1.0) + 1.0) / (x * x);
}

// G(c) = int_0^c u^power exp(rate u) du for c >= 0, power in {0, 1}.
inline double weight_primitive(int power, double rate, double c) {
  if (c <= 0.0) return 0.0;
  if (power == 0) return c * expm1_over_x(rate * c);
  return c * c * s_exp_moment(rate * c);
}

// int_lo^hi |u|^power exp(rate |u|) du.
inline double weight_integral(int power, double rate, double lo, double hi) {
  if (hi <= lo) return 0.0;
  if (lo >= 0.0) return weight_primitive(power, rate, hi) - weight_primitive(power, rate, lo);
  if (hi <= 0.0) return weight_primitive(power, rate, -lo) - weight_primitive(power, rate, -hi);
  return weight_primitive(power, rate, -lo) + weight_primitive(power, rate, hi);
}

}  // namespace detail

/// Weight |u|^power * exp(rate * |u|) for step-function integrals.
struct Weight {
  int power = 0;
  double rate = 0.0;

  static constexpr Weight one() { return {0, 0.0}; }
  static constexpr Weight abs_u() { return {1, 0.0}; }
  static constexpr Weight exp_abs(double rate) { return {0, rate}; }
  static constexpr Weight abs_u_exp_abs(double rate) { return {1, rate}; }

  double operator()(double u) const { return std::pow(std::abs(u), power) * std::exp(rate * std::abs(u)); }
};

class KernelFunction {
 public:
  /// A constant level on [lo, hi).
  struct Piece {
    double lo;
    double hi;
    double level;
  };

  KernelFunction() = default;

  /// Sum of the given pieces, assembled by a sweep over their endpoints.
  static KernelFunction from_pieces(std::span<const Piece> pieces) {
    std::vector<std::pair<double, double>> events;
    events.reserve(2 * pieces.size());
    for (const auto& p : pieces) {
      if (!(p.hi > p.lo) || p.level == 0.0) continue;
      events.emplace_back(p.lo, p.level);
      events.emplace_back(p.hi, -p.level);
    }
    std::sort(events.begin(), events.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    KernelFunction k;
    if (events.empty()) return k;
    double level = 0.0;
    std::size_t i = 0;
    while (i < events.size()) {
      const double u = events[i].first;
      while (i < events.size() && events[i].first == u) level += events[i++].second;
      if (i == events.size()) level = 0.0;
      k.breaks_.push_back(u);
      k.levels_.push_back(level);
    }
    k.levels_.pop_back();  // one level per interval
    k.drop_zero_ends();
    return k;
  }

  /// Pointwise combination op(a(u), b(u)) on the merged breakpoint grid.
  template <class Op>
  static KernelFunction combine(const KernelFunction& a, const KernelFunction& b, Op op) {
    KernelFunction k;
    // Cells of the merged grid are contiguous.
    merge_walk(a, b, [&](double lo, double hi, double la, double lb) {
      if (k.breaks_.empty()) k.breaks_.push_back(lo);
      k.levels_.push_back(op(la, lb));
      k.breaks_.push_back(hi);
    });
    k.drop_zero_ends();
    return k;
  }

  bool empty() const noexcept { return levels_.empty(); }
  std::span<const double> breakpoints() const noexcept { return breaks_; }
  std::span<const double> levels() const noexcept { return levels_; }
  double support_lo() const noexcept { return breaks_.empty() ? 0.0 : breaks_.front(); }
  double support_hi() const noexcept { return breaks_.empty() ? 0.0 : breaks_.back(); }

  /// Value at u under the right-continuous convention.
  double operator()(double u) const noexcept {
    if (breaks_.empty() || u < breaks_.front() || u >= breaks_.back()) return 0.0;
    const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), u);
    return levels_[static_cast<std::size_t>(it - breaks_.begin()) - 1];
  }

  /// Interval pieces (one per nonzero level).
  std::vector<Piece> pieces(double scale = 1.0) const {
    std::vector<Piece> out;
    out.reserve(levels_.size());
    for (std::size_t j = 0; j < levels_.size(); ++j)
      if (levels_[j] != 0.0) out.push_back({breaks_[j], breaks_[j + 1], scale * levels_[j]});
    return out;
  }

  /// int K(u) du.
  double integral() const noexcept {
    double s = 0.0;
    for (std::size_t j = 0; j < levels_.size(); ++j) s += levels_[j] * (breaks_[j + 1] - breaks_[j]);
    return s;
  }

  /// int_{lo}^{hi} w(u) K(u) du, or with |K(u)| when abs_levels is set.
  double integrate(Weight w, double lo = -inf(), double hi = inf(), bool abs_levels = false) const {
    double s = 0.0;
    for (std::size_t j = 0; j < levels_.size(); ++j) {
      const double a = std::max(lo, breaks_[j]);
      const double b = std::min(hi, breaks_[j + 1]);
      if (b <= a || levels_[j] == 0.0) continue;
      const double level = abs_levels ? std::abs(levels_[j]) : levels_[j];
      s += level * detail::weight_integral(w.power, w.rate, a, b);
    }
    return s;
  }

  double integrate_abs(Weight w, double lo = -inf(), double hi = inf()) const {
    return integrate(w, lo, hi, true);
  }

  /// int f'(shift + u) K(u) du, given the antiderivative f of f'.
  template <class F>
  double integrate_derivative(F&& f, double shift) const {
    double s = 0.0;
    for (std::size_t j = 0; j < levels_.size(); ++j) {
      if (levels_[j] == 0.0) continue;
      s += levels_[j] * (f(shift + breaks_[j + 1]) - f(shift + breaks_[j]));
    }
    return s;
  }

  /// int_{lo}^{hi} w(u) (a(u) - b(u))^2 du without materializing a - b.
  static double integrate_squared_difference(const KernelFunction& a, const KernelFunction& b,
                                             Weight w, double lo = -inf(), double hi = inf()) {
    double s = 0.0;
    merge_walk(a, b, [&](double x0, double x1, double la, double lb) {
      const double c0 = std::max(lo, x0), c1 = std::min(hi, x1);
      if (c1 <= c0) return;
      const double d = la - lb;
      if (d != 0.0) s += d * d * detail::weight_integral(w.power, w.rate, c0, c1);
    });
    return s;
  }

 private:
  static constexpr double inf() { return std::numeric_limits<double>::infinity(); }

  void drop_zero_ends() {
    std::size_t first = 0;
    while (first < levels_.size() && levels_[first] == 0.0) ++first;
    std::size_t last = levels_.size();
    while (last > first && levels_[last - 1] == 0.0) --last;
    if (first == last) {
      breaks_.clear();
      levels_.clear();
      return;
    }
    breaks_ = std::vector<double>(breaks_.begin() + static_cast<std::ptrdiff_t>(first),
                                  breaks_.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    levels_ = std::vector<double>(levels_.begin() + static_cast<std::ptrdiff_t>(first),
                                  levels_.begin() + static_cast<std::ptrdiff_t>(last));
  }

  // Calls visit(lo, hi, level_a, level_b) on every cell of the merged grid
  // inside the union of both supports.
  template <class Visit>
  static void merge_walk(const KernelFunction& a, const KernelFunction& b, Visit&& visit) {
    std::vector<double> grid;
    grid.reserve(a.breaks_.size() + b.breaks_.size());
    std::merge(a.breaks_.begin(), a.breaks_.end(), b.breaks_.begin(), b.breaks_.end(),
               std::back_inserter(grid));
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    std::size_t ia = 0, ib = 0;
    auto level_at = [](const KernelFunction& k, std::size_t& idx, double x) {
      // Advance idx to the interval containing x (right-continuous).
      if (k.breaks_.empty() || x < k.breaks_.front() || x >= k.breaks_.back()) return 0.0;
      while (idx + 1 < k.breaks_.size() && k.breaks_[idx + 1] <= x) ++idx;
      return k.levels_[idx];
    };
    for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
      const double x0 = grid[g], x1 = grid[g + 1];
      visit(x0, x1, level_at(a, ia, x0), level_at(b, ib, x0));
    }
  }

  std::vector<double> breaks_;
  std::vector<double> levels_;
};

/// Accumulates weighted pieces of many kernels and compacts them periodically,
/// so pooling millions of sampled kernels stays bounded by the distinct
/// breakpoints.
class KernelAccumulator {
 public:
  explicit KernelAccumulator(std::size_t compact_at = 1 << 16) : compact_at_(compact_at) {}

  void add(const KernelFunction& k, double weight) {
    for (const auto& p : k.pieces(weight)) pending_.push_back(p);
    if (pending_.size() >= compact_at_) compact();
  }

  void add(const KernelAccumulator& other) {
    KernelFunction k = other.result();
    add(k, 1.0);
  }

  KernelFunction result() const {
    std::vector<KernelFunction::Piece> all = pending_;
    return KernelFunction::from_pieces(all);
  }

 private:
  void compact() {
    KernelFunction k = KernelFunction::from_pieces(pending_);
    pending_ = k.pieces();
    // Grow the threshold when the compacted grid is itself large.
    compact_at_ = std::max(compact_at_, 4 * pending_.size());
  }

  std::size_t compact_at_;
  std::vector<KernelFunction::Piece> pending_;
};

}  // namespace steinmd
