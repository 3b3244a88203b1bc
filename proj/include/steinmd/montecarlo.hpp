#pragma once

// Block-structured Monte Carlo driver. Sample k of a run belongs to block
// k / block_size and block b draws from its own counter-based stream, so the
// sample set depends on (seed, tag) only and never on the worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "steinmd/errors.hpp"
#include "steinmd/parallel.hpp"
#include "steinmd/random.hpp"

namespace steinmd {

enum class Mode { enumerate, mc };

inline const char* to_string(Mode m) { return m == Mode::enumerate ? "enumerate" : "mc"; }

struct McOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::size_t block_size = 8192;
  /// Normal quantile for reported confidence intervals.
  double ci_z = 1.96;
};

/// Runs body(rng, count) on every block and returns the per-block results
/// in block order.
template <class Body>
auto run_blocks(const McOptions& opt, std::uint64_t tag, Body body) {
  if (opt.samples == 0) throw domain_error("run_blocks: samples must be > 0");
  const std::size_t bs = std::max<std::size_t>(1, opt.block_size);
  const std::size_t blocks = (opt.samples + bs - 1) / bs;
  return map_blocks(blocks, opt.workers, [&](std::size_t b) {
    SplitMix64 rng = SplitMix64::stream(opt.seed, tag, b);
    const std::size_t count = std::min(bs, opt.samples - b * bs);
    return body(rng, count);
  });
}

/// Running sums for a mean and its standard error.
struct MeanAcc {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;

  void add(double v) noexcept {
    sum += v;
    sum_sq += v * v;
    ++count;
  }
  void merge(const MeanAcc& o) noexcept {
    sum += o.sum;
    sum_sq += o.sum_sq;
    count += o.count;
  }
  double mean() const noexcept { return count ? sum / static_cast<double>(count) : 0.0; }
  double stderr_of_mean() const noexcept {
    if (count < 2) return 0.0;
    const double n = static_cast<double>(count);
    const double m = sum / n;
    const double var = std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
    return std::sqrt(var / n);
  }
};

}  // namespace steinmd
