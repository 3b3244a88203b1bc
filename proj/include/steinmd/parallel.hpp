#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace steinmd {

/// Runs body(b) for every block b in [0, blocks) on up to `workers` threads and
/// returns the per-block results in block order. Callers reduce the vector
/// left to right, so the outcome is identical for any worker count.
template <class Body>
auto map_blocks(std::size_t blocks, unsigned workers, Body body)
    -> std::vector<decltype(body(std::size_t{}))> {
  using Result = decltype(body(std::size_t{}));
  std::vector<Result> out(blocks);
  workers = std::max(1u, workers);
  if (workers == 1 || blocks <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) out[b] = body(b);
    return out;
  }
  const unsigned used = static_cast<unsigned>(std::min<std::size_t>(workers, blocks));
  std::vector<std::exception_ptr> errors(used);
  std::vector<std::thread> pool;
  pool.reserve(used);
  for (unsigned w = 0; w < used; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t b = w; b < blocks; b += used) out[b] = body(b);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace steinmd
