#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace evoem::detail {

// Reductions always use this many contiguous datapoint blocks, independent of
// the worker count, so floating-point summation order never depends on it.
inline constexpr std::size_t kReductionBlocks = 16;

struct Block {
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline std::vector<Block> make_blocks(std::size_t n, std::size_t blocks = kReductionBlocks) {
  std::vector<Block> out;
  if (n == 0) return out;
  blocks = std::min(blocks, n);
  for (std::size_t b = 0; b < blocks; ++b) out.push_back({n * b / blocks, n * (b + 1) / blocks});
  return out;
}

// Calls f(i) for i in [0, count) on up to `threads` workers. Exceptions are
// rethrown after all workers finish; the one from the lowest index wins.
template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& f) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace evoem::detail
