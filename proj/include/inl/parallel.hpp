#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <type_traits>
#include <vector>

namespace inl {

inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// out[i] = f(i) for i in [0, count), computed by a pool of workers pulling
/// indices from a shared counter. The result depends only on f, never on the
/// thread count or scheduling. If any call throws, the exception from the
/// lowest failing index is rethrown after all workers finish.
template <class F>
auto parallel_map(std::size_t count, std::size_t threads, F&& f) {
  using R = std::invoke_result_t<F&, std::size_t>;
  std::vector<R> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        out[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const std::size_t n = std::min(resolve_threads(threads), std::max<std::size_t>(count, 1));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace inl
