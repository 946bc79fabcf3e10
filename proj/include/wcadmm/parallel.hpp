#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace wcadmm {

/// Runs body(i) for i in [0, n) on up to `threads` workers. Every index runs
/// to completion; afterwards the exception of the lowest failing index (if
/// any) is rethrown.
template <typename Body>
void parallel_for(std::size_t n, std::size_t threads, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    const std::size_t workers = threads < n ? threads : n;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run(i);
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::size_t default_thread_count() {
  const auto hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

}  // namespace wcadmm
