#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace dldmf {

// Runs fn(i) for i in [0, n) across up to max_threads workers with a static
// strided partition (index i always lands on worker i % workers). Results
// must be written to per-index slots; reductions are the caller's job (do
// them in index order to stay deterministic). The first worker exception, by
// index, is rethrown on the calling thread.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         unsigned max_threads = 0) {
  if (n == 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  unsigned workers = max_threads == 0 ? hw : std::min(max_threads, hw);
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace dldmf
