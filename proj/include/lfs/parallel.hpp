#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lfs {

/// Runs body(i) for i in [0, n). Iterations must be independent; callers
/// write into per-index slots and reduce sequentially afterwards so results
/// do not depend on the worker count. If any iteration throws, the exception
/// from the lowest index is rethrown after the loop.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
#ifdef _OPENMP
  if (threads != 1 && n > 1) {
    const int workers = threads > 0 ? threads : omp_get_max_threads();
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for num_threads(workers) schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
    return;
  }
#endif
  (void)threads;
  for (std::size_t i = 0; i < n; ++i) body(i);
}

} // namespace lfs
