#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gard {

/// Applies GARD_NUM_THREADS (if set) to the OpenMP runtime. Returns the
/// thread count in effect.
int configure_threads_from_env();
int max_threads();

/// Runs body(i) for i in [0, n) on the OpenMP team. The first exception thrown
/// by any iteration is rethrown on the calling thread after the loop. Bodies
/// must only write to per-index state; reductions happen after the loop in
/// index order so results do not depend on the thread count.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::exception_ptr error;
  std::mutex error_mutex;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (long i = 0; i < static_cast<long>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace gard
