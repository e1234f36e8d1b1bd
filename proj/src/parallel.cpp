#include "gard/parallel.hpp"

#include <cstdlib>
#include <string>

namespace gard {

int configure_threads_from_env() {
#ifdef _OPENMP
  if (const char* env = std::getenv("GARD_NUM_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) omp_set_num_threads(n);
    } catch (const std::exception&) {
      // ignore malformed values and keep the runtime default
    }
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace gard
