#include "covshift/parallel.hpp"

#include <cstdlib>

namespace covshift {

int worker_count() {
  if (const char* env = std::getenv("COVSHIFT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace covshift
