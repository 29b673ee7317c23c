#include "nbf/common.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdlib>

namespace nbf {

namespace {
int resolve_default() {
  if (const char* env = std::getenv("NBF_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}
int g_threads = resolve_default();
}  // namespace

void set_threads(int n) {
  NBF_REQUIRE(n >= 1, "thread count must be >= 1");
  g_threads = n;
#ifdef _OPENMP
  omp_set_num_threads(n);
#endif
}

int threads() { return g_threads; }

}  // namespace nbf
