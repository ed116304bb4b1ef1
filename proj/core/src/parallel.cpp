#include "qsync/parallel.hpp"

#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qsync {

namespace {

int initial_threads() {
  if (const char* env = std::getenv("QSYNC_NUM_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int& threads() {
  static int t = initial_threads();
  return t;
}

}  // namespace

int thread_count() { return threads(); }

void set_thread_count(int n) { threads() = n > 0 ? n : 1; }

void parallel_for(int begin, int end, const std::function<void(int)>& body) {
#ifdef _OPENMP
  const int nt = thread_count();
  if (nt > 1 && end - begin > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(nt)
    for (int i = begin; i < end; ++i) body(i);
    return;
  }
#endif
  for (int i = begin; i < end; ++i) body(i);
}

}  // namespace qsync
