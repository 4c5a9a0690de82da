#include "sflick/parallel.hpp"

#include <omp.h>

namespace sflick {
namespace {
int default_threads() {
  static const int n = omp_get_max_threads();
  return n;
}
}  // namespace

void set_thread_count(int threads) {
  omp_set_num_threads(threads < 1 ? default_threads() : threads);
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace sflick
