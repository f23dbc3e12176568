#include "ncmart/sweep.hpp"

#include <omp.h>

namespace ncmart {

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) {
  static const int default_threads = omp_get_max_threads();
  omp_set_num_threads(n > 0 ? n : default_threads);
}

}  // namespace ncmart
