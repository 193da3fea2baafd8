// SPDX-License-Identifier: Apache-2.0
#include "rshmm/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace rshmm {

namespace {
int default_threads = omp_get_max_threads();
}

void set_threads(int n) { omp_set_num_threads(n > 0 ? n : default_threads); }

int threads() { return omp_get_max_threads(); }

int apply_thread_env() {
  const char* env = std::getenv("RSHMM_THREADS");
  if (!env) return 0;
  try {
    const int n = std::stoi(env);
    if (n > 0) set_threads(n);
    return n > 0 ? n : 0;
  } catch (...) {
    return 0;
  }
}

}  // namespace rshmm
