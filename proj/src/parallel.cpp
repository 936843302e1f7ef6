#include "tag/parallel.hpp"

#include <omp.h>

namespace tag {

namespace {
const int kDefaultThreads = omp_get_max_threads();
}

void set_threads(int n) { omp_set_num_threads(n > 0 ? n : kDefaultThreads); }

int max_threads() { return omp_get_max_threads(); }

}  // namespace tag
