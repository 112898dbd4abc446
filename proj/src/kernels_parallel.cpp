#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "diul/kernels.hpp"

namespace diul::kernels::parallel {

namespace {
// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = 1 << 15;
}  // namespace

#define DIUL_PRAGMA(x) _Pragma(#x)
#define DIUL_PARALLEL_FOR(work) DIUL_PRAGMA(omp parallel for schedule(static) if ((work) >= kParallelWork))
#include "kernels_body.inc"
#undef DIUL_PARALLEL_FOR
#undef DIUL_PRAGMA

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace diul::kernels::parallel
