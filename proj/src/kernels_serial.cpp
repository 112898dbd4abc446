#include <algorithm>
#include <cmath>
#include <limits>

#include "diul/kernels.hpp"

namespace diul::kernels::serial {

#define DIUL_PARALLEL_FOR(work)
#include "kernels_body.inc"
#undef DIUL_PARALLEL_FOR

}  // namespace diul::kernels::serial
