#pragma once

// Dense row-major kernels used by the tape ops.
//
// Two backends share one signature set: `serial` is the plain reference and
// `parallel` splits the outer (row) loop across OpenMP threads. Each output
// element is accumulated in the same order in both, so results are bitwise
// identical regardless of thread count.

#include <cstddef>
#include <span>

namespace diul::kernels {

#define DIUL_KERNEL_DECLS                                                                      \
  /* C[m,n] = A[m,k] * B[k,n] */                                                               \
  void matmul_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,    \
                 std::size_t m, std::size_t k, std::size_t n);                                 \
  /* C[m,n] = A[m,k] * B[n,k]^T */                                                             \
  void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,    \
                 std::size_t m, std::size_t k, std::size_t n);                                 \
  /* C[m,n] = A[k,m]^T * B[k,n] */                                                             \
  void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,    \
                 std::size_t m, std::size_t k, std::size_t n);                                 \
  /* out[i] = log sum_j exp(x[i,j]), max-shifted; -inf for empty rows */                        \
  void row_log_sum_exp(std::span<const double> x, std::span<double> out, std::size_t m,        \
                       std::size_t n);                                                         \
  /* out[i,:] = softmax(x[i,:]) */                                                             \
  void row_softmax(std::span<const double> x, std::span<double> out, std::size_t m,            \
                   std::size_t n);                                                             \
  /* norms[i] = ||x[i,:]||_2 */                                                                \
  void row_norms(std::span<const double> x, std::span<double> norms, std::size_t m,            \
                 std::size_t n);

namespace serial {
DIUL_KERNEL_DECLS
}  // namespace serial

namespace parallel {
DIUL_KERNEL_DECLS

/// Number of threads the parallel backend will use (1 without OpenMP).
int max_threads();
}  // namespace parallel

#undef DIUL_KERNEL_DECLS

}  // namespace diul::kernels
