#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "diul/error.hpp"
#include "diul/kernels.hpp"
#include "diul/tensor.hpp"
#include "test_support.hpp"

using namespace diul;
namespace ks = diul::kernels::serial;
namespace kp = diul::kernels::parallel;

namespace {

std::vector<double> randn(std::size_t n, Rng& rng) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST(Tensor, ShapesAndAccess) {
  DenseTensor m = DenseTensor::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m.at(1, 2), 6.0);
  EXPECT_EQ(m.row(1)[0], 4.0);
  EXPECT_EQ(shape_str(m.shape()), "[2x3]");
  EXPECT_EQ(DenseTensor::scalar(2.5).item(), 2.5);
  EXPECT_THROW(m.item(), DimensionError);
  EXPECT_THROW(DenseTensor::matrix(2, 2, {1.0, 2.0, 3.0}), DimensionError);

  DenseTensor empty(Shape{0, 4});
  EXPECT_EQ(empty.numel(), 0u);
  EXPECT_TRUE(empty.all_finite());
}

TEST(Kernels, MatmulMatchesNaiveTripleLoop) {
  Rng rng(11);
  const std::size_t m = 7, k = 5, n = 9;
  auto a = randn(m * k, rng), b = randn(k * n, rng);
  std::vector<double> c(m * n);
  ks::matmul_nn(a, b, c, m, k, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += a[i * k + t] * b[t * n + j];
      EXPECT_NEAR(c[i * n + j], s, 1e-12);
    }
}

TEST(Kernels, TransposedVariantsAgreeWithExplicitTranspose) {
  Rng rng(12);
  const std::size_t m = 6, k = 4, n = 5;
  auto a = randn(m * k, rng), bt = randn(n * k, rng), at = randn(k * m, rng), b = randn(k * n, rng);

  std::vector<double> b_from_bt(k * n), a_from_at(m * k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) b_from_bt[j * n + i] = bt[i * k + j];
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < m; ++j) a_from_at[j * k + i] = at[i * m + j];

  std::vector<double> c1(m * n), c2(m * n);
  ks::matmul_nt(a, bt, c1, m, k, n);
  ks::matmul_nn(a, b_from_bt, c2, m, k, n);
  for (std::size_t i = 0; i < c1.size(); ++i) EXPECT_NEAR(c1[i], c2[i], 1e-12);

  ks::matmul_tn(at, b, c1, m, k, n);
  ks::matmul_nn(a_from_at, b, c2, m, k, n);
  for (std::size_t i = 0; i < c1.size(); ++i) EXPECT_NEAR(c1[i], c2[i], 1e-12);
}

TEST(Kernels, MatmulIsAssociativeUpToRounding) {
  Rng rng(13);
  DenseTensor a = diul::testing::random_matrix(4, 6, rng), b = diul::testing::random_matrix(6, 3, rng),
              c = diul::testing::random_matrix(3, 5, rng);
  EXPECT_LE(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))), 1e-12);
}

TEST(Kernels, LogSumExpIsShiftStable) {
  std::vector<double> x = {1000.0, 1000.0, 999.0, -std::numeric_limits<double>::infinity()};
  std::vector<double> out(1);
  ks::row_log_sum_exp(x, out, 1, 4);
  EXPECT_NEAR(out[0], 1000.0 + std::log(2.0 + std::exp(-1.0)), 1e-12);

  std::vector<double> none;
  std::vector<double> out2(2);
  ks::row_log_sum_exp(none, out2, 2, 0);
  EXPECT_EQ(out2[0], -std::numeric_limits<double>::infinity());
}

TEST(Kernels, SoftmaxRowsSumToOne) {
  Rng rng(14);
  auto x = randn(5 * 7, rng);
  for (double& v : x) v *= 300.0;
  std::vector<double> out(x.size());
  ks::row_softmax(x, out, 5, 7);
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 7; ++j) {
      EXPECT_GE(out[i * 7 + j], 0.0);
      s += out[i * 7 + j];
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

// The parallel backend must be a drop-in replacement, bit for bit, on sizes
// on both sides of the threading threshold.
TEST(Kernels, ParallelBackendIsBitwiseIdenticalToSerial) {
  Rng rng(15);
  for (auto [m, k, n] : {std::tuple<std::size_t, std::size_t, std::size_t>{3, 4, 5}, {256, 64, 300}, {517, 33, 129}}) {
    auto a = randn(m * k, rng), b = randn(k * n, rng), bt = randn(n * k, rng), at = randn(k * m, rng);
    std::vector<double> s(m * n), p(m * n);

    ks::matmul_nn(a, b, s, m, k, n);
    kp::matmul_nn(a, b, p, m, k, n);
    EXPECT_EQ(s, p);
    ks::matmul_nt(a, bt, s, m, k, n);
    kp::matmul_nt(a, bt, p, m, k, n);
    EXPECT_EQ(s, p);
    ks::matmul_tn(at, b, s, m, k, n);
    kp::matmul_tn(at, b, p, m, k, n);
    EXPECT_EQ(s, p);

    std::vector<double> rs(m), rp(m), ss(m * n), sp(m * n);
    ks::row_log_sum_exp(s, rs, m, n);
    kp::row_log_sum_exp(s, rp, m, n);
    EXPECT_EQ(rs, rp);
    ks::row_softmax(s, ss, m, n);
    kp::row_softmax(s, sp, m, n);
    EXPECT_EQ(ss, sp);
    ks::row_norms(s, rs, m, n);
    kp::row_norms(s, rp, m, n);
    EXPECT_EQ(rs, rp);
  }
  EXPECT_GE(kp::max_threads(), 1);
}
