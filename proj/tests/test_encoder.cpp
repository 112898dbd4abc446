#include <gtest/gtest.h>

#include <cmath>

#include "diul/encoder.hpp"
#include "diul/error.hpp"
#include "test_support.hpp"

using namespace diul;
using diul::testing::numeric_gradient;
using diul::testing::random_matrix;
using diul::testing::relative_error;

TEST(InitParams, DeterministicWithZeroBiases) {
  const EncoderParams a = init_params({8, 16, 128}, 42), b = init_params({8, 16, 128}, 42);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, init_params({8, 16, 128}, 43));
  for (const Layer& l : a.layers)
    for (double v : l.bias.data()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(init_params({}, 1), ContractError);
  EXPECT_THROW(init_params({8}, 1), ContractError);
}

TEST(InitParams, GlorotVarianceAndRange) {
  const EncoderParams p = init_params({64, 64}, 7);
  const double limit = std::sqrt(6.0 / 128.0), target = 2.0 / 128.0;
  double mean = 0.0, sq = 0.0;
  for (double v : p.layers[0].weight.data()) {
    EXPECT_LE(std::abs(v), limit);
    mean += v;
    sq += v * v;
  }
  const double n = static_cast<double>(p.layers[0].weight.numel());
  const double var = sq / n - (mean / n) * (mean / n);
  EXPECT_NEAR(var, target, 0.2 * target);
}

TEST(Encode, RowsAreUnitNorm) {
  Rng rng(5);
  const EncoderParams p = init_params({10, 32, 32, 16}, 3);
  for (int t = 0; t < 20; ++t) {
    const DenseTensor z = encode(p, random_matrix(17, 10, rng, 3.0));
    for (std::size_t i = 0; i < z.rows(); ++i) {
      double s = 0.0;
      for (double v : z.row(i)) s += v * v;
      EXPECT_NEAR(std::sqrt(s), 1.0, 1e-12);
    }
  }
  EXPECT_THROW(encode(p, random_matrix(3, 9, rng)), DimensionError);
}

TEST(Encode, IdentityNetworkReturnsUnitInput) {
  EncoderParams p = init_params({4, 4}, 0);
  p.layers[0].weight = DenseTensor::matrix({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}});
  const DenseTensor x = DenseTensor::matrix({{0.5, 0.5, 0.5, 0.5}, {0.0, 0.6, 0.0, -0.8}});
  EXPECT_LE(max_abs_diff(encode(p, x), x), 1e-15);
}

TEST(Encode, TapeAndPlainPassesAgree) {
  Rng rng(6);
  const EncoderParams p = init_params({6, 8, 5}, 9);
  const DenseTensor x = random_matrix(4, 6, rng);
  Tape t;
  EXPECT_LE(max_abs_diff(encode(t, p, t.constant(x), "q").value(), encode(p, x)), 1e-15);
}

// d/d(theta) of a pooled scalar of the embeddings, against central differences.
TEST(Encode, WeightGradientsMatchFiniteDifferences) {
  Rng rng(8);
  for (int inst = 0; inst < 10; ++inst) {
    const EncoderParams p0 = init_params({5, 7, 6, 4}, 100 + inst);
    EncoderParams p = p0;
    for (auto& l : p.layers)
      for (double& b : l.bias.data()) b = std::normal_distribution<double>(0.0, 0.1)(rng);
    const DenseTensor x = random_matrix(6, 5, rng);
    const DenseTensor probe_dir = random_matrix(6, 4, rng);

    auto pooled = [&](const EncoderParams& params) {
      Tape t;
      return sum(mul(encode(t, params, t.constant(x), "q"), t.constant(probe_dir))).value().item();
    };
    Tape t;
    const GradientMap g = t.backward(sum(mul(encode(t, p, t.constant(x), "q"), t.constant(probe_dir))));

    for (std::size_t i = 0; i < p.layers.size(); ++i) {
      auto fw = [&](const DenseTensor& w) { EncoderParams q = p; q.layers[i].weight = w; return pooled(q); };
      auto fb = [&](const DenseTensor& b) { EncoderParams q = p; q.layers[i].bias = b; return pooled(q); };
      EXPECT_LE(relative_error(g.at(weight_name("q", i)), numeric_gradient(fw, p.layers[i].weight)), 1e-5);
      EXPECT_LE(relative_error(g.at(bias_name("q", i)), numeric_gradient(fb, p.layers[i].bias)), 1e-5);
    }
  }
}

TEST(EmaUpdate, Examples) {
  const EncoderParams key = init_params({3, 2}, 1), query = init_params({3, 2}, 2);
  EXPECT_EQ(ema_update(key, query, 1.0), key);
  EXPECT_EQ(ema_update(key, query, 0.0), query);

  EncoderParams k0 = key, q1 = key;
  for (double& v : k0.layers[0].weight.data()) v = 0.0;
  for (double& v : q1.layers[0].weight.data()) v = 1.0;
  const EncoderParams mixed = ema_update(k0, q1, 0.999);
  for (double v : mixed.layers[0].weight.data()) EXPECT_NEAR(v, 0.001, 1e-15);

  EXPECT_THROW(ema_update(key, init_params({3, 3}, 2), 0.5), ContractError);
}

TEST(EmaUpdate, AffineInBothInputs) {
  const EncoderParams a = init_params({4, 3}, 1), b = init_params({4, 3}, 2);
  const double m = 0.3;
  const EncoderParams e = ema_update(a, b, m);
  for (std::size_t i = 0; i < e.layers[0].weight.numel(); ++i)
    EXPECT_NEAR(e.layers[0].weight[i], m * a.layers[0].weight[i] + (1 - m) * b.layers[0].weight[i], 1e-15);
  EXPECT_EQ(e.sizes, a.sizes);
}

TEST(SgdStep, DescendsWithDecay) {
  EncoderParams p = init_params({2, 2}, 3);
  GradientMap g;
  g[weight_name("q", 0)] = DenseTensor(Shape{2, 2}, 1.0);
  const EncoderParams s = sgd_step(p, g, "q", 0.1, 0.01);
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_NEAR(s.layers[0].weight[i], p.layers[0].weight[i] - 0.1 * (1.0 + 0.01 * p.layers[0].weight[i]), 1e-15);
  EXPECT_EQ(s.layers[0].bias, p.layers[0].bias);  // zero bias decays to zero
}

TEST(EncoderFile, RoundTrip) {
  const EncoderParams p = init_params({5, 9, 3}, 11);
  binio::Writer w;
  write_encoder(w, p);
  binio::Reader r(w.buffer());
  EXPECT_EQ(read_encoder(r), p);
  r.expect_end();
}
