#include <gtest/gtest.h>

#include "diul/error.hpp"
#include "diul/probe.hpp"
#include "test_support.hpp"

using namespace diul;

namespace {

DatasetBundle blobs(double rho, double sigma, std::uint64_t seed) {
  BlobSpec s;
  s.n_categories = 4;
  s.cat_dims = 4;
  s.n_domains_total = 4;
  s.dom_dims = 4;
  s.noise_dims = 4;
  s.gamma_dom = 1.0;
  s.sigma_x = sigma;
  s.rho = rho;
  s.n_per_domain = 150;
  const std::vector<int> ids = {0, 1, 2, 3};
  return generate(s, ids, seed);
}

UdgSplit split_of(const DatasetBundle& b, std::uint64_t seed) {
  SplitParams p;
  p.source_domains = {0, 1, 2};
  p.target_domains = {3};
  p.labeled_categories = {0, 1, 2, 3};
  p.label_fraction = 0.3;
  return make_split(b, Setting::kAllCorrelated, p, seed);
}

}  // namespace

TEST(Probe, OneHotEmbeddingsAreFitPerfectly) {
  DenseTensor e(Shape{40, 4});
  std::vector<int> y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    y[i] = static_cast<int>(i % 4);
    e.at(i, i % 4) = 1.0;
  }
  const LinearProbe p = train_probe_on_embeddings(e, y, 4, ProbeConfig{30, 1e-3, 1e-4, 0});
  const auto pred = predict(p, e);
  EXPECT_EQ(pred, y);
}

TEST(Probe, ZeroEpochsIsZeroInitAndPredictsLowestIndex) {
  Rng rng(1);
  const DenseTensor e = diul::testing::random_matrix(10, 6, rng);
  const std::vector<int> y = {0, 1, 2, 0, 1, 2, 0, 1, 2, 2};
  const LinearProbe p = train_probe_on_embeddings(e, y, 3, ProbeConfig{0, 1e-3, 1e-4, 0});
  EXPECT_EQ(p.weight, DenseTensor(Shape{6, 3}));
  EXPECT_EQ(p.bias, DenseTensor(Shape{3}));
  EXPECT_EQ(predict(p, e), std::vector<int>(10, 0));
}

TEST(Probe, EmptyLabeledSetIsAContractError) {
  const std::vector<int> none;
  EXPECT_THROW(train_probe_on_embeddings(DenseTensor(Shape{0, 3}), none, 2, ProbeConfig{}), ContractError);
}

TEST(Probe, PredictionInvariantToCommonLogitShift) {
  Rng rng(2);
  LinearProbe p{diul::testing::random_matrix(5, 3, rng), DenseTensor::vector({0.1, -0.2, 0.3})};
  const DenseTensor e = diul::testing::random_matrix(50, 5, rng);
  const auto before = predict(p, e);
  for (double& b : p.bias.data()) b += 7.5;
  EXPECT_EQ(predict(p, e), before);
}

TEST(Probe, RandomEncoderBeatsChanceOnUncorrelatedBlobs) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DatasetBundle b = blobs(0.0, 0.5, seed);
    const UdgSplit s = split_of(b, seed);
    const EncoderParams enc = init_params({b.feature_dim(), 64, 64, 128}, seed + 100);
    const LinearProbe p = train_linear_probe(enc, b, s, ProbeConfig{30, 1e-3, 1e-4, seed});
    EXPECT_GT(evaluate(enc, p, b, s).average, 0.25) << "seed " << seed;
  }
}

TEST(Evaluate, PerfectProbeOnNoiselessData) {
  const DatasetBundle b = blobs(0.5, 0.0, 3);
  const UdgSplit s = split_of(b, 3);
  const std::size_t p = b.feature_dim();
  EncoderParams id = init_params({p, p}, 0);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) id.layers[0].weight.at(i, j) = i == j ? 1.0 : 0.0;
  LinearProbe probe{DenseTensor(Shape{p, 4}), DenseTensor(Shape{4})};
  for (std::size_t c = 0; c < 4; ++c) probe.weight.at(c, c) = 1.0;
  const Metrics m = evaluate(id, probe, b, s);
  EXPECT_EQ(m.overall, 1.0);
  EXPECT_EQ(m.average, 1.0);
  for (const auto& [d, acc] : m.per_domain) EXPECT_EQ(acc.accuracy, 1.0);
  EXPECT_EQ(evaluate(id, probe, b, s), m);
}

TEST(Metrics, UnequalDomainsSeparateOverallFromAverage) {
  std::vector<int> pred, truth, dom;
  for (int i = 0; i < 10; ++i) pred.push_back(1), truth.push_back(1), dom.push_back(0);
  for (int i = 0; i < 90; ++i) pred.push_back(0), truth.push_back(1), dom.push_back(1);
  const Metrics m = compute_metrics(pred, truth, dom);
  EXPECT_DOUBLE_EQ(m.overall, 0.10);
  EXPECT_DOUBLE_EQ(m.average, 0.50);
  EXPECT_EQ(m.per_domain.at(0).n, 10u);
  EXPECT_EQ(m.per_domain.at(1).correct, 0u);
  EXPECT_EQ(m.total(), 100u);
}

TEST(Metrics, EqualDomainsGiveEqualOverallAndAverage) {
  Rng rng(4);
  std::bernoulli_distribution coin(0.6);
  for (int t = 0; t < 50; ++t) {
    std::vector<int> pred, truth, dom;
    for (int d = 0; d < 3; ++d)
      for (int i = 0; i < 40; ++i) pred.push_back(coin(rng)), truth.push_back(1), dom.push_back(d);
    const Metrics m = compute_metrics(pred, truth, dom);
    EXPECT_DOUBLE_EQ(m.overall, m.average);
  }
}

TEST(Metrics, CsvLayout) {
  const std::vector<int> pred = {1, 0, 1}, truth = {1, 1, 1}, dom = {2, 2, 3};
  const Metrics m = compute_metrics(pred, truth, dom);
  const std::vector<std::string> names = {"a", "b", "sketch", "quickdraw"};
  EXPECT_EQ(metrics_csv(m, "diul", 4, names),
            "variant,seed,domain,n,accuracy\n"
            "diul,4,sketch,2,0.500000\n"
            "diul,4,quickdraw,1,1.000000\n"
            "diul,4,overall,3,0.666667\n"
            "diul,4,average,3,0.750000\n");
}
