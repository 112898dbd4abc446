#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "diul/datagen.hpp"
#include "diul/error.hpp"

using namespace diul;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("diul_test_" + name)).string();
}

// Pearson chi-square statistic of the category x domain contingency table.
double chi_square(const DatasetBundle& b, const std::vector<int>& domains, int n_cat) {
  std::vector<std::vector<double>> obs(n_cat, std::vector<double>(domains.size(), 0.0));
  for (std::size_t i = 0; i < b.size(); ++i) {
    std::size_t dj = 0;
    while (domains[dj] != b.domain_labels[i]) ++dj;
    obs[b.category_labels[i]][dj] += 1.0;
  }
  std::vector<double> rs(n_cat, 0.0), cs(domains.size(), 0.0);
  for (int c = 0; c < n_cat; ++c)
    for (std::size_t d = 0; d < domains.size(); ++d) {
      rs[c] += obs[c][d];
      cs[d] += obs[c][d];
    }
  const double n = static_cast<double>(b.size());
  double chi = 0.0;
  for (int c = 0; c < n_cat; ++c)
    for (std::size_t d = 0; d < domains.size(); ++d) {
      const double e = rs[c] * cs[d] / n;
      chi += (obs[c][d] - e) * (obs[c][d] - e) / e;
    }
  return chi;
}

BlobSpec spec_with(double rho, double sigma) {
  BlobSpec s;
  s.n_categories = 4;
  s.n_domains_total = 5;
  s.cat_dims = 4;
  s.dom_dims = 5;
  s.noise_dims = 3;
  s.sigma_x = sigma;
  s.rho = rho;
  s.n_per_domain = 100;
  return s;
}

}  // namespace

TEST(Generate, IndependentWhenRhoIsZero) {
  // 4 x 3 table, df = 6; chi-square 0.99 quantile. Under independence each
  // seed rejects with probability 0.01, so 3+ rejections in 20 has p ~ 1e-3.
  const double critical = 16.811894;
  const std::vector<int> domains = {0, 1, 2};
  int rejected = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DatasetBundle b = generate(spec_with(0.0, 1.0), domains, seed);
    ASSERT_EQ(b.size(), 300u);
    rejected += chi_square(b, domains, 4) >= critical;
  }
  EXPECT_LE(rejected, 2);
}

TEST(Generate, RhoOnePairsCategoryWithDomain) {
  BlobSpec s = spec_with(1.0, 0.3);
  s.n_categories = 2;
  s.cat_dims = 2;
  const std::vector<int> domains = {3, 1};
  const DatasetBundle b = generate(s, domains, 9);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(b.domain_labels[i], domains[b.category_labels[i]]);
}

TEST(Generate, NoiselessRowsAreTwoHot) {
  BlobSpec s = spec_with(0.5, 0.0);
  s.alpha_cat = 1.0;
  s.gamma_dom = 1.0;
  const std::vector<int> domains = {0, 4};
  const DatasetBundle b = generate(s, domains, 2);
  for (std::size_t i = 0; i < b.size(); ++i) {
    std::vector<double> expect(static_cast<std::size_t>(s.feature_dim()), 0.0);
    expect[static_cast<std::size_t>(b.category_labels[i])] = 1.0;
    expect[static_cast<std::size_t>(s.cat_dims + b.domain_labels[i])] = 1.0;
    const auto row = b.features.row(i);
    EXPECT_TRUE(std::equal(row.begin(), row.end(), expect.begin()));
  }
}

TEST(Generate, PureFunctionOfInputs) {
  const std::vector<int> domains = {0, 1, 2};
  EXPECT_EQ(generate(spec_with(0.9, 0.5), domains, 5), generate(spec_with(0.9, 0.5), domains, 5));
  EXPECT_NE(generate(spec_with(0.9, 0.5), domains, 5), generate(spec_with(0.9, 0.5), domains, 6));
}

TEST(Generate, Preconditions) {
  const std::vector<int> none;
  EXPECT_THROW(generate(spec_with(0.0, 1.0), none, 0), ContractError);
  const std::vector<int> dup = {1, 1};
  EXPECT_THROW(generate(spec_with(0.0, 1.0), dup, 0), ContractError);
  const std::vector<int> out_of_range = {5};
  EXPECT_THROW(generate(spec_with(0.0, 1.0), out_of_range, 0), ContractError);
  BlobSpec bad = spec_with(1.5, 1.0);
  const std::vector<int> ok = {0};
  EXPECT_THROW(generate(bad, ok, 0), ContractError);
}

// With rho = 1 and no noise the domain block alone classifies source data
// perfectly; on a held-out domain it carries no category information.
TEST(Generate, SpuriousTrapOnDomainBlock) {
  BlobSpec s = spec_with(1.0, 0.0);
  s.n_categories = 3;
  s.cat_dims = 3;
  const std::vector<int> source = {0, 1, 2};
  const DatasetBundle src = generate(s, source, 4);
  auto dom_rule = [&](std::span<const double> row) {
    for (int c = 0; c < 3; ++c)
      if (row[static_cast<std::size_t>(s.cat_dims + source[c])] > 0.5) return c;
    return 0;
  };
  for (std::size_t i = 0; i < src.size(); ++i) EXPECT_EQ(dom_rule(src.features.row(i)), src.category_labels[i]);

  const std::vector<int> target = {4};
  const DatasetBundle tgt = generate(s, target, 4);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < tgt.size(); ++i) correct += dom_rule(tgt.features.row(i)) == tgt.category_labels[i];
  EXPECT_NEAR(static_cast<double>(correct) / tgt.size(), 1.0 / 3.0, 0.1);
}

TEST(Augment, IdentitySpecIsIdentity) {
  const std::vector<double> x = {0.5, -1.25, 3.0, 0.0};
  Rng rng(1);
  EXPECT_EQ(augment(x, AugmentSpec{0.0, 0.0, 0.0}, rng), x);
}

TEST(Augment, FullMaskIsZero) {
  const std::vector<double> x = {0.5, -1.25, 3.0, 7.0};
  Rng rng(1);
  EXPECT_EQ(augment(x, AugmentSpec{0.3, 0.2, 1.0}, rng), std::vector<double>(4, 0.0));
}

TEST(Augment, ReproducibleAndMasksExactlyFloorFraction) {
  const std::vector<double> x = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  const AugmentSpec spec{0.1, 0.1, 0.25};
  Rng a(77), b(77);
  const auto xa = augment(x, spec, a), xb = augment(x, spec, b);
  EXPECT_EQ(xa, xb);
  EXPECT_EQ(std::count(xa.begin(), xa.end(), 0.0), 3);
  Rng c(78);
  EXPECT_NE(augment(x, spec, c), xa);
}

TEST(DatasetFile, RoundTripIsBitExact) {
  const std::vector<int> domains = {0, 2};
  const DatasetBundle b = generate(spec_with(0.7, 0.8), domains, 17);
  const std::string path = temp_path("roundtrip.udg");
  write_dataset(b, path);
  EXPECT_EQ(read_dataset(path), b);
  fs::remove(path);
}

TEST(DatasetFile, SizeFollowsLayout) {
  const std::size_t n = 10000, p = 32;
  DatasetBundle b;
  b.features = DenseTensor(Shape{n, p}, 0.25);
  b.category_labels.assign(n, 1);
  b.domain_labels.assign(n, 0);
  b.category_names = {"cat", "dog"};
  b.domain_names = {"photo", "sketch", "painting"};
  const std::size_t tables = (4 + (4 + 3) + (4 + 3)) + (4 + (4 + 5) + (4 + 6) + (4 + 8));
  EXPECT_EQ(encode_dataset(b).size(), kDatasetHeaderBytes + tables + 4 * n * p + 2 * n + 2 * n);
}

TEST(DatasetFile, BadMagicIsAFormatError) {
  const std::vector<int> domains = {0};
  std::string bytes = encode_dataset(generate(spec_with(0.0, 1.0), domains, 1));
  bytes[3] = 'X';
  try {
    decode_dataset(bytes);
    FAIL() << "expected a format error";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(DatasetFile, TruncationReportsOffset) {
  const std::vector<int> domains = {0};
  const std::string bytes = encode_dataset(generate(spec_with(0.0, 1.0), domains, 1));
  EXPECT_THROW(decode_dataset(bytes.substr(0, bytes.size() - 7)), FormatError);
  EXPECT_THROW(decode_dataset(bytes.substr(0, 10)), FormatError);
  EXPECT_THROW(decode_dataset(bytes + "extra"), FormatError);
}
