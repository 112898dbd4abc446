#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "diul/error.hpp"
#include "diul/splits.hpp"
#include "split_cases.hpp"

using namespace diul;

namespace {

std::set<int> domains_of(const std::vector<std::size_t>& idx, const DatasetBundle& b) {
  std::set<int> s;
  for (auto i : idx) s.insert(b.domain_labels[i]);
  return s;
}

std::set<int> categories_of(const std::vector<std::size_t>& idx, const DatasetBundle& b) {
  std::set<int> s;
  for (auto i : idx) s.insert(b.category_labels[i]);
  return s;
}

DatasetBundle four_domains_ten_categories(std::uint64_t seed) {
  BlobSpec s;
  s.n_categories = 10;
  s.cat_dims = 10;
  s.n_domains_total = 4;
  s.dom_dims = 4;
  s.noise_dims = 2;
  s.n_per_domain = 300;
  const std::vector<int> ids = {0, 1, 2, 3};
  return generate(s, ids, seed);
}

}  // namespace

TEST(MakeSplit, DomainCorrelatedSeparatesCategories) {
  const DatasetBundle b = four_domains_ten_categories(1);
  SplitParams p;
  p.source_domains = {0, 1, 2};
  p.target_domains = {3};
  p.labeled_categories = {0, 1, 2, 3};
  p.unlabeled_categories = {4, 5, 6, 7, 8, 9};
  const UdgSplit s = make_split(b, Setting::kDomainCorrelated, p, 5);

  const auto pre_c = categories_of(s.pretrain_unlabeled, b), ft_c = categories_of(s.finetune_labeled, b);
  for (int c : pre_c) EXPECT_EQ(ft_c.count(c), 0u);
  EXPECT_EQ(domains_of(s.pretrain_unlabeled, b), (std::set<int>{0, 1, 2}));
  EXPECT_EQ(domains_of(s.finetune_labeled, b), (std::set<int>{0, 1, 2}));
  EXPECT_EQ(categories_of(s.test, b), ft_c);
  EXPECT_TRUE(validate_split(s, b).ok);
}

TEST(MakeSplit, AllCorrelatedFullLabelsFinetuneEqualsPretrain) {
  const DatasetBundle b = four_domains_ten_categories(2);
  SplitParams p;
  p.source_domains = {0, 1};
  p.target_domains = {2, 3};
  p.labeled_categories = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  p.label_fraction = 1.0;
  p.validation_fraction = 0.1;
  const UdgSplit s = make_split(b, Setting::kAllCorrelated, p, 9);
  EXPECT_EQ(s.finetune_labeled, s.pretrain_unlabeled);

  std::size_t universe = 0;
  for (std::size_t i = 0; i < b.size(); ++i) universe += b.domain_labels[i] <= 1;
  EXPECT_EQ(s.finetune_labeled.size() + s.validation.size(), universe);
}

TEST(MakeSplit, LabelFractionIsFlooredPerCell) {
  BlobSpec spec;
  spec.n_categories = 4;
  spec.cat_dims = 4;
  spec.n_domains_total = 4;
  spec.dom_dims = 4;
  spec.noise_dims = 0;
  spec.rho = 0.3;
  // 6367 + 6367 + 6368 = 19102 source samples, plus a target domain.
  spec.n_per_domain = 6367;
  const std::vector<int> g1 = {0, 1};
  DatasetBundle b = generate(spec, g1, 1);
  spec.n_per_domain = 6368;
  const std::vector<int> g2 = {2};
  b = concat(b, generate(spec, g2, 2));
  spec.n_per_domain = 500;
  const std::vector<int> g3 = {3};
  b = concat(b, generate(spec, g3, 3));

  SplitParams p;
  p.source_domains = {0, 1, 2};
  p.target_domains = {3};
  p.labeled_categories = {0, 1, 2, 3};
  p.label_fraction = 0.05;
  p.validation_fraction = 0.0;
  const UdgSplit s = make_split(b, Setting::kAllCorrelated, p, 4);

  std::map<std::pair<int, int>, std::size_t> cells;
  std::size_t n_source = 0;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b.domain_labels[i] != 3) {
      ++cells[{b.domain_labels[i], b.category_labels[i]}];
      ++n_source;
    }
  ASSERT_EQ(n_source, 19102u);
  std::size_t expected = 0;
  for (const auto& [cell, n] : cells) expected += static_cast<std::size_t>(std::floor(0.05 * static_cast<double>(n)));
  EXPECT_EQ(s.finetune_labeled.size(), expected);
}

TEST(MakeSplit, DeterministicGivenSeed) {
  const DatasetBundle b = four_domains_ten_categories(3);
  SplitParams p;
  p.source_domains = {0, 1, 2};
  p.target_domains = {3};
  p.labeled_categories = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  p.label_fraction = 0.1;
  EXPECT_EQ(make_split(b, Setting::kAllCorrelated, p, 7), make_split(b, Setting::kAllCorrelated, p, 7));
  EXPECT_NE(make_split(b, Setting::kAllCorrelated, p, 7).finetune_labeled,
            make_split(b, Setting::kAllCorrelated, p, 8).finetune_labeled);
}

TEST(MakeSplit, InfeasibleRequestsNameTheEquation) {
  const DatasetBundle b = four_domains_ten_categories(4);
  SplitParams p;
  p.source_domains = {0, 1};
  p.target_domains = {1, 3};
  p.labeled_categories = {0, 1};
  try {
    make_split(b, Setting::kAllCorrelated, p, 0);
    FAIL() << "expected a constraint error";
  } catch (const ConstraintError& e) {
    EXPECT_EQ(e.equation(), "Eq. 1");
  }

  p.target_domains = {3};
  p.unlabeled_domains = {1, 2};
  EXPECT_THROW(make_split(b, Setting::kUncorrelated, p, 0), ConstraintError);  // domains overlap
  p.unlabeled_domains = {2};
  p.unlabeled_categories = {1, 2};
  EXPECT_THROW(make_split(b, Setting::kUncorrelated, p, 0), ConstraintError);  // categories overlap

  SplitParams unknown = p;
  unknown.target_domains = {7};
  EXPECT_THROW(make_split(b, Setting::kAllCorrelated, unknown, 0), ContractError);
}

TEST(ValidateSplit, InjectedTargetSampleCitesEq1) {
  const DatasetBundle b = four_domains_ten_categories(5);
  SplitParams p;
  p.source_domains = {0, 1, 2};
  p.target_domains = {3};
  p.labeled_categories = {0, 1, 2, 3};
  p.label_fraction = 0.2;
  UdgSplit s = make_split(b, Setting::kAllCorrelated, p, 1);
  ASSERT_TRUE(validate_split(s, b).ok);

  s.pretrain_unlabeled.push_back(s.test.front());
  s.test.erase(s.test.begin());
  const SplitReport r = validate_split(s, b);
  EXPECT_FALSE(r.ok);
  EXPECT_TRUE(std::any_of(r.violations.begin(), r.violations.end(),
                          [](const Violation& v) { return v.equation == "Eq. 1"; }));
}

TEST(ValidateSplit, MissingTestCategoryCitesEq2) {
  const DatasetBundle b = four_domains_ten_categories(6);
  SplitParams p;
  p.source_domains = {0, 1, 2};
  p.target_domains = {3};
  p.labeled_categories = {0, 1, 2, 3};
  UdgSplit s = make_split(b, Setting::kAllCorrelated, p, 1);
  std::erase_if(s.test, [&](std::size_t i) { return b.category_labels[i] == 2; });
  const SplitReport r = validate_split(s, b);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.violations.front().equation, "Eq. 2");
}

TEST(ValidateSplit, OutOfRangeIndexIsAContractError) {
  const DatasetBundle b = four_domains_ten_categories(7);
  SplitParams p;
  p.source_domains = {0};
  p.target_domains = {3};
  p.labeled_categories = {0, 1};
  UdgSplit s = make_split(b, Setting::kAllCorrelated, p, 1);
  s.test.push_back(b.size());
  EXPECT_THROW(validate_split(s, b), ContractError);
}

TEST(SplitFile, JsonRoundTrip) {
  const DatasetBundle b = four_domains_ten_categories(8);
  SplitParams p;
  p.source_domains = {0, 1};
  p.unlabeled_domains = {2};
  p.target_domains = {3};
  p.labeled_categories = {0, 1, 2};
  p.unlabeled_categories = {5, 6};
  p.label_fraction = 0.3;
  const UdgSplit s = make_split(b, Setting::kUncorrelated, p, 12);
  EXPECT_EQ(split_from_json(split_to_json(s)), s);

  const auto path = (std::filesystem::temp_directory_path() / "diul_test_split.json").string();
  write_split(s, path);
  EXPECT_EQ(read_split(path), s);
  std::filesystem::remove(path);
}

// Property: every feasible random request yields a split that validates, in
// every setting.
TEST(SplitProperty, RandomRequestsAlwaysValidate) {
  Rng rng(99);
  for (Setting setting : {Setting::kAllCorrelated, Setting::kDomainCorrelated, Setting::kCategoryCorrelated,
                          Setting::kUncorrelated}) {
    for (int i = 0; i < 250; ++i) {
      const diul::testing::SplitCase c = diul::testing::random_split_case(setting, rng);
      UdgSplit s;
      ASSERT_NO_THROW(s = make_split(c.bundle, c.setting, c.params, c.seed)) << to_string(setting) << " #" << i;
      const SplitReport r = validate_split(s, c.bundle);
      EXPECT_TRUE(r.ok) << to_string(setting) << " #" << i << ": "
                        << (r.violations.empty() ? "" : r.violations.front().message);
    }
  }
}
