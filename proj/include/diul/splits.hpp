#pragma once

// UDG data splits: which samples are seen unlabeled during pretraining, which
// carry labels for the probe, which are held out for validation, and which
// form the unseen-domain test set.
//
// Support constraints checked here:
//   Eq. 1  Supp(D_test) disjoint from Supp(D_pretrain) U Supp(D_finetune)
//   Eq. 2  Supp(Y_test) == Supp(Y_finetune)
// plus the per-setting relation between pretrain and finetune supports.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "diul/datagen.hpp"

namespace diul {

enum class Setting { kAllCorrelated, kDomainCorrelated, kCategoryCorrelated, kUncorrelated };

std::string to_string(Setting s);
/// Accepts "all_correlated", "domain_correlated", "category_correlated",
/// "uncorrelated".
std::optional<Setting> parse_setting(const std::string& name);

struct SplitParams {
  std::vector<int> source_domains;        // domains of the labeled data
  std::vector<int> unlabeled_domains;     // pretrain domains; empty means source_domains
  std::vector<int> target_domains;        // test domains
  std::vector<int> labeled_categories;
  std::vector<int> unlabeled_categories;  // empty means labeled_categories
  double label_fraction = 1.0;            // per (domain, category) cell
  double validation_fraction = 0.1;       // per cell, carved before labeling

  bool operator==(const SplitParams&) const = default;
};

struct UdgSplit {
  Setting setting = Setting::kAllCorrelated;
  SplitParams params;
  std::uint64_t seed = 0;
  std::vector<std::size_t> pretrain_unlabeled;
  std::vector<std::size_t> finetune_labeled;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;

  bool operator==(const UdgSplit&) const = default;
};

struct Violation {
  std::string equation;  // "Eq. 1", "Eq. 2", "setting" or "disjoint"
  std::string message;
};

struct SplitReport {
  bool ok = true;
  std::vector<Violation> violations;
};

/// Builds a split for one bundle. Each (domain, category) cell of the labeled
/// universe is shuffled; floor(validation_fraction*n) samples go to
/// validation, then max(1, floor(label_fraction*n)) (capped by what is left)
/// to finetune. Under all_correlated every non-validation sample of the
/// labeled universe is also a pretrain sample (labels are hidden there);
/// the other settings pretrain on unlabeled_domains x unlabeled_categories.
/// Throws ConstraintError naming the violated equation for infeasible
/// requests and ContractError for unknown ids.
UdgSplit make_split(const DatasetBundle& bundle, Setting setting, const SplitParams& params,
                    std::uint64_t seed);

/// Re-derives every support relation from the index sets themselves.
/// Throws ContractError on out-of-range indices.
SplitReport validate_split(const UdgSplit& split, const DatasetBundle& bundle);

nlohmann::json split_to_json(const UdgSplit& split);
UdgSplit split_from_json(const nlohmann::json& doc);
void write_split(const UdgSplit& split, const std::string& path);
UdgSplit read_split(const std::string& path);

}  // namespace diul
