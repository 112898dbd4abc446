#include "diul/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "diul/error.hpp"
#include "diul/rng.hpp"

namespace diul {

std::string to_string(Setting s) {
  switch (s) {
    case Setting::kAllCorrelated: return "all_correlated";
    case Setting::kDomainCorrelated: return "domain_correlated";
    case Setting::kCategoryCorrelated: return "category_correlated";
    case Setting::kUncorrelated: return "uncorrelated";
  }
  return "unknown";
}

std::optional<Setting> parse_setting(const std::string& name) {
  for (Setting s : {Setting::kAllCorrelated, Setting::kDomainCorrelated,
                    Setting::kCategoryCorrelated, Setting::kUncorrelated})
    if (to_string(s) == name) return s;
  return std::nullopt;
}

namespace {

using IdSet = std::set<int>;

IdSet to_set(const std::vector<int>& v) { return IdSet(v.begin(), v.end()); }

bool disjoint(const IdSet& a, const IdSet& b) {
  return std::none_of(a.begin(), a.end(), [&](int x) { return b.count(x) > 0; });
}

std::string join_names(const IdSet& ids, const std::vector<std::string>& names) {
  std::string out;
  for (int id : ids) {
    if (!out.empty()) out += ", ";
    out += (id >= 0 && static_cast<std::size_t>(id) < names.size()) ? names[static_cast<std::size_t>(id)]
                                                                    : std::to_string(id);
  }
  return "{" + out + "}";
}

IdSet intersect(const IdSet& a, const IdSet& b) {
  IdSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

IdSet sym_diff(const IdSet& a, const IdSet& b) {
  IdSet out;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(),
                                std::inserter(out, out.end()));
  return out;
}

struct Supports {
  IdSet domains;
  IdSet categories;
};

Supports supports_of(const std::vector<std::size_t>& idx, const DatasetBundle& b) {
  Supports s;
  for (std::size_t i : idx) {
    s.domains.insert(b.domain_labels[i]);
    s.categories.insert(b.category_labels[i]);
  }
  return s;
}

// Pretrain/finetune support relation required by each setting:
// {domains equal?, categories equal?}; "not equal" means disjoint.
std::pair<bool, bool> setting_relation(Setting s) {
  switch (s) {
    case Setting::kAllCorrelated: return {true, true};
    case Setting::kDomainCorrelated: return {true, false};
    case Setting::kCategoryCorrelated: return {false, true};
    case Setting::kUncorrelated: return {false, false};
  }
  return {true, true};
}

void check_ids(const std::vector<int>& ids, int limit, const char* what) {
  std::set<int> seen;
  for (int id : ids) {
    if (id < 0 || id >= limit)
      throw ContractError(std::string("make_split: ") + what + " id " + std::to_string(id) +
                          " does not exist in the bundle");
    if (!seen.insert(id).second)
      throw ContractError(std::string("make_split: duplicate ") + what + " id " + std::to_string(id));
  }
}

}  // namespace

UdgSplit make_split(const DatasetBundle& bundle, Setting setting, const SplitParams& params,
                    std::uint64_t seed) {
  bundle.validate();
  SplitParams p = params;
  if (p.unlabeled_domains.empty()) p.unlabeled_domains = p.source_domains;
  if (p.unlabeled_categories.empty()) p.unlabeled_categories = p.labeled_categories;

  if (p.source_domains.empty()) throw ContractError("make_split: source_domains is empty");
  if (p.target_domains.empty()) throw ContractError("make_split: target_domains is empty");
  if (p.labeled_categories.empty()) throw ContractError("make_split: labeled_categories is empty");
  if (!(p.label_fraction > 0.0 && p.label_fraction <= 1.0))
    throw ContractError("make_split: label_fraction must lie in (0,1]");
  if (!(p.validation_fraction >= 0.0 && p.validation_fraction < 1.0))
    throw ContractError("make_split: validation_fraction must lie in [0,1)");
  check_ids(p.source_domains, bundle.n_domains(), "domain");
  check_ids(p.unlabeled_domains, bundle.n_domains(), "domain");
  check_ids(p.target_domains, bundle.n_domains(), "domain");
  check_ids(p.labeled_categories, bundle.n_categories(), "category");
  check_ids(p.unlabeled_categories, bundle.n_categories(), "category");

  const IdSet src = to_set(p.source_domains), unl = to_set(p.unlabeled_domains),
              tgt = to_set(p.target_domains);
  const IdSet lab_c = to_set(p.labeled_categories), unl_c = to_set(p.unlabeled_categories);

  IdSet train_domains = src;
  train_domains.insert(unl.begin(), unl.end());
  if (auto overlap = intersect(tgt, train_domains); !overlap.empty())
    throw ConstraintError("Eq. 1", "target domains " + join_names(overlap, bundle.domain_names) +
                                       " also appear in pretrain/finetune domains");

  const auto [dom_equal, cat_equal] = setting_relation(setting);
  const std::string tag = to_string(setting);
  if (dom_equal && unl != src)
    throw ConstraintError("setting", tag + " requires unlabeled and labeled domain sets to be equal");
  if (!dom_equal && !disjoint(unl, src))
    throw ConstraintError("setting", tag + " requires disjoint unlabeled and labeled domain sets, shared " +
                                         join_names(intersect(unl, src), bundle.domain_names));
  if (cat_equal && unl_c != lab_c)
    throw ConstraintError("setting", tag + " requires unlabeled and labeled category sets to be equal");
  if (!cat_equal && !disjoint(unl_c, lab_c))
    throw ConstraintError("setting", tag + " requires disjoint unlabeled and labeled category sets, shared " +
                                         join_names(intersect(unl_c, lab_c), bundle.category_names));

  // Bucket samples by (domain, category); std::map keeps cell order fixed.
  std::map<std::pair<int, int>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < bundle.size(); ++i)
    cells[{bundle.domain_labels[i], bundle.category_labels[i]}].push_back(i);

  UdgSplit out;
  out.setting = setting;
  out.params = p;
  out.seed = seed;

  Rng rng(seed);
  for (auto& [key, members] : cells) {
    const auto [d, c] = key;
    if (!src.count(d) || !lab_c.count(c)) continue;
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t n = members.size();
    const auto n_val = static_cast<std::size_t>(std::floor(p.validation_fraction * static_cast<double>(n)));
    const auto want = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(p.label_fraction * static_cast<double>(n))));
    const std::size_t n_ft = std::min(want, n - n_val);
    out.validation.insert(out.validation.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
    out.finetune_labeled.insert(out.finetune_labeled.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val),
                                members.begin() + static_cast<std::ptrdiff_t>(n_val + n_ft));
    if (setting == Setting::kAllCorrelated)
      out.pretrain_unlabeled.insert(out.pretrain_unlabeled.end(),
                                    members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
  }

  const IdSet ft_cats = supports_of(out.finetune_labeled, bundle).categories;
  for (std::size_t i = 0; i < bundle.size(); ++i) {
    const int d = bundle.domain_labels[i], c = bundle.category_labels[i];
    if (setting != Setting::kAllCorrelated && unl.count(d) && unl_c.count(c))
      out.pretrain_unlabeled.push_back(i);
    if (tgt.count(d) && ft_cats.count(c)) out.test.push_back(i);
  }

  for (auto* v : {&out.pretrain_unlabeled, &out.finetune_labeled, &out.validation, &out.test})
    std::sort(v->begin(), v->end());

  if (out.finetune_labeled.empty())
    throw ConstraintError("Eq. 2", "no labeled samples exist for the requested domains/categories");
  if (out.pretrain_unlabeled.empty())
    throw ConstraintError("setting", "no unlabeled samples exist for the requested domains/categories");
  if (out.test.empty())
    throw ConstraintError("Eq. 2", "target domains hold no samples of the labeled categories");

  const SplitReport report = validate_split(out, bundle);
  if (!report.ok) throw ConstraintError(report.violations.front().equation, report.violations.front().message);
  return out;
}

SplitReport validate_split(const UdgSplit& split, const DatasetBundle& bundle) {
  const std::pair<const char*, const std::vector<std::size_t>*> sets[] = {
      {"pretrain_unlabeled", &split.pretrain_unlabeled},
      {"finetune_labeled", &split.finetune_labeled},
      {"validation", &split.validation},
      {"test", &split.test}};
  for (const auto& [name, v] : sets)
    for (std::size_t i : *v)
      if (i >= bundle.size())
        throw ContractError(std::string("validate_split: ") + name + " index " + std::to_string(i) +
                            " out of range for bundle of " + std::to_string(bundle.size()));

  SplitReport r;
  auto fail = [&r](std::string eq, std::string msg) {
    r.ok = false;
    r.violations.push_back({std::move(eq), std::move(msg)});
  };

  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) {
      // all_correlated pretrains on the labeled pool with labels hidden.
      if (split.setting == Setting::kAllCorrelated && a == 0 && b == 1) continue;
      std::set<std::size_t> sa(sets[a].second->begin(), sets[a].second->end());
      for (std::size_t i : *sets[b].second) {
        if (sa.count(i)) {
          fail("disjoint", std::string("sample ") + std::to_string(i) + " is in both " + sets[a].first +
                               " and " + sets[b].first);
          break;
        }
      }
    }
  }

  const Supports pre = supports_of(split.pretrain_unlabeled, bundle);
  const Supports ft = supports_of(split.finetune_labeled, bundle);
  const Supports test = supports_of(split.test, bundle);

  IdSet train_domains = pre.domains;
  train_domains.insert(ft.domains.begin(), ft.domains.end());
  if (auto overlap = intersect(test.domains, train_domains); !overlap.empty())
    fail("Eq. 1", "test domains " + join_names(overlap, bundle.domain_names) +
                      " overlap pretrain/finetune domains");
  if (test.categories != ft.categories)
    fail("Eq. 2", "test and finetune category supports differ on " +
                      join_names(sym_diff(test.categories, ft.categories), bundle.category_names));

  const auto [dom_equal, cat_equal] = setting_relation(split.setting);
  const std::string tag = to_string(split.setting);
  if (dom_equal && pre.domains != ft.domains)
    fail("setting", tag + ": pretrain and finetune domain supports differ on " +
                        join_names(sym_diff(pre.domains, ft.domains), bundle.domain_names));
  if (!dom_equal && !disjoint(pre.domains, ft.domains))
    fail("setting", tag + ": pretrain and finetune share domains " +
                        join_names(intersect(pre.domains, ft.domains), bundle.domain_names));
  if (cat_equal && pre.categories != ft.categories)
    fail("setting", tag + ": pretrain and finetune category supports differ on " +
                        join_names(sym_diff(pre.categories, ft.categories), bundle.category_names));
  if (!cat_equal && !disjoint(pre.categories, ft.categories))
    fail("setting", tag + ": pretrain and finetune share categories " +
                        join_names(intersect(pre.categories, ft.categories), bundle.category_names));
  return r;
}

nlohmann::json split_to_json(const UdgSplit& s) {
  nlohmann::json doc;
  doc["format"] = "udg-split/1";
  doc["setting"] = to_string(s.setting);
  doc["seed"] = s.seed;
  doc["params"] = {{"source_domains", s.params.source_domains},
                   {"unlabeled_domains", s.params.unlabeled_domains},
                   {"target_domains", s.params.target_domains},
                   {"labeled_categories", s.params.labeled_categories},
                   {"unlabeled_categories", s.params.unlabeled_categories},
                   {"label_fraction", s.params.label_fraction},
                   {"validation_fraction", s.params.validation_fraction}};
  doc["pretrain_unlabeled"] = s.pretrain_unlabeled;
  doc["finetune_labeled"] = s.finetune_labeled;
  doc["validation"] = s.validation;
  doc["test"] = s.test;
  return doc;
}

UdgSplit split_from_json(const nlohmann::json& doc) {
  try {
    UdgSplit s;
    auto setting = parse_setting(doc.at("setting").get<std::string>());
    if (!setting) throw SchemaError("setting", "unknown setting");
    s.setting = *setting;
    s.seed = doc.at("seed").get<std::uint64_t>();
    const auto& p = doc.at("params");
    s.params.source_domains = p.at("source_domains").get<std::vector<int>>();
    s.params.unlabeled_domains = p.at("unlabeled_domains").get<std::vector<int>>();
    s.params.target_domains = p.at("target_domains").get<std::vector<int>>();
    s.params.labeled_categories = p.at("labeled_categories").get<std::vector<int>>();
    s.params.unlabeled_categories = p.at("unlabeled_categories").get<std::vector<int>>();
    s.params.label_fraction = p.at("label_fraction").get<double>();
    s.params.validation_fraction = p.at("validation_fraction").get<double>();
    s.pretrain_unlabeled = doc.at("pretrain_unlabeled").get<std::vector<std::size_t>>();
    s.finetune_labeled = doc.at("finetune_labeled").get<std::vector<std::size_t>>();
    s.validation = doc.at("validation").get<std::vector<std::size_t>>();
    s.test = doc.at("test").get<std::vector<std::size_t>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("split", e.what());
  }
}

void write_split(const UdgSplit& split, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << split_to_json(split).dump(2) << '\n';
}

UdgSplit read_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("split", e.what());
  }
  return split_from_json(doc);
}

}  // namespace diul
