#pragma once

// JSON experiment configuration. Every field has a default; unknown keys,
// wrong types and out-of-range values raise SchemaError with the dotted path
// of the offending field.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "diul/contrastive.hpp"
#include "diul/datagen.hpp"
#include "diul/domainclf.hpp"
#include "diul/probe.hpp"
#include "diul/splits.hpp"

namespace diul {

struct DataGroup {
  std::vector<int> domains;
  int n_per_domain = 100;
  double rho = 0.0;
};

struct DataConfig {
  BlobSpec blob;  // n_per_domain and rho come from each group
  std::vector<DataGroup> groups;
};

struct SplitConfig {
  Setting setting = Setting::kAllCorrelated;
  SplitParams params;
};

struct ExperimentConfig {
  DataConfig data;
  SplitConfig split;
  DomainClassifierConfig domain_classifier;
  PretrainConfig pretrain;
  ProbeConfig probe;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> variants;  // random_init, infonce, diul
};

/// Built-in default: 4 categories, 3 source domains with rho = 0.9 and one
/// held-out target domain, all_correlated split with 10% labels, 5 seeds.
ExperimentConfig default_experiment_config();

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
/// Fully expanded document (defaults filled in); keys are emitted sorted.
nlohmann::json config_to_json(const ExperimentConfig& config);
std::string canonical_config(const ExperimentConfig& config);
/// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string config_digest(const ExperimentConfig& config);

/// Generates every data group with its own derived seed and concatenates them.
DatasetBundle generate_data(const DataConfig& data, std::uint64_t run_seed);

}  // namespace diul
