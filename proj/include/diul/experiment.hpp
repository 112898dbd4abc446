#pragma once

// End-to-end protocol runner: generate -> split -> (domain classifier) ->
// pretrain per variant -> linear probe -> per-domain evaluation, repeated
// over seeds. Each stage draws its seed from the run seed via stage_seed(),
// so the individual CLI subcommands reproduce the same artifacts.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "diul/config.hpp"

namespace diul {

inline constexpr const char* kToolName = "diul";
inline constexpr const char* kToolVersion = "1.0.0";

UdgSplit split_for(const ExperimentConfig& config, const DatasetBundle& bundle, std::uint64_t run_seed);
DomainWeighter weighter_for(const ExperimentConfig& config, const DatasetBundle& bundle, const UdgSplit& split,
                            std::uint64_t run_seed);
PretrainConfig pretrain_config_for(const ExperimentConfig& config, std::uint64_t run_seed);
ProbeConfig probe_config_for(const ExperimentConfig& config, std::uint64_t run_seed);
/// Untrained encoder every variant starts from for this seed.
Checkpoint random_init_checkpoint(const ExperimentConfig& config, std::size_t input_dim, std::uint64_t run_seed);

struct RunRecord {
  std::string variant;
  std::uint64_t seed = 0;
  Metrics metrics;
  std::vector<double> epoch_losses;
};

struct ComparisonRow {
  int rank = 0;
  std::string variant;
  std::size_t runs = 0;
  double mean_average = 0.0;
  double std_average = 0.0;
  double mean_overall = 0.0;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  std::vector<ComparisonRow> comparison;
  nlohmann::json manifest;
};

/// Ranks variants by mean average (macro) target accuracy, best first.
std::vector<ComparisonRow> compare_variants(const std::vector<RunRecord>& runs,
                                            const std::vector<std::string>& variant_order);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);
std::string format_comparison_table(const std::vector<ComparisonRow>& rows);

/// Runs the whole protocol and writes, under out_dir:
///   seed_<s>/dataset.udg, seed_<s>/split.json, seed_<s>/<variant>.ckpt,
///   seed_<s>/<variant>_loss.csv, metrics.csv, comparison.csv,
///   timings.json and manifest.json.
/// Everything except timings.json is a deterministic function of the config.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& out_dir, std::ostream* log);

/// Re-runs the experiment recorded in a manifest into out_dir.
ExperimentResult replay_manifest(const std::string& manifest_path, const std::string& out_dir, std::ostream* log);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace diul
