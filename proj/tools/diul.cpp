// Command-line front end for the DIUL pipeline.
//
//   diul gen        --config cfg.json --out data.udg
//   diul split      --dataset data.udg --config cfg.json --out split.json
//   diul pretrain   --dataset data.udg --split split.json --config cfg.json --variant diul --out model.ckpt
//   diul probe      --dataset data.udg --split split.json --checkpoint model.ckpt --config cfg.json --out m.csv
//   diul experiment --config cfg.json --out-dir runs/exp1
//   diul version
//
// Relative output paths are resolved against $DIUL_OUT_ROOT when it is set.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "diul/error.hpp"
#include "diul/experiment.hpp"
#include "diul/rng.hpp"

namespace fs = std::filesystem;
using namespace diul;

namespace {

std::string out_path(const std::string& p) {
  const char* root = std::getenv("DIUL_OUT_ROOT");
  if (root == nullptr || *root == '\0' || fs::path(p).is_absolute()) return p;
  return (fs::path(root) / p).string();
}

void ensure_parent(const std::string& p) {
  const fs::path parent = fs::path(p).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

ExperimentConfig config_or_default(const std::string& path) {
  return path.empty() ? default_experiment_config() : load_config(path);
}

std::uint64_t pick_seed(const ExperimentConfig& cfg, const std::optional<std::uint64_t>& seed) {
  return seed ? *seed : cfg.seeds.front();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain-irrelevant contrastive pretraining and UDG evaluation"};
  app.require_subcommand(1);

  std::string config_path, dataset_path, split_path, checkpoint_path, out, out_dir, variant, manifest_path;
  std::string loss_log;
  std::optional<std::uint64_t> seed;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset (UDG1 binary)");
  gen->add_option("--config", config_path, "Experiment config JSON (defaults if omitted)");
  gen->add_option("--out", out, "Output dataset path")->required();
  gen->add_option("--seed", seed, "Run seed (default: first entry of config seeds)");

  auto* split = app.add_subcommand("split", "Build, validate and write a UDG split manifest");
  split->add_option("--dataset", dataset_path, "UDG1 dataset")->required()->check(CLI::ExistingFile);
  split->add_option("--config", config_path, "Experiment config JSON");
  split->add_option("--out", out, "Output split JSON")->required();
  split->add_option("--seed", seed, "Run seed");

  auto* pre = app.add_subcommand("pretrain", "Contrastive pretraining (infonce or diul)");
  pre->add_option("--dataset", dataset_path, "UDG1 dataset")->required()->check(CLI::ExistingFile);
  pre->add_option("--split", split_path, "Split JSON")->required()->check(CLI::ExistingFile);
  pre->add_option("--config", config_path, "Experiment config JSON");
  pre->add_option("--variant", variant, "infonce | diul")->required()->check(CLI::IsMember({"infonce", "diul"}));
  pre->add_option("--out", out, "Output checkpoint")->required();
  pre->add_option("--loss-log", loss_log, "Per-epoch loss CSV (default: <out>.loss.csv)");
  pre->add_option("--seed", seed, "Run seed");

  auto* probe = app.add_subcommand("probe", "Fit a linear probe on a frozen encoder and evaluate on the test split");
  probe->add_option("--dataset", dataset_path, "UDG1 dataset")->required()->check(CLI::ExistingFile);
  probe->add_option("--split", split_path, "Split JSON")->required()->check(CLI::ExistingFile);
  auto* ckpt_opt = probe->add_option("--checkpoint", checkpoint_path, "Encoder checkpoint")->check(CLI::ExistingFile);
  bool random_init = false;
  probe->add_flag("--random-init", random_init, "Probe the untrained encoder for this seed")->excludes(ckpt_opt);
  probe->add_option("--config", config_path, "Experiment config JSON");
  probe->add_option("--out", out, "Output metrics CSV")->required();
  probe->add_option("--seed", seed, "Run seed");

  auto* exp = app.add_subcommand("experiment", "Full pipeline over seeds and variants");
  auto* exp_cfg = exp->add_option("--config", config_path, "Experiment config JSON");
  exp->add_option("--manifest", manifest_path, "Replay the run recorded in a manifest")
      ->check(CLI::ExistingFile)
      ->excludes(exp_cfg);
  exp->add_option("--out-dir", out_dir, "Output directory")->required();
  bool quiet = false;
  exp->add_flag("--quiet", quiet, "Only print the comparison table");

  auto* version = app.add_subcommand("version", "Print the tool version");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*version) {
      std::cout << kToolName << ' ' << kToolVersion << '\n';
      return 0;
    }
    if (*gen) {
      const ExperimentConfig cfg = config_or_default(config_path);
      const std::string path = out_path(out);
      ensure_parent(path);
      write_dataset(generate_data(cfg.data, pick_seed(cfg, seed)), path);
      return 0;
    }
    if (*split) {
      const ExperimentConfig cfg = config_or_default(config_path);
      const DatasetBundle bundle = read_dataset(dataset_path);
      const UdgSplit s = split_for(cfg, bundle, pick_seed(cfg, seed));
      const SplitReport report = validate_split(s, bundle);
      if (!report.ok) {
        for (const auto& v : report.violations) std::cerr << "violation (" << v.equation << "): " << v.message << '\n';
        return 3;
      }
      const std::string path = out_path(out);
      ensure_parent(path);
      write_split(s, path);
      return 0;
    }
    if (*pre) {
      const ExperimentConfig cfg = config_or_default(config_path);
      const std::uint64_t run_seed = pick_seed(cfg, seed);
      const DatasetBundle bundle = read_dataset(dataset_path);
      const UdgSplit s = read_split(split_path);
      if (const auto report = validate_split(s, bundle); !report.ok) {
        for (const auto& v : report.violations) std::cerr << "violation (" << v.equation << "): " << v.message << '\n';
        return 3;
      }
      const Variant v = *parse_variant(variant);
      std::optional<DomainWeighter> weighter;
      if (v == Variant::kDiul) weighter = weighter_for(cfg, bundle, s, run_seed);
      const PretrainResult r =
          pretrain(pretrain_config_for(cfg, run_seed), bundle, s, weighter ? &*weighter : nullptr, v);
      const std::string path = out_path(out);
      ensure_parent(path);
      write_checkpoint(r.checkpoint, path);
      write_text(out_path(loss_log.empty() ? out + ".loss.csv" : loss_log), loss_log_csv(r.epoch_losses, v, run_seed));
      return 0;
    }
    if (*probe) {
      const ExperimentConfig cfg = config_or_default(config_path);
      const std::uint64_t run_seed = pick_seed(cfg, seed);
      const DatasetBundle bundle = read_dataset(dataset_path);
      const UdgSplit s = read_split(split_path);
      if (checkpoint_path.empty() && !random_init) throw ContractError("probe needs --checkpoint or --random-init");
      const Checkpoint ckpt = random_init ? random_init_checkpoint(cfg, bundle.feature_dim(), run_seed)
                                          : read_checkpoint(checkpoint_path);
      const LinearProbe p = train_linear_probe(ckpt.query, bundle, s, probe_config_for(cfg, run_seed));
      const Metrics m = evaluate(ckpt.query, p, bundle, s);
      const std::string path = out_path(out);
      ensure_parent(path);
      write_text(path, metrics_csv(m, ckpt.variant, run_seed, bundle.domain_names));
      return 0;
    }
    if (*exp) {
      const std::string dir = out_path(out_dir);
      std::ostream* log = quiet ? nullptr : &std::cerr;
      ExperimentResult r = manifest_path.empty() ? run_experiment(config_or_default(config_path), dir, log)
                                                 : replay_manifest(manifest_path, dir, log);
      std::cout << format_comparison_table(r.comparison);
      return 0;
    }
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return 2;
  } catch (const ConstraintError& e) {
    std::cerr << "constraint error: " << e.what() << '\n';
    return 3;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
