#include "diul/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "diul/error.hpp"
#include "diul/rng.hpp"

namespace diul {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("short write to '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

UdgSplit split_for(const ExperimentConfig& config, const DatasetBundle& bundle, std::uint64_t run_seed) {
  return make_split(bundle, config.split.setting, config.split.params, stage_seed(run_seed, SeedStage::kSplit));
}

DomainWeighter weighter_for(const ExperimentConfig& config, const DatasetBundle& bundle, const UdgSplit& split,
                            std::uint64_t run_seed) {
  DomainClassifierConfig dc = config.domain_classifier;
  dc.seed = stage_seed(run_seed, SeedStage::kDomainClassifier);
  return train_domain_classifier(subset(bundle, split.pretrain_unlabeled), dc);
}

PretrainConfig pretrain_config_for(const ExperimentConfig& config, std::uint64_t run_seed) {
  PretrainConfig pc = config.pretrain;
  pc.seed = stage_seed(run_seed, SeedStage::kPretrain);
  return pc;
}

ProbeConfig probe_config_for(const ExperimentConfig& config, std::uint64_t run_seed) {
  ProbeConfig pc = config.probe;
  pc.seed = stage_seed(run_seed, SeedStage::kProbe);
  return pc;
}

Checkpoint random_init_checkpoint(const ExperimentConfig& config, std::size_t input_dim, std::uint64_t run_seed) {
  Checkpoint c;
  c.variant = "random_init";
  c.query = initial_encoder(pretrain_config_for(config, run_seed), input_dim);
  c.key = c.query;
  return c;
}

std::vector<ComparisonRow> compare_variants(const std::vector<RunRecord>& runs,
                                            const std::vector<std::string>& variant_order) {
  std::vector<ComparisonRow> rows;
  for (const auto& variant : variant_order) {
    ComparisonRow row;
    row.variant = variant;
    std::vector<double> avg;
    for (const auto& r : runs) {
      if (r.variant != variant) continue;
      avg.push_back(r.metrics.average);
      row.mean_overall += r.metrics.overall;
    }
    row.runs = avg.size();
    if (!avg.empty()) {
      for (double a : avg) row.mean_average += a;
      row.mean_average /= static_cast<double>(avg.size());
      row.mean_overall /= static_cast<double>(avg.size());
      double ss = 0.0;
      for (double a : avg) ss += (a - row.mean_average) * (a - row.mean_average);
      row.std_average = avg.size() > 1 ? std::sqrt(ss / static_cast<double>(avg.size() - 1)) : 0.0;
    }
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ComparisonRow& a, const ComparisonRow& b) { return a.mean_average > b.mean_average; });
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].rank = static_cast<int>(i + 1);
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = "rank,variant,runs,mean_average_accuracy,std_average_accuracy,mean_overall_accuracy\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%zu,%.6f,%.6f,%.6f\n", r.rank, r.variant.c_str(), r.runs, r.mean_average,
                  r.std_average, r.mean_overall);
    out += buf;
  }
  return out;
}

std::string format_comparison_table(const std::vector<ComparisonRow>& rows) {
  std::string out = "rank  variant       runs  avg-acc (mean +- sd)   overall-acc\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-5d %-13s %-5zu %.4f +- %.4f      %.4f\n", r.rank, r.variant.c_str(), r.runs,
                  r.mean_average, r.std_average, r.mean_overall);
    out += buf;
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& out_dir, std::ostream* log) {
  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };
  const auto t_start = clock::now();
  fs::create_directories(out_dir);

  ExperimentResult result;
  json artifacts = json::object();
  json timings = json::object();
  std::string metrics_text = "variant,seed,domain,n,accuracy\n";
  const bool need_weighter = std::find(config.variants.begin(), config.variants.end(), "diul") != config.variants.end();

  for (std::uint64_t seed : config.seeds) {
    const std::string seed_dir = "seed_" + std::to_string(seed);
    fs::create_directories(fs::path(out_dir) / seed_dir);
    auto rel = [&](const std::string& name) { return seed_dir + "/" + name; };
    auto abs = [&](const std::string& name) { return (fs::path(out_dir) / seed_dir / name).string(); };

    const DatasetBundle bundle = generate_data(config.data, seed);
    write_dataset(bundle, abs("dataset.udg"));
    const UdgSplit split = split_for(config, bundle, seed);
    write_split(split, abs("split.json"));
    if (log)
      *log << "[seed " << seed << "] N=" << bundle.size() << " pretrain=" << split.pretrain_unlabeled.size()
           << " finetune=" << split.finetune_labeled.size() << " validation=" << split.validation.size()
           << " test=" << split.test.size() << '\n';

    json seed_art = {{"dataset", rel("dataset.udg")}, {"split", rel("split.json")}};
    json seed_time = json::object();

    std::optional<DomainWeighter> weighter;
    if (need_weighter) {
      const auto t0 = clock::now();
      weighter = weighter_for(config, bundle, split, seed);
      seed_time["domain_classifier"] = seconds_since(t0);
      if (log)
        *log << "[seed " << seed << "] domain classifier train accuracy "
             << domain_accuracy(*weighter, subset(bundle, split.pretrain_unlabeled)) << '\n';
    }

    for (const auto& variant : config.variants) {
      const auto t0 = clock::now();
      Checkpoint ckpt;
      std::vector<double> losses;
      if (variant == "random_init") {
        ckpt = random_init_checkpoint(config, bundle.feature_dim(), seed);
      } else {
        const Variant v = *parse_variant(variant);
        PretrainResult pr = pretrain(pretrain_config_for(config, seed), bundle, split,
                                     weighter ? &*weighter : nullptr, v);
        ckpt = std::move(pr.checkpoint);
        losses = std::move(pr.epoch_losses);
        write_text(abs(variant + "_loss.csv"), loss_log_csv(losses, v, seed));
        seed_art["loss_logs"][variant] = rel(variant + "_loss.csv");
      }
      write_checkpoint(ckpt, abs(variant + ".ckpt"));
      seed_art["checkpoints"][variant] = rel(variant + ".ckpt");

      const LinearProbe probe = train_linear_probe(ckpt.query, bundle, split, probe_config_for(config, seed));
      const Metrics m = evaluate(ckpt.query, probe, bundle, split);
      metrics_text += metrics_csv(m, variant, seed, bundle.domain_names, false);
      seed_time[variant] = seconds_since(t0);
      if (log) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "[seed %llu] %-12s target avg %.4f overall %.4f (%.1fs)\n",
                      static_cast<unsigned long long>(seed), variant.c_str(), m.average, m.overall,
                      seconds_since(t0));
        *log << buf;
      }
      result.runs.push_back(RunRecord{variant, seed, m, std::move(losses)});
    }
    artifacts[std::to_string(seed)] = seed_art;
    timings[std::to_string(seed)] = seed_time;
  }

  result.comparison = compare_variants(result.runs, config.variants);
  write_text((fs::path(out_dir) / "metrics.csv").string(), metrics_text);
  write_text((fs::path(out_dir) / "comparison.csv").string(), comparison_csv(result.comparison));
  timings["total_seconds"] = seconds_since(t_start);
  write_text((fs::path(out_dir) / "timings.json").string(), timings.dump(2) + "\n");

  result.manifest = json{{"tool", kToolName},
                         {"version", kToolVersion},
                         {"config_digest", config_digest(config)},
                         {"config", config_to_json(config)},
                         {"seeds", config.seeds},
                         {"variants", config.variants},
                         {"artifacts", artifacts},
                         {"metrics", "metrics.csv"},
                         {"comparison", "comparison.csv"},
                         {"timings", "timings.json"}};
  write_text((fs::path(out_dir) / "manifest.json").string(), result.manifest.dump(2) + "\n");
  return result;
}

ExperimentResult replay_manifest(const std::string& manifest_path, const std::string& out_dir, std::ostream* log) {
  json doc;
  try {
    doc = json::parse(read_text(manifest_path));
  } catch (const json::exception& e) {
    throw SchemaError("<manifest>", e.what());
  }
  if (!doc.is_object() || !doc.contains("config")) throw SchemaError("config", "manifest has no config section");
  const ExperimentConfig config = parse_config(doc.at("config"));
  if (doc.contains("config_digest") && doc.at("config_digest") != config_digest(config))
    throw SchemaError("config_digest", "does not match the embedded config");
  return run_experiment(config, out_dir, log);
}

}  // namespace diul
