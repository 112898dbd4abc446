#pragma once

// Linear probe on frozen embeddings and the per-domain accuracy report.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "diul/datagen.hpp"
#include "diul/encoder.hpp"
#include "diul/splits.hpp"

namespace diul {

struct ProbeConfig {
  int epochs = 30;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
};

struct LinearProbe {
  DenseTensor weight;  // d_f x C
  DenseTensor bias;    // C
  bool operator==(const LinearProbe&) const = default;
};

/// Full-batch gradient descent on softmax cross-entropy, starting from zeros.
LinearProbe train_probe_on_embeddings(const DenseTensor& embeddings, std::span<const int> labels,
                                      int n_categories, const ProbeConfig& config);

/// Encodes split.finetune_labeled with the frozen encoder and fits the probe.
LinearProbe train_linear_probe(const EncoderParams& encoder, const DatasetBundle& bundle,
                               const UdgSplit& split, const ProbeConfig& config);

/// Argmax over probe logits; ties go to the lowest category index.
std::vector<int> predict(const LinearProbe& probe, const DenseTensor& embeddings);

struct DomainAccuracy {
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  bool operator==(const DomainAccuracy&) const = default;
};

struct Metrics {
  std::map<int, DomainAccuracy> per_domain;
  double overall = 0.0;  // sample-weighted
  double average = 0.0;  // unweighted mean over domains

  std::size_t total() const;
  bool operator==(const Metrics&) const = default;
};

Metrics compute_metrics(std::span<const int> predicted, std::span<const int> truth, std::span<const int> domains);

/// Accuracy of the probe on split.test, broken down by domain.
Metrics evaluate(const EncoderParams& encoder, const LinearProbe& probe, const DatasetBundle& bundle,
                 const UdgSplit& split);

/// Rows `variant,seed,domain,n,accuracy`, one per domain, then the
/// `overall` and `average` summary rows. Pass `header` to emit the header.
std::string metrics_csv(const Metrics& m, const std::string& variant, std::uint64_t seed,
                        const std::vector<std::string>& domain_names, bool header = true);

}  // namespace diul
