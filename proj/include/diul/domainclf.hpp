#pragma once

// Linear domain classifier h(x) = xW + b over the source domains. Its softmax
// gives the per-sample domain posteriors that mix the per-domain contrastive
// terms. Trained once, before contrastive pretraining, and then frozen.

#include <cstdint>
#include <span>
#include <vector>

#include "diul/binio.hpp"
#include "diul/datagen.hpp"
#include "diul/tensor.hpp"

namespace diul {

struct DomainClassifierConfig {
  int epochs = 200;
  double lr = 0.5;
  std::uint64_t seed = 0;
};

struct DomainWeighter {
  DenseTensor weight;            // p x D_source
  DenseTensor bias;              // D_source
  std::vector<int> domain_ids;   // dense index -> original domain id

  std::size_t n_domains() const { return domain_ids.size(); }
  /// Dense index of an original domain id, or -1.
  int index_of(int domain_id) const;
  bool operator==(const DomainWeighter&) const = default;
};

/// Full-batch gradient descent on mean softmax cross-entropy against the
/// domain labels of `data`. Throws DegenerateTrainingError when fewer than
/// two distinct domains are present.
DomainWeighter train_domain_classifier(const DatasetBundle& data, const DomainClassifierConfig& config);

DenseTensor domain_logits(const DomainWeighter& weighter, const DenseTensor& x);
/// Row n holds P(D = d | x_n) over the source domains.
DenseTensor domain_weights(const DomainWeighter& weighter, const DenseTensor& x);
/// Fraction of rows whose argmax matches the label.
double domain_accuracy(const DomainWeighter& weighter, const DatasetBundle& data);

void write_weighter(binio::Writer& w, const DomainWeighter& weighter);
DomainWeighter read_weighter(binio::Reader& r);

}  // namespace diul
