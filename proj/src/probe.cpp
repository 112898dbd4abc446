#include "diul/probe.hpp"

#include <cstdio>

#include "diul/error.hpp"
#include "diul/tape.hpp"

namespace diul {

LinearProbe train_probe_on_embeddings(const DenseTensor& embeddings, std::span<const int> labels,
                                      int n_categories, const ProbeConfig& config) {
  if (embeddings.rank() != 2 || embeddings.rows() == 0) throw ContractError("probe: no labeled samples");
  if (labels.size() != embeddings.rows()) throw DimensionError("probe: label count differs from rows");
  if (n_categories < 2) throw ContractError("probe: need >= 2 categories");
  if (config.epochs < 0 || !(config.lr >= 0.0)) throw ContractError("probe: bad optimizer settings");
  const auto c = static_cast<std::size_t>(n_categories);
  LinearProbe probe{DenseTensor(Shape{embeddings.cols(), c}, 0.0), DenseTensor(Shape{c}, 0.0)};
  std::vector<int> targets(labels.begin(), labels.end());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Tape tape;
    Var x = tape.constant(embeddings);
    Var w = tape.parameter("w", probe.weight);
    Var b = tape.parameter("b", probe.bias);
    const GradientMap g = tape.backward(cross_entropy(add_row_bias(matmul(x, w), b), targets));
    const DenseTensor& gw = g.at("w");
    const DenseTensor& gb = g.at("b");
    for (std::size_t i = 0; i < probe.weight.numel(); ++i)
      probe.weight[i] -= config.lr * (gw[i] + config.weight_decay * probe.weight[i]);
    for (std::size_t i = 0; i < probe.bias.numel(); ++i) probe.bias[i] -= config.lr * gb[i];
  }
  return probe;
}

LinearProbe train_linear_probe(const EncoderParams& encoder, const DatasetBundle& bundle,
                               const UdgSplit& split, const ProbeConfig& config) {
  if (split.finetune_labeled.empty()) throw ContractError("probe: finetune_labeled is empty");
  const DatasetBundle labeled = subset(bundle, split.finetune_labeled);
  return train_probe_on_embeddings(encode(encoder, labeled.features), labeled.category_labels,
                                   bundle.n_categories(), config);
}

std::vector<int> predict(const LinearProbe& probe, const DenseTensor& embeddings) {
  const DenseTensor logits = matmul(embeddings, probe.weight);
  const std::size_t c = probe.bias.numel();
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    double best_v = logits[i * c] + probe.bias[0];
    for (std::size_t j = 1; j < c; ++j) {
      const double v = logits[i * c + j] + probe.bias[j];
      if (v > best_v) {
        best_v = v;
        best = j;
      }
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

std::size_t Metrics::total() const {
  std::size_t n = 0;
  for (const auto& [d, a] : per_domain) n += a.n;
  return n;
}

Metrics compute_metrics(std::span<const int> predicted, std::span<const int> truth, std::span<const int> domains) {
  if (predicted.size() != truth.size() || truth.size() != domains.size())
    throw DimensionError("compute_metrics: input lengths differ");
  Metrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& slot = m.per_domain[domains[i]];
    ++slot.n;
    if (predicted[i] == truth[i]) ++slot.correct;
  }
  std::size_t n = 0, correct = 0;
  double acc_sum = 0.0;
  for (auto& [d, a] : m.per_domain) {
    a.accuracy = static_cast<double>(a.correct) / static_cast<double>(a.n);
    n += a.n;
    correct += a.correct;
    acc_sum += a.accuracy;
  }
  if (n > 0) {
    m.overall = static_cast<double>(correct) / static_cast<double>(n);
    m.average = acc_sum / static_cast<double>(m.per_domain.size());
  }
  return m;
}

Metrics evaluate(const EncoderParams& encoder, const LinearProbe& probe, const DatasetBundle& bundle,
                 const UdgSplit& split) {
  if (split.test.empty()) throw ContractError("evaluate: test set is empty");
  const DatasetBundle test = subset(bundle, split.test);
  const std::vector<int> pred = predict(probe, encode(encoder, test.features));
  return compute_metrics(pred, test.category_labels, test.domain_labels);
}

std::string metrics_csv(const Metrics& m, const std::string& variant, std::uint64_t seed,
                        const std::vector<std::string>& domain_names, bool header) {
  std::string out = header ? "variant,seed,domain,n,accuracy\n" : "";
  char buf[64];
  auto row = [&](const std::string& domain, std::size_t n, double acc) {
    std::snprintf(buf, sizeof buf, "%.6f", acc);
    out += variant + ',' + std::to_string(seed) + ',' + domain + ',' + std::to_string(n) + ',' + buf + '\n';
  };
  for (const auto& [d, a] : m.per_domain) {
    const bool named = d >= 0 && static_cast<std::size_t>(d) < domain_names.size();
    row(named ? domain_names[static_cast<std::size_t>(d)] : std::to_string(d), a.n, a.accuracy);
  }
  row("overall", m.total(), m.overall);
  row("average", m.total(), m.average);
  return out;
}

}  // namespace diul
