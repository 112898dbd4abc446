#include "diul/domainclf.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "diul/error.hpp"
#include "diul/rng.hpp"
#include "diul/tape.hpp"

namespace diul {

int DomainWeighter::index_of(int domain_id) const {
  auto it = std::find(domain_ids.begin(), domain_ids.end(), domain_id);
  return it == domain_ids.end() ? -1 : static_cast<int>(it - domain_ids.begin());
}

DomainWeighter train_domain_classifier(const DatasetBundle& data, const DomainClassifierConfig& config) {
  data.validate();
  if (config.epochs < 0) throw ContractError("domain classifier: epochs must be >= 0");
  if (!(config.lr >= 0.0)) throw ContractError("domain classifier: lr must be >= 0");
  const std::set<int> present(data.domain_labels.begin(), data.domain_labels.end());
  if (present.size() < 2)
    throw DegenerateTrainingError("domain classifier needs >= 2 distinct domains, found " +
                                  std::to_string(present.size()));

  DomainWeighter h;
  h.domain_ids.assign(present.begin(), present.end());
  const std::size_t p = data.feature_dim(), n_dom = h.domain_ids.size();

  Rng rng(config.seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(p + n_dom));
  std::uniform_real_distribution<double> u(-limit, limit);
  h.weight = DenseTensor(Shape{p, n_dom});
  for (double& w : h.weight.data()) w = u(rng);
  h.bias = DenseTensor(Shape{n_dom}, 0.0);

  std::vector<int> targets(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) targets[i] = h.index_of(data.domain_labels[i]);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Tape tape;
    Var x = tape.constant(data.features);
    Var w = tape.parameter("w", h.weight);
    Var b = tape.parameter("b", h.bias);
    Var loss = cross_entropy(add_row_bias(matmul(x, w), b), targets);
    const GradientMap g = tape.backward(loss);
    for (std::size_t i = 0; i < h.weight.numel(); ++i) h.weight[i] -= config.lr * g.at("w")[i];
    for (std::size_t i = 0; i < h.bias.numel(); ++i) h.bias[i] -= config.lr * g.at("b")[i];
  }
  return h;
}

DenseTensor domain_logits(const DomainWeighter& weighter, const DenseTensor& x) {
  if (x.rank() != 2 || x.cols() != weighter.weight.rows())
    throw DimensionError("domain_weights: input " + shape_str(x.shape()) + " for classifier of width " +
                         std::to_string(weighter.weight.rows()));
  DenseTensor z = matmul(x, weighter.weight);
  const std::size_t d = weighter.n_domains();
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) z[i * d + j] += weighter.bias[j];
  return z;
}

DenseTensor domain_weights(const DomainWeighter& weighter, const DenseTensor& x) {
  return softmax_rows(domain_logits(weighter, x));
}

double domain_accuracy(const DomainWeighter& weighter, const DatasetBundle& data) {
  const DenseTensor z = domain_logits(weighter, data.features);
  const std::size_t d = weighter.n_domains();
  std::size_t hit = 0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto row = z.row(i);
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best < d && weighter.domain_ids[best] == data.domain_labels[i]) ++hit;
  }
  return data.size() ? static_cast<double>(hit) / static_cast<double>(data.size()) : 0.0;
}

void write_weighter(binio::Writer& w, const DomainWeighter& h) {
  const std::size_t p = h.weight.rows(), d = h.n_domains();
  w.u32(static_cast<std::uint32_t>(p));
  w.u32(static_cast<std::uint32_t>(d));
  for (int id : h.domain_ids) w.u32(static_cast<std::uint32_t>(id));
  for (double v : h.weight.data()) w.f64(v);
  for (double v : h.bias.data()) w.f64(v);
}

DomainWeighter read_weighter(binio::Reader& r) {
  DomainWeighter h;
  const std::size_t p = r.u32();
  const std::size_t at = r.offset();
  const std::size_t d = r.u32();
  if (d < 1 || d > 0xFFFF) throw FormatError("implausible domain count " + std::to_string(d), at);
  for (std::size_t i = 0; i < d; ++i) h.domain_ids.push_back(static_cast<int>(r.u32()));
  std::vector<double> w(p * d), b(d);
  for (double& v : w) v = r.f64();
  for (double& v : b) v = r.f64();
  h.weight = DenseTensor(Shape{p, d}, std::move(w));
  h.bias = DenseTensor(Shape{d}, std::move(b));
  return h;
}

}  // namespace diul
