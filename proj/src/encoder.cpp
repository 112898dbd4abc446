#include "diul/encoder.hpp"

#include <cmath>

#include "diul/error.hpp"
#include "diul/rng.hpp"

namespace diul {

void EncoderParams::validate() const {
  if (sizes.size() < 2) throw ContractError("encoder needs at least input and output sizes");
  if (layers.size() + 1 != sizes.size())
    throw ContractError("encoder has " + std::to_string(layers.size()) + " layers for " +
                        std::to_string(sizes.size()) + " sizes");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].weight.shape() != Shape{sizes[i], sizes[i + 1]} ||
        layers[i].bias.shape() != Shape{sizes[i + 1]})
      throw ContractError("encoder layer " + std::to_string(i) + " has incompatible shapes");
  }
}

EncoderParams init_params(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw ContractError("init_params: architecture needs >= 2 sizes");
  for (std::size_t s : sizes)
    if (s == 0) throw ContractError("init_params: layer sizes must be positive");
  EncoderParams p;
  p.sizes = sizes;
  Rng rng(seed);
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const std::size_t fan_in = sizes[i], fan_out = sizes[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Layer layer{DenseTensor(Shape{fan_in, fan_out}), DenseTensor(Shape{fan_out}, 0.0)};
    for (double& w : layer.weight.data()) w = u(rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

std::string weight_name(const std::string& prefix, std::size_t layer) {
  return prefix + ".w" + std::to_string(layer);
}

std::string bias_name(const std::string& prefix, std::size_t layer) {
  return prefix + ".b" + std::to_string(layer);
}

Var encode(Tape& tape, const EncoderParams& params, Var x, const std::string& prefix) {
  params.validate();
  if (x.value().rank() != 2 || x.value().cols() != params.input_dim())
    throw DimensionError("encode: input " + shape_str(x.shape()) + " for encoder of input width " +
                         std::to_string(params.input_dim()));
  Var h = x;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    Var w = tape.parameter(weight_name(prefix, i), params.layers[i].weight);
    Var b = tape.parameter(bias_name(prefix, i), params.layers[i].bias);
    h = add_row_bias(matmul(h, w), b);
    if (i + 1 < params.layers.size()) h = relu(h);
  }
  return l2_normalize_rows(h);
}

DenseTensor encode(const EncoderParams& params, const DenseTensor& x) {
  Tape tape;
  return encode(tape, params, tape.constant(x), "enc").value();
}

EncoderParams ema_update(const EncoderParams& key, const EncoderParams& query, double m) {
  if (key.sizes != query.sizes) throw ContractError("ema_update: architectures differ");
  key.validate();
  query.validate();
  if (!(m >= 0.0 && m <= 1.0)) throw ContractError("ema_update: momentum must lie in [0,1]");
  EncoderParams out = key;
  for (std::size_t l = 0; l < out.layers.size(); ++l) {
    for (auto [dst, src] : {std::pair{&out.layers[l].weight, &query.layers[l].weight},
                            std::pair{&out.layers[l].bias, &query.layers[l].bias}}) {
      for (std::size_t i = 0; i < dst->numel(); ++i) (*dst)[i] = m * (*dst)[i] + (1.0 - m) * (*src)[i];
    }
  }
  return out;
}

EncoderParams sgd_step(const EncoderParams& params, const GradientMap& grads,
                       const std::string& prefix, double lr, double weight_decay) {
  EncoderParams out = params;
  auto step = [&](DenseTensor& t, const std::string& name) {
    auto it = grads.find(name);
    const DenseTensor* g = it == grads.end() ? nullptr : &it->second;
    if (g && g->shape() != t.shape()) throw DimensionError("sgd_step: gradient shape for " + name);
    for (std::size_t i = 0; i < t.numel(); ++i)
      t[i] -= lr * ((g ? (*g)[i] : 0.0) + weight_decay * t[i]);
  };
  for (std::size_t l = 0; l < out.layers.size(); ++l) {
    step(out.layers[l].weight, weight_name(prefix, l));
    step(out.layers[l].bias, bias_name(prefix, l));
  }
  return out;
}

void write_encoder(binio::Writer& w, const EncoderParams& params) {
  params.validate();
  w.u32(static_cast<std::uint32_t>(params.sizes.size()));
  for (std::size_t s : params.sizes) w.u32(static_cast<std::uint32_t>(s));
  for (const auto& layer : params.layers) {
    for (const DenseTensor* t : {&layer.weight, &layer.bias}) {
      w.u64(t->numel());
      for (double v : t->data()) w.f64(v);
    }
  }
}

EncoderParams read_encoder(binio::Reader& r) {
  EncoderParams p;
  const std::size_t at = r.offset();
  const std::uint32_t n = r.u32();
  if (n < 2 || n > 64) throw FormatError("implausible encoder layer count " + std::to_string(n), at);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t s_at = r.offset();
    const std::uint32_t s = r.u32();
    if (s == 0) throw FormatError("zero layer size in encoder header", s_at);
    p.sizes.push_back(s);
  }
  for (std::size_t l = 0; l + 1 < p.sizes.size(); ++l) {
    Layer layer;
    for (auto [t, shape] : {std::pair{&layer.weight, Shape{p.sizes[l], p.sizes[l + 1]}},
                            std::pair{&layer.bias, Shape{p.sizes[l + 1]}}}) {
      const std::size_t c_at = r.offset();
      const std::uint64_t count = r.u64();
      if (count != shape_numel(shape))
        throw FormatError("tensor length " + std::to_string(count) + " does not match header", c_at);
      std::vector<double> vals(count);
      for (double& v : vals) v = r.f64();
      *t = DenseTensor(shape, std::move(vals));
    }
    p.layers.push_back(std::move(layer));
  }
  return p;
}

}  // namespace diul
