#pragma once

// MLP encoder onto the unit hypersphere: (affine -> relu) per hidden layer,
// a final affine projection, then row-wise L2 normalization. The same type
// holds the query encoder and its momentum (key) copy.

#include <cstdint>
#include <string>
#include <vector>

#include "diul/binio.hpp"
#include "diul/tape.hpp"

namespace diul {

inline constexpr std::size_t kDefaultFeatureDim = 128;

struct Layer {
  DenseTensor weight;  // fan_in x fan_out
  DenseTensor bias;    // fan_out
  bool operator==(const Layer&) const = default;
};

struct EncoderParams {
  std::vector<std::size_t> sizes;  // input, hidden..., output
  std::vector<Layer> layers;

  std::size_t input_dim() const { return sizes.front(); }
  std::size_t output_dim() const { return sizes.back(); }
  /// Throws ContractError if layer shapes disagree with `sizes`.
  void validate() const;
  bool operator==(const EncoderParams&) const = default;
};

/// Glorot-uniform weights, zero biases. `sizes` needs at least two entries.
EncoderParams init_params(const std::vector<std::size_t>& sizes, std::uint64_t seed);

/// Plain forward pass, [batch, p] -> [batch, d_f] unit rows.
DenseTensor encode(const EncoderParams& params, const DenseTensor& x);

/// Differentiable forward pass. Weights are registered on the tape as
/// parameters named "<prefix>.w<i>" and "<prefix>.b<i>".
Var encode(Tape& tape, const EncoderParams& params, Var x, const std::string& prefix);

std::string weight_name(const std::string& prefix, std::size_t layer);
std::string bias_name(const std::string& prefix, std::size_t layer);

/// key' = m*key + (1-m)*query for every parameter.
EncoderParams ema_update(const EncoderParams& key, const EncoderParams& query, double m);

/// theta <- theta - lr * (grad + weight_decay * theta), reading gradients
/// registered under `prefix`. Parameters without a gradient entry only decay.
EncoderParams sgd_step(const EncoderParams& params, const GradientMap& grads,
                       const std::string& prefix, double lr, double weight_decay);

// Encoder block layout: u32 layer-size count, u32 sizes..., then per layer the
// weight and bias as (u64 element count, f64 values...).
void write_encoder(binio::Writer& w, const EncoderParams& params);
EncoderParams read_encoder(binio::Reader& r);

}  // namespace diul
