#pragma once

// Contrastive objectives and the pretraining loop.
//
// info_nce_loss scores each query against its key and one flat negative bank.
// diul_loss keeps one negative bank per source domain and mixes the
// per-domain positive probabilities with the domain posteriors w:
//
//   L = -1/B sum_i log sum_d w_id * exp(v_i.f_i/t) /
//                                  (exp(v_i.f_i/t) + sum_{q in bank_d} exp(q.f_i/t))
//
// Both are evaluated in log space. Banks are learnable adversaries: they take
// gradient ascent steps on the same loss the encoder descends, then are
// projected back onto the unit sphere.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diul/datagen.hpp"
#include "diul/domainclf.hpp"
#include "diul/encoder.hpp"
#include "diul/splits.hpp"
#include "diul/tape.hpp"

namespace diul {

/// Unit-norm negatives, one K x d_f block per source domain. A flat InfoNCE
/// bank is a single block with domain id -1.
struct NegativeBank {
  std::vector<int> domain_ids;
  std::vector<DenseTensor> entries;

  std::size_t n_domains() const { return entries.size(); }
  std::size_t size_per_domain() const { return entries.empty() ? 0 : entries.front().rows(); }
  bool operator==(const NegativeBank&) const = default;
};

inline constexpr int kGlobalBankId = -1;

/// K Gaussian directions per domain, normalized.
NegativeBank init_bank(std::span<const int> domain_ids, std::size_t k, std::size_t dim, std::uint64_t seed);
std::string bank_param_name(std::size_t index);

/// Flat-bank InfoNCE. `bank` may have zero rows (then L = 0).
Var info_nce_loss(Var f, Var v, Var bank, double temperature);

/// Domain-mixture loss. `w` is B x banks.size(), rows on the simplex within 1e-9.
Var diul_loss(Var f, Var v, std::span<const Var> banks, const DenseTensor& w, double temperature);

/// q <- q + lr * dL/dq for every bank entry, then (optionally) renormalize rows.
/// Banks whose gradient is identically zero are left bit-for-bit unchanged.
NegativeBank ascend_bank(const NegativeBank& bank, const GradientMap& grads, double lr,
                         bool renormalize = true);

/// Builds the loss for fixed queries/keys, differentiates it w.r.t. the banks
/// and takes one ascent step. Uses diul_loss when `w` has one column per bank
/// block, info_nce_loss for a single flat bank with empty `w`.
NegativeBank bank_adversarial_step(const NegativeBank& bank, const DenseTensor& f, const DenseTensor& v,
                                   const DenseTensor& w, double temperature, double lr,
                                   bool renormalize = true);

/// Plain evaluation of the loss for fixed tensors (same dispatch as above).
double contrastive_loss_value(const NegativeBank& bank, const DenseTensor& f, const DenseTensor& v,
                              const DenseTensor& w, double temperature);

enum class Variant { kInfoNce, kDiul };
std::string to_string(Variant v);
std::optional<Variant> parse_variant(const std::string& name);

struct PretrainConfig {
  int epochs = 200;
  int batch_size = 256;
  double lr = 0.03;
  double weight_decay = 1e-4;
  double momentum = 0.999;
  double temperature = 0.2;
  int bank_size = 256;      // negatives per source domain
  double bank_lr = 0.1;     // eta_N
  bool cosine_schedule = true;
  std::vector<std::size_t> hidden{64, 64};
  std::size_t feature_dim = kDefaultFeatureDim;
  AugmentSpec augment{};
  std::uint64_t seed = 0;
  bool debug_checks = false;  // verify per step that the key encoder gets no gradient

  void validate() const;
};

struct Checkpoint {
  std::string variant;
  EncoderParams query;
  EncoderParams key;
  NegativeBank bank;
  std::optional<DomainWeighter> weighter;
  bool operator==(const Checkpoint&) const = default;
};

struct PretrainResult {
  Checkpoint checkpoint;
  std::vector<double> epoch_losses;
};

/// Encoder architecture and initial weights implied by a config.
EncoderParams initial_encoder(const PretrainConfig& config, std::size_t input_dim);

/// Runs contrastive pretraining on split.pretrain_unlabeled. The weighter is
/// required for kDiul and ignored for kInfoNce, whose single flat bank holds
/// bank_size * (number of pretrain domains) negatives.
PretrainResult pretrain(const PretrainConfig& config, const DatasetBundle& bundle, const UdgSplit& split,
                        const DomainWeighter* weighter, Variant variant);

/// CSV with header `epoch,loss,variant,seed`.
std::string loss_log_csv(const std::vector<double>& losses, Variant variant, std::uint64_t seed);

// Checkpoint layout: "DIUC" | u32 version | str variant | query encoder block
// | key encoder block | u32 banks, u32 K, u32 d_f, per bank (u32 domain id
// bits, K*d_f f64) | u32 has_weighter | weighter block.
inline constexpr char kCheckpointMagic[4] = {'D', 'I', 'U', 'C'};
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string bytes);
void write_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace diul
