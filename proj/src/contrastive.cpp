#include "diul/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "diul/binio.hpp"
#include "diul/error.hpp"
#include "diul/rng.hpp"

namespace diul {

NegativeBank init_bank(std::span<const int> domain_ids, std::size_t k, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ContractError("init_bank: embedding dimension must be positive");
  NegativeBank bank;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int id : domain_ids) {
    DenseTensor block(Shape{k, dim});
    for (std::size_t r = 0; r < k; ++r) {
      double norm = 0.0;
      do {
        norm = 0.0;
        for (double& x : block.row(r)) {
          x = normal(rng);
          norm += x * x;
        }
        norm = std::sqrt(norm);
      } while (!(norm > 1e-6));
      for (double& x : block.row(r)) x /= norm;
    }
    bank.domain_ids.push_back(id);
    bank.entries.push_back(std::move(block));
  }
  return bank;
}

std::string bank_param_name(std::size_t index) { return "bank." + std::to_string(index); }

namespace {

void check_pair(Var f, Var v, double temperature) {
  if (!(temperature > 0.0)) throw ContractError("temperature must be > 0, got " + std::to_string(temperature));
  if (f.value().rank() != 2 || f.shape() != v.shape())
    throw DimensionError("queries " + shape_str(f.shape()) + " and keys " + shape_str(v.shape()) +
                         " must be matching matrices");
}

// log p_i = s_pos - lse([s_pos, s_neg...]) for one bank.
Var log_positive_prob(Var f, Var pos, Var bank, double temperature) {
  const DenseTensor& q = bank.value();
  if (q.rank() != 2 || (q.rows() > 0 && q.cols() != f.value().cols()))
    throw DimensionError("bank " + shape_str(q.shape()) + " incompatible with queries " + shape_str(f.shape()));
  if (q.rows() == 0) return sub(pos, pos);
  Var neg = scale(matmul_nt(f, bank), 1.0 / temperature);
  const Var parts[] = {pos, neg};
  return sub(pos, log_sum_exp_rows(concat_cols(parts)));
}

}  // namespace

Var info_nce_loss(Var f, Var v, Var bank, double temperature) {
  check_pair(f, v, temperature);
  Var pos = scale(rowwise_dot(f, v), 1.0 / temperature);
  return neg(mean(log_positive_prob(f, pos, bank, temperature)));
}

Var diul_loss(Var f, Var v, std::span<const Var> banks, const DenseTensor& w, double temperature) {
  check_pair(f, v, temperature);
  const std::size_t b = f.value().rows(), n_dom = banks.size();
  if (n_dom == 0) throw ContractError("diul_loss needs at least one bank");
  if (w.rank() != 2 || w.rows() != b || w.cols() != n_dom)
    throw DimensionError("domain weights " + shape_str(w.shape()) + " for batch " + std::to_string(b) +
                         " and " + std::to_string(n_dom) + " banks");
  DenseTensor log_w(w.shape());
  for (std::size_t i = 0; i < b; ++i) {
    double s = 0.0;
    for (std::size_t d = 0; d < n_dom; ++d) {
      const double x = w[i * n_dom + d];
      if (!(x >= -1e-9)) throw ContractError("domain weight row " + std::to_string(i) + " has a negative entry");
      s += x;
      log_w[i * n_dom + d] = x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity();
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw ContractError("domain weight row " + std::to_string(i) + " sums to " + std::to_string(s));
  }

  Var pos = scale(rowwise_dot(f, v), 1.0 / temperature);
  std::vector<Var> per_domain;
  per_domain.reserve(n_dom);
  for (const Var& bank : banks) per_domain.push_back(log_positive_prob(f, pos, bank, temperature));
  Var mixed = add(concat_cols(per_domain), f.tape()->constant(std::move(log_w)));
  return neg(mean(log_sum_exp_rows(mixed)));
}

NegativeBank ascend_bank(const NegativeBank& bank, const GradientMap& grads, double lr, bool renormalize) {
  NegativeBank out = bank;
  if (lr == 0.0) return out;
  for (std::size_t d = 0; d < out.entries.size(); ++d) {
    auto it = grads.find(bank_param_name(d));
    if (it == grads.end()) continue;
    const DenseTensor& g = it->second;
    if (g.shape() != out.entries[d].shape()) throw DimensionError("bank gradient shape mismatch");
    if (std::all_of(g.data().begin(), g.data().end(), [](double x) { return x == 0.0; })) continue;
    DenseTensor& q = out.entries[d];
    for (std::size_t i = 0; i < q.numel(); ++i) q[i] += lr * g[i];
    if (renormalize && q.rows() > 0) q = l2_normalize_rows(q);
  }
  return out;
}

namespace {

Var build_loss(Tape& tape, const NegativeBank& bank, Var f, Var v, const DenseTensor& w, double temperature,
               bool banks_trainable) {
  std::vector<Var> bank_vars;
  for (std::size_t d = 0; d < bank.entries.size(); ++d)
    bank_vars.push_back(banks_trainable ? tape.parameter(bank_param_name(d), bank.entries[d])
                                        : tape.constant(bank.entries[d]));
  if (w.numel() == 0) {
    if (bank_vars.size() != 1) throw ContractError("flat InfoNCE expects exactly one bank block");
    return info_nce_loss(f, v, bank_vars.front(), temperature);
  }
  return diul_loss(f, v, bank_vars, w, temperature);
}

}  // namespace

NegativeBank bank_adversarial_step(const NegativeBank& bank, const DenseTensor& f, const DenseTensor& v,
                                   const DenseTensor& w, double temperature, double lr, bool renormalize) {
  Tape tape;
  Var loss = build_loss(tape, bank, tape.constant(f), tape.constant(v), w, temperature, true);
  return ascend_bank(bank, tape.backward(loss), lr, renormalize);
}

double contrastive_loss_value(const NegativeBank& bank, const DenseTensor& f, const DenseTensor& v,
                              const DenseTensor& w, double temperature) {
  Tape tape;
  return build_loss(tape, bank, tape.constant(f), tape.constant(v), w, temperature, false).value().item();
}

std::string to_string(Variant v) { return v == Variant::kDiul ? "diul" : "infonce"; }

std::optional<Variant> parse_variant(const std::string& name) {
  if (name == "diul") return Variant::kDiul;
  if (name == "infonce") return Variant::kInfoNce;
  return std::nullopt;
}

void PretrainConfig::validate() const {
  if (epochs < 0) throw ContractError("pretrain: epochs must be >= 0");
  if (batch_size < 1) throw ContractError("pretrain: batch_size must be >= 1");
  if (!(lr >= 0.0)) throw ContractError("pretrain: lr must be >= 0");
  if (!(weight_decay >= 0.0)) throw ContractError("pretrain: weight_decay must be >= 0");
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw ContractError("pretrain: momentum must lie in [0,1]");
  if (!(temperature > 0.0)) throw ContractError("pretrain: temperature must be > 0");
  if (bank_size < 0) throw ContractError("pretrain: bank_size must be >= 0");
  if (!(bank_lr >= 0.0)) throw ContractError("pretrain: bank_lr must be >= 0");
  if (feature_dim == 0) throw ContractError("pretrain: feature_dim must be positive");
  augment.validate();
}

EncoderParams initial_encoder(const PretrainConfig& config, std::size_t input_dim) {
  std::vector<std::size_t> sizes{input_dim};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(config.feature_dim);
  return init_params(sizes, mix_seed(config.seed ^ 0x656E636F646572ull));
}

PretrainResult pretrain(const PretrainConfig& config, const DatasetBundle& bundle, const UdgSplit& split,
                        const DomainWeighter* weighter, Variant variant) {
  config.validate();
  if (split.pretrain_unlabeled.empty()) throw ContractError("pretrain: pretrain_unlabeled is empty");
  for (std::size_t i : split.pretrain_unlabeled)
    if (i >= bundle.size()) throw ContractError("pretrain: split index out of range for bundle");

  const std::set<int> domains = [&] {
    std::set<int> s;
    for (std::size_t i : split.pretrain_unlabeled) s.insert(bundle.domain_labels[i]);
    return s;
  }();

  const DatasetBundle data = subset(bundle, split.pretrain_unlabeled);
  const std::size_t n = data.size();

  Checkpoint ckpt;
  ckpt.variant = to_string(variant);
  ckpt.query = initial_encoder(config, bundle.feature_dim());
  ckpt.key = ckpt.query;
  const auto k = static_cast<std::size_t>(config.bank_size);
  const std::uint64_t bank_seed = mix_seed(config.seed ^ 0x62616E6Bull);

  DenseTensor all_w;  // n x D for diul, empty for infonce
  if (variant == Variant::kDiul) {
    if (weighter == nullptr) throw ContractError("pretrain: the diul variant needs a trained domain weighter");
    const std::set<int> trained(weighter->domain_ids.begin(), weighter->domain_ids.end());
    if (trained != domains)
      throw ContractError("pretrain: weighter domains differ from the pretrain domains");
    ckpt.bank = init_bank(weighter->domain_ids, k, config.feature_dim, bank_seed);
    ckpt.weighter = *weighter;
    all_w = domain_weights(*weighter, data.features);
  } else {
    const int ids[] = {kGlobalBankId};
    ckpt.bank = init_bank(ids, k * domains.size(), config.feature_dim, bank_seed);
  }

  PretrainResult result;
  Rng rng(mix_seed(config.seed ^ 0x747261696Eull));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto bs = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps_per_epoch = (n + bs - 1) / bs;
  const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(config.epochs);
  const std::size_t p = data.feature_dim();
  const std::size_t n_dom = ckpt.bank.n_domains();
  std::size_t step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += bs, ++step) {
      const std::size_t b = std::min(bs, n - start);
      DenseTensor x(Shape{b, p});
      DenseTensor w = variant == Variant::kDiul ? DenseTensor(Shape{b, n_dom}) : DenseTensor(Shape{0});
      for (std::size_t r = 0; r < b; ++r) {
        const std::size_t src = order[start + r];
        std::copy_n(data.features.row(src).begin(), p, x.row(r).begin());
        if (variant == Variant::kDiul) std::copy_n(all_w.row(src).begin(), n_dom, w.row(r).begin());
      }
      const DenseTensor view_q = augment_rows(x, config.augment, rng);
      const DenseTensor view_k = augment_rows(x, config.augment, rng);

      Tape tape;
      Var f = encode(tape, ckpt.query, tape.constant(view_q), "query");
      Var v;
      if (config.debug_checks) {
        // Run the key encoder on the tape with live parameters, then detach.
        Var live = encode(tape, ckpt.key, tape.constant(view_k), "key");
        v = tape.constant(live.value());
      } else {
        v = tape.constant(encode(ckpt.key, view_k));
      }
      Var loss = build_loss(tape, ckpt.bank, f, v, w, config.temperature, true);
      const GradientMap grads = tape.backward(loss);

      if (config.debug_checks) {
        for (const auto& [name, g] : grads) {
          if (name.rfind("key.", 0) != 0) continue;
          for (double x : g.data())
            if (x != 0.0) throw ContractError("key encoder received a gradient through '" + name + "'");
        }
      }

      const double lr = config.cosine_schedule && total_steps > 0
                            ? config.lr * 0.5 *
                                  (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) /
                                                  static_cast<double>(total_steps)))
                            : config.lr;
      epoch_loss += loss.value().item();
      ckpt.query = sgd_step(ckpt.query, grads, "query", lr, config.weight_decay);
      ckpt.bank = ascend_bank(ckpt.bank, grads, config.bank_lr);
      ckpt.key = ema_update(ckpt.key, ckpt.query, config.momentum);
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(steps_per_epoch));
  }
  result.checkpoint = std::move(ckpt);
  return result;
}

std::string loss_log_csv(const std::vector<double>& losses, Variant variant, std::uint64_t seed) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,loss,variant,seed\n";
  for (std::size_t e = 0; e < losses.size(); ++e)
    os << e << ',' << losses[e] << ',' << to_string(variant) << ',' << seed << '\n';
  return os.str();
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  binio::Writer w;
  w.bytes(std::string_view(kCheckpointMagic, 4));
  w.u32(1);
  w.str(ckpt.variant);
  write_encoder(w, ckpt.query);
  write_encoder(w, ckpt.key);
  const std::size_t k = ckpt.bank.size_per_domain();
  const std::size_t dim = ckpt.bank.entries.empty() ? 0 : ckpt.bank.entries.front().cols();
  w.u32(static_cast<std::uint32_t>(ckpt.bank.n_domains()));
  w.u32(static_cast<std::uint32_t>(k));
  w.u32(static_cast<std::uint32_t>(dim));
  for (std::size_t d = 0; d < ckpt.bank.n_domains(); ++d) {
    if (ckpt.bank.entries[d].shape() != Shape{k, dim}) throw ContractError("bank blocks differ in shape");
    w.u32(static_cast<std::uint32_t>(ckpt.bank.domain_ids[d]));
    for (double v : ckpt.bank.entries[d].data()) w.f64(v);
  }
  w.u32(ckpt.weighter ? 1u : 0u);
  if (ckpt.weighter) write_weighter(w, *ckpt.weighter);
  return w.buffer();
}

Checkpoint decode_checkpoint(std::string bytes) {
  binio::Reader r(std::move(bytes));
  if (r.remaining() < 4 || r.bytes(4) != std::string_view(kCheckpointMagic, 4))
    throw FormatError("bad magic: not a DIUC checkpoint", 0);
  const std::size_t v_at = r.offset();
  if (const std::uint32_t version = r.u32(); version != 1)
    throw FormatError("unsupported checkpoint version " + std::to_string(version), v_at);
  Checkpoint c;
  c.variant = r.str();
  c.query = read_encoder(r);
  c.key = read_encoder(r);
  const std::uint32_t n_banks = r.u32();
  const std::uint32_t k = r.u32();
  const std::uint32_t dim = r.u32();
  for (std::uint32_t d = 0; d < n_banks; ++d) {
    c.bank.domain_ids.push_back(static_cast<int>(r.u32()));
    if (r.remaining() < std::size_t{8} * k * dim)
      throw FormatError("truncated bank block", r.offset());
    std::vector<double> vals(std::size_t{k} * dim);
    for (double& x : vals) x = r.f64();
    c.bank.entries.emplace_back(Shape{k, dim}, std::move(vals));
  }
  const std::size_t w_at = r.offset();
  const std::uint32_t has_weighter = r.u32();
  if (has_weighter > 1) throw FormatError("bad weighter flag", w_at);
  if (has_weighter) c.weighter = read_weighter(r);
  r.expect_end();
  return c;
}

void write_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  binio::Writer w;
  w.bytes(encode_checkpoint(ckpt));
  w.save(path);
}

Checkpoint read_checkpoint(const std::string& path) {
  auto r = binio::Reader::from_file(path);
  return decode_checkpoint(std::string(r.bytes(r.remaining())));
}

}  // namespace diul
