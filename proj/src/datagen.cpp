#include "diul/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "diul/binio.hpp"
#include "diul/error.hpp"

namespace diul {

void BlobSpec::validate() const {
  auto fail = [](const std::string& m) { throw ContractError("BlobSpec: " + m); };
  if (n_categories < 2) fail("n_categories must be >= 2");
  if (n_domains_total < 2) fail("n_domains_total must be >= 2");
  if (cat_dims < n_categories) fail("cat_dims must be >= n_categories");
  if (dom_dims < n_domains_total) fail("dom_dims must be >= n_domains_total");
  if (noise_dims < 0) fail("noise_dims must be >= 0");
  if (!(alpha_cat > 0.0)) fail("alpha_cat must be > 0");
  if (!(gamma_dom > 0.0)) fail("gamma_dom must be > 0");
  if (!(sigma_x >= 0.0)) fail("sigma_x must be >= 0");
  if (!(rho >= 0.0 && rho <= 1.0)) fail("rho must lie in [0,1]");
  if (n_per_domain < 1) fail("n_per_domain must be >= 1");
  if (n_categories > 0xFFFF || n_domains_total > 0xFFFF) fail("label space exceeds 16 bits");
}

void DatasetBundle::validate() const {
  const std::size_t n = category_labels.size();
  if (domain_labels.size() != n)
    throw ContractError("bundle: category and domain label counts differ");
  if (features.rank() != 2 || features.rows() != n)
    throw ContractError("bundle: feature rows do not match label count");
  for (std::size_t i = 0; i < n; ++i) {
    if (category_labels[i] < 0 || category_labels[i] >= n_categories())
      throw ContractError("bundle: category label out of range at row " + std::to_string(i));
    if (domain_labels[i] < 0 || domain_labels[i] >= n_domains())
      throw ContractError("bundle: domain label out of range at row " + std::to_string(i));
  }
}

DatasetBundle generate(const BlobSpec& spec, std::span<const int> domain_ids, std::uint64_t seed) {
  spec.validate();
  if (domain_ids.empty()) throw ContractError("generate: domain_ids is empty");
  std::set<int> seen;
  for (int d : domain_ids) {
    if (d < 0 || d >= spec.n_domains_total)
      throw ContractError("generate: domain id " + std::to_string(d) + " outside [0, D_total)");
    if (!seen.insert(d).second) throw ContractError("generate: duplicate domain id");
  }

  const std::size_t n_dom = domain_ids.size();
  const std::size_t n = static_cast<std::size_t>(spec.n_per_domain) * n_dom;
  const std::size_t p = static_cast<std::size_t>(spec.feature_dim());

  DatasetBundle out;
  out.features = DenseTensor(Shape{n, p});
  out.category_labels.resize(n);
  out.domain_labels.resize(n);
  for (int c = 0; c < spec.n_categories; ++c) out.category_names.push_back("category_" + std::to_string(c));
  for (int d = 0; d < spec.n_domains_total; ++d) out.domain_names.push_back("domain_" + std::to_string(d));

  Rng rng(seed);
  std::uniform_int_distribution<int> pick_cat(0, spec.n_categories - 1);
  std::uniform_int_distribution<std::size_t> pick_dom(0, n_dom - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  for (std::size_t i = 0; i < n; ++i) {
    const int c = pick_cat(rng);
    const bool coupled = coin(rng) < spec.rho;
    const std::size_t slot = pick_dom(rng);
    const int d = coupled ? domain_ids[static_cast<std::size_t>(c) % n_dom] : domain_ids[slot];
    out.category_labels[i] = c;
    out.domain_labels[i] = d;

    auto row = out.features.row(i);
    for (std::size_t j = 0; j < p; ++j) row[j] = spec.sigma_x * noise(rng);
    row[static_cast<std::size_t>(c)] += spec.alpha_cat;
    row[static_cast<std::size_t>(spec.cat_dims + d)] += spec.gamma_dom;
    for (double& v : row) v = static_cast<double>(static_cast<float>(v));
  }
  return out;
}

DatasetBundle concat(const DatasetBundle& a, const DatasetBundle& b) {
  if (a.category_names != b.category_names || a.domain_names != b.domain_names)
    throw ContractError("concat: name tables differ");
  if (a.feature_dim() != b.feature_dim()) throw DimensionError("concat: feature widths differ");
  DatasetBundle out;
  out.category_names = a.category_names;
  out.domain_names = a.domain_names;
  std::vector<double> data(a.features.values());
  data.insert(data.end(), b.features.values().begin(), b.features.values().end());
  out.features = DenseTensor(Shape{a.size() + b.size(), a.feature_dim()}, std::move(data));
  out.category_labels = a.category_labels;
  out.category_labels.insert(out.category_labels.end(), b.category_labels.begin(), b.category_labels.end());
  out.domain_labels = a.domain_labels;
  out.domain_labels.insert(out.domain_labels.end(), b.domain_labels.begin(), b.domain_labels.end());
  return out;
}

DatasetBundle subset(const DatasetBundle& bundle, std::span<const std::size_t> rows) {
  const std::size_t p = bundle.feature_dim();
  DatasetBundle out;
  out.category_names = bundle.category_names;
  out.domain_names = bundle.domain_names;
  out.features = DenseTensor(Shape{rows.size(), p});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= bundle.size()) throw ContractError("subset: row index out of range");
    std::copy_n(bundle.features.row(rows[r]).begin(), p, out.features.row(r).begin());
    out.category_labels.push_back(bundle.category_labels[rows[r]]);
    out.domain_labels.push_back(bundle.domain_labels[rows[r]]);
  }
  return out;
}

void AugmentSpec::validate() const {
  if (!(noise_std >= 0.0)) throw ContractError("AugmentSpec: noise_std must be >= 0");
  if (!(scale_jitter >= 0.0 && scale_jitter < 1.0))
    throw ContractError("AugmentSpec: scale_jitter must lie in [0,1)");
  if (!(mask_fraction >= 0.0 && mask_fraction <= 1.0))
    throw ContractError("AugmentSpec: mask_fraction must lie in [0,1]");
}

std::vector<double> augment(std::span<const double> x, const AugmentSpec& spec, Rng& rng) {
  const std::size_t p = x.size();
  std::uniform_real_distribution<double> jitter(1.0 - spec.scale_jitter, 1.0 + spec.scale_jitter);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double u = spec.scale_jitter > 0.0 ? jitter(rng) : 1.0;

  std::vector<double> out(p);
  for (std::size_t j = 0; j < p; ++j) {
    const double eps = spec.noise_std > 0.0 ? spec.noise_std * noise(rng) : 0.0;
    out[j] = u * x[j] + eps;
  }

  const auto n_mask = static_cast<std::size_t>(std::floor(spec.mask_fraction * static_cast<double>(p)));
  if (n_mask > 0) {
    // Partial Fisher-Yates: the first n_mask slots become a uniform subset.
    std::vector<std::size_t> idx(p);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t k = 0; k < n_mask; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, p - 1);
      std::swap(idx[k], idx[pick(rng)]);
      out[idx[k]] = 0.0;
    }
  }
  return out;
}

DenseTensor augment_rows(const DenseTensor& x, const AugmentSpec& spec, Rng& rng) {
  DenseTensor out(x.shape());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto v = augment(x.row(i), spec, rng);
    std::copy(v.begin(), v.end(), out.row(i).begin());
  }
  return out;
}

std::string encode_dataset(const DatasetBundle& bundle) {
  bundle.validate();
  const std::size_t n = bundle.size(), p = bundle.feature_dim();
  if (bundle.n_categories() > 0xFFFF || bundle.n_domains() > 0xFFFF)
    throw ContractError("write_dataset: label space exceeds 16 bits");
  binio::Writer w;
  w.bytes(std::string_view(kDatasetMagic, 4));
  w.u32(static_cast<std::uint32_t>(n));
  w.u32(static_cast<std::uint32_t>(p));
  w.u32(static_cast<std::uint32_t>(bundle.n_categories()));
  w.u32(static_cast<std::uint32_t>(bundle.n_domains()));
  for (const auto* table : {&bundle.category_names, &bundle.domain_names}) {
    w.u32(static_cast<std::uint32_t>(table->size()));
    for (const auto& name : *table) w.str(name);
  }
  for (double v : bundle.features.data()) w.f32(static_cast<float>(v));
  for (int c : bundle.category_labels) w.u16(static_cast<std::uint16_t>(c));
  for (int d : bundle.domain_labels) w.u16(static_cast<std::uint16_t>(d));
  return w.buffer();
}

DatasetBundle decode_dataset(std::string bytes) {
  binio::Reader r(std::move(bytes));
  if (r.remaining() < 4 || r.bytes(4) != std::string_view(kDatasetMagic, 4))
    throw FormatError("bad magic: not a UDG1 dataset", 0);
  const std::uint32_t n = r.u32();
  const std::uint32_t p = r.u32();
  const std::uint32_t n_cat = r.u32();
  const std::uint32_t n_dom = r.u32();

  DatasetBundle out;
  for (auto [table, expected] : {std::pair{&out.category_names, n_cat}, std::pair{&out.domain_names, n_dom}}) {
    const std::size_t at = r.offset();
    const std::uint32_t count = r.u32();
    if (count != expected)
      throw FormatError("name table holds " + std::to_string(count) + " entries, header says " +
                            std::to_string(expected),
                        at);
    for (std::uint32_t k = 0; k < count; ++k) table->push_back(r.str());
  }

  const std::size_t need = std::size_t{4} * n * p + std::size_t{4} * n;
  if (r.remaining() < need)
    throw FormatError("truncated payload: need " + std::to_string(need) + " bytes, have " +
                          std::to_string(r.remaining()),
                      r.offset());
  std::vector<double> feats(std::size_t{n} * p);
  for (double& v : feats) v = static_cast<double>(r.f32());
  out.features = DenseTensor(Shape{n, p}, std::move(feats));
  out.category_labels.resize(n);
  out.domain_labels.resize(n);
  for (auto& c : out.category_labels) {
    const std::size_t at = r.offset();
    c = r.u16();
    if (static_cast<std::uint32_t>(c) >= n_cat) throw FormatError("category label out of range", at);
  }
  for (auto& d : out.domain_labels) {
    const std::size_t at = r.offset();
    d = r.u16();
    if (static_cast<std::uint32_t>(d) >= n_dom) throw FormatError("domain label out of range", at);
  }
  r.expect_end();
  return out;
}

void write_dataset(const DatasetBundle& bundle, const std::string& path) {
  binio::Writer w;
  w.bytes(encode_dataset(bundle));
  w.save(path);
}

DatasetBundle read_dataset(const std::string& path) {
  auto r = binio::Reader::from_file(path);
  return decode_dataset(std::string(r.bytes(r.remaining())));
}

}  // namespace diul
