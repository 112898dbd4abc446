#pragma once

// Synthetic multi-domain "blob" data with a tunable domain/category coupling,
// vector augmentations for contrastive views, and the UDG1 dataset file.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "diul/rng.hpp"
#include "diul/tensor.hpp"

namespace diul {

struct BlobSpec {
  int n_categories = 4;
  int n_domains_total = 4;
  int cat_dims = 4;
  int dom_dims = 4;
  int noise_dims = 8;
  double alpha_cat = 1.0;   // category signal amplitude
  double gamma_dom = 1.0;   // domain signal amplitude
  double sigma_x = 0.1;     // feature noise stddev
  double rho = 0.0;         // spurious coupling strength in [0,1]
  int n_per_domain = 100;

  int feature_dim() const { return cat_dims + dom_dims + noise_dims; }
  /// Throws ContractError on out-of-range fields.
  void validate() const;
};

struct DatasetBundle {
  DenseTensor features;  // N x p
  std::vector<int> category_labels;
  std::vector<int> domain_labels;
  std::vector<std::string> category_names;
  std::vector<std::string> domain_names;

  std::size_t size() const { return category_labels.size(); }
  std::size_t feature_dim() const { return features.rank() == 2 ? features.cols() : 0; }
  int n_categories() const { return static_cast<int>(category_names.size()); }
  int n_domains() const { return static_cast<int>(domain_names.size()); }

  /// Checks row counts and label ranges; throws ContractError.
  void validate() const;
  bool operator==(const DatasetBundle&) const = default;
};

/// Draws n_per_domain * |domain_ids| samples. Category is uniform; with
/// probability rho the domain is domain_ids[c mod |domain_ids|], otherwise
/// uniform over domain_ids. Features are stored at float precision so that
/// they survive a UDG1 round trip unchanged.
DatasetBundle generate(const BlobSpec& spec, std::span<const int> domain_ids, std::uint64_t seed);

/// Rows of `a` followed by rows of `b`; name tables must agree.
DatasetBundle concat(const DatasetBundle& a, const DatasetBundle& b);
DatasetBundle subset(const DatasetBundle& bundle, std::span<const std::size_t> rows);

struct AugmentSpec {
  double noise_std = 0.1;      // additive gaussian stddev
  double scale_jitter = 0.1;   // u ~ U[1-s, 1+s]
  double mask_fraction = 0.0;  // fraction of coordinates zeroed
  void validate() const;
};

/// x' = mask * (u*x + eps). Consumes the rng in a fixed order: u, eps[0..p),
/// then the mask permutation draws.
std::vector<double> augment(std::span<const double> x, const AugmentSpec& spec, Rng& rng);
/// Row-wise augment of a matrix, rows drawn in order from one rng.
DenseTensor augment_rows(const DenseTensor& x, const AugmentSpec& spec, Rng& rng);

// UDG1 layout (little-endian):
//   "UDG1" | u32 N | u32 p | u32 C | u32 D_total
//   | category names: u32 count, then (u32 len, bytes) per name
//   | domain names:   u32 count, then (u32 len, bytes) per name
//   | N*p f32 features (row-major) | N u16 category | N u16 domain
inline constexpr char kDatasetMagic[4] = {'U', 'D', 'G', '1'};
inline constexpr std::size_t kDatasetHeaderBytes = 20;

std::string encode_dataset(const DatasetBundle& bundle);
DatasetBundle decode_dataset(std::string bytes);
void write_dataset(const DatasetBundle& bundle, const std::string& path);
DatasetBundle read_dataset(const std::string& path);

}  // namespace diul
