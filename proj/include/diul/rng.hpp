#pragma once

#include <cstdint>
#include <random>

namespace diul {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Stage seeds fan out from one run seed: seed(stage) = mix(mix(run) + stage).
/// Stages are numbered in `SeedStage`; adding a stage never shifts the others.
enum class SeedStage : std::uint64_t {
  kData = 1,
  kSplit = 2,
  kDomainClassifier = 3,
  kEncoderInit = 4,
  kPretrain = 5,
  kProbe = 6,
};

constexpr std::uint64_t stage_seed(std::uint64_t run_seed, SeedStage stage) noexcept {
  return mix_seed(mix_seed(run_seed) + static_cast<std::uint64_t>(stage));
}

}  // namespace diul
