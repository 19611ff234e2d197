#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace probekit {

// Project-wide generator: xoshiro256** whose 256-bit state is filled from a
// splitmix64 sequence seeded with the 64-bit seed. Child streams are keyed:
//
//   child_seed = splitmix64(seed ^ fnv1a64(key))
//
// The derivation only depends on (seed, key), never on how many values the
// parent has already produced, so module-level determinism composes.
inline constexpr std::string_view kRngAlgorithm = "xoshiro256** / splitmix64 / fnv1a64-keyed";

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key);

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  std::uint64_t operator()() { return next_u64(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform();
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller; the second variate is cached.
  double normal();
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  Rng child(std::string_view key) const { return Rng(derive_seed(seed_, key)); }
  Rng child(std::uint64_t key) const { return Rng(derive_seed(seed_, key)); }

  // Fisher-Yates; std::shuffle's draw sequence is implementation-defined.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace probekit
