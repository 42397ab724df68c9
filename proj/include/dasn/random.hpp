#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace dasn {

// SplitMix64 step. Used both as a seeding generator and as a stateless
// mixing function for deriving independent streams.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t value);

// Combines a parent seed with a stream identifier.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

// xoshiro256** seeded through splitmix64. All floating-point draws are
// implemented here rather than through <random> distributions so that the
// produced bits do not depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  // Standard normal via Box-Muller (one value per call, no caching).
  double gaussian();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> s_;
};

}  // namespace dasn
