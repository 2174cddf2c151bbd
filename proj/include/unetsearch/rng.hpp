#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace unetsearch {

/// Seedable, replayable random source.
///
/// The raw sequence of std::mt19937_64 is fixed by the standard, the
/// std:: distributions are not, so every derived draw used by the search
/// is defined here. Identical seeds give identical runs on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream `stream` of the run seeded with `seed`.
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next() { return engine_(); }

  bool bit() { return (engine_() >> 63) != 0; }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Uniform on {0, ..., n-1}; n must be positive.
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace unetsearch
