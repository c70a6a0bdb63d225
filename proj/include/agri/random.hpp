#pragma once

#include <cstdint>
#include <random>

namespace agri {

/// Derives an independent stream seed from a base seed (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Seeded generator with platform-independent distributions.
///
/// The standard <random> distributions are implementation-defined, so every
/// sample here is computed from raw mt19937_64 output to keep traces
/// byte-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi], inclusive.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);
  /// Exponential with the given rate (mean 1/rate).
  double exponential(double rate);

 private:
  std::mt19937_64 engine_;
};

}  // namespace agri
