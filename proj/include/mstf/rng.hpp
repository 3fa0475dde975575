#pragma once

#include <cstdint>
#include <string_view>

namespace mstf {

/// Deterministic splittable PRNG (SplitMix64 core).
///
/// Child streams are derived by hashing a label into the parent state, so
/// every consumer (mask sampling, parameter init, shuffling, ...) owns an
/// independent stream and reruns with the same seed are bit-identical.
/// Derivation does not advance the parent.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  /// Uniform in [0, 1).
  double next_unit();
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi], inclusive. Unbiased (rejection sampling).
  int64_t uniform_int(int64_t lo, int64_t hi);
  /// Box-Muller; consumes exactly two draws per call.
  double gaussian(double mean = 0.0, double sigma = 1.0);

  Rng derive(std::string_view label) const;
  Rng derive(uint64_t index) const;

 private:
  uint64_t state_;
};

}  // namespace mstf
