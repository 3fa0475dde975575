#include "mstf/rng.hpp"

#include <cmath>
#include <numbers>

#include "mstf/errors.hpp"

namespace mstf {

namespace {

uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

Rng::Rng(uint64_t seed) : state_(mix64(seed ^ 0x9E3779B97F4A7C15ull)) {}

uint64_t Rng::next_u64() {
  state_ += 0x9E3779B97F4A7C15ull;
  return mix64(state_);
}

double Rng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * next_unit();
}

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
  if (lo > hi) throw ShapeError("uniform_int: empty range");
  uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<int64_t>(next_u64());  // full 64-bit range
  uint64_t threshold = (0 - span) % span;                   // 2^64 mod span
  uint64_t x;
  do {
    x = next_u64();
  } while (x < threshold);
  return lo + static_cast<int64_t>(x % span);
}

double Rng::gaussian(double mean, double sigma) {
  // u1 in (0, 1] so the log is finite.
  double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  double u2 = next_unit();
  double r = std::sqrt(-2.0 * std::log(u1));
  return mean + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::derive(std::string_view label) const {
  Rng child(0);
  child.state_ = mix64(state_ ^ mix64(fnv1a(label)));
  return child;
}

Rng Rng::derive(uint64_t index) const {
  Rng child(0);
  child.state_ = mix64(state_ ^ mix64(index * 0xD1342543DE82EF95ull + 0x2545F4914F6CDD1Dull));
  return child;
}

}  // namespace mstf
