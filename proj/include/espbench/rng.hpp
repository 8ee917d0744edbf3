#pragma once

#include <cstdint>
#include <random>

namespace espbench {

/// Seeded generator whose draws are identical on every platform; the standard
/// distributions are implementation-defined, so the helpers below stay on raw 64-bit output.
class rng {
 public:
  explicit rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [lo, hi], inclusive. Unbiased (rejection sampling).
  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next());
    auto limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % span + 1) % span;
    std::uint64_t v;
    do {
      v = next();
    } while (v > limit);
    return lo + static_cast<std::int64_t>(v % span);
  }

  /// Uniform real in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Derives independent sub-seeds from one run seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace espbench
