#pragma once

// Reproducible randomness. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard; the distribution transforms below
// are written out here because the standard library's are
// implementation-defined.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace stack_order {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for a named purpose, derived from a base seed.
  static Rng stream(std::uint64_t seed, std::string_view purpose);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, bound), bias-free by rejection.
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal();

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace stack_order
