#pragma once

#include <cstdint>
#include <random>

namespace gm {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for an independent stream: stream k of a base seed is
// splitmix64(base + (k+1)*golden).  Used for per-realization seeds.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

// mt19937_64 with hand-rolled draw helpers.  The engine sequence is fixed by
// the standard; the standard distributions are not, so we avoid them to keep
// results reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n), unbiased.  n >= 1.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = eng_();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform in [-1, 1).
  double next_signed() { return 2.0 * next_double() - 1.0; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace gm
