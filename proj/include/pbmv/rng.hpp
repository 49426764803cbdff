#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace pbmv {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// k-th derived seed of a base seed (splitmix64 stream).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k) {
  return splitmix64(base + (k + 1) * 0x9e3779b97f4a7c15ULL);
}

// mt19937_64 with explicit output mappings. std::*_distribution output is
// implementation-defined, so seeded streams would not be reproducible across
// standard libraries; these mappings are.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0,1) with 53-bit resolution
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  int sign() { return (engine_() & 1ULL) ? +1 : -1; }

  // unbiased integer in [0, n), n >= 1
  std::size_t index(std::size_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t rem = (max % n + 1) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t x = engine_();
      if (rem == 0 || x < max - rem + 1) return static_cast<std::size_t>(x % n);
    }
  }

  // first k entries of a seeded permutation of {0,...,n-1}
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
      std::size_t j = i + index(n - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pbmv
