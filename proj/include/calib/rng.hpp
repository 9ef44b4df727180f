#ifndef CALIB_RNG_HPP
#define CALIB_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace calib {

// Deterministic random source. The raw bit stream is std::mt19937_64, whose
// output sequence is fixed by the standard, and all mappings to uniforms and
// bounded integers are spelled out here instead of going through
// std::uniform_*_distribution (which is not portable across standard
// libraries). Runs seeded identically therefore produce identical streams on
// every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // Uniform double in [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, bound), bound >= 1, by rejection.
  std::uint64_t integer(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % bound;
  }

  // Fisher-Yates shuffle of [0, n) indices.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(integer(i));
      std::swap(idx[i - 1], idx[j]);
    }
    return idx;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace calib

#endif  // CALIB_RNG_HPP
