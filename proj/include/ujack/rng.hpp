#pragma once

// Counter-based deterministic RNG utilities.
//
// Every stochastic quantity in the library is a pure function of a 64-bit
// key derived by folding a seed with a purpose tag and any identifying
// integers (replicate index, subset member ids, ...).  That keeps results
// independent of evaluation order and thread count, and lets a re-run with
// the same seed reproduce output byte for byte.

#include <cstdint>
#include <initializer_list>

namespace ujack {

// splitmix64 finalizer: bijective 64-bit mix with good avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Fold one word into a key.
inline std::uint64_t key_fold(std::uint64_t key, std::uint64_t word) {
  return mix64(key ^ (word + 0x9e3779b97f4a7c15ULL + (key << 6) + (key >> 2)));
}

inline std::uint64_t derive_key(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> words) {
  std::uint64_t k = mix64(seed);
  for (std::uint64_t w : words) k = key_fold(k, w);
  return k;
}

// Purpose tags: arbitrary fixed constants, one per independent stream family.
namespace tag {
inline constexpr std::uint64_t omega      = 0x5bd1e9955bd1e995ULL;
inline constexpr std::uint64_t selection  = 0x27d4eb2f165667c5ULL;
inline constexpr std::uint64_t count      = 0xff51afd7ed558ccdULL;
inline constexpr std::uint64_t tuple_draw = 0xc4ceb9fe1a85ec53ULL;
inline constexpr std::uint64_t dgp_x      = 0x9e3779b97f4a7c15ULL;
inline constexpr std::uint64_t dgp_eps    = 0x2545f4914f6cdd1dULL;
inline constexpr std::uint64_t replicate  = 0x452821e638d01377ULL;
inline constexpr std::uint64_t subsample  = 0xbe5466cf34e90c6cULL;
inline constexpr std::uint64_t zeta       = 0xc0ac29b7c97c50ddULL;
inline constexpr std::uint64_t misc       = 0x3f84d5b5b5470917ULL;
}  // namespace tag

// Stateful stream over a fixed key: counter mode, so copies that advance by
// the same number of steps produce the same values.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key), ctr_(0) {}

  std::uint64_t next_u64() { return mix64(key_ ^ mix64(++ctr_)); }

  // Uniform on [0,1): 53 random mantissa bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound) by rejection (no modulo bias).
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t limit = bound * ((~0ULL) / bound);
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % bound;
  }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_;
};

// One-shot uniform in [0,1) for a fully specified key; used for per-tuple
// Bernoulli selection marks so that a tuple's mark never depends on how many
// other tuples were visited first.
inline double uniform_at(std::uint64_t key) {
  return static_cast<double>(mix64(key ^ 0x6a09e667f3bcc909ULL) >> 11) *
         0x1.0p-53;
}

}  // namespace ujack
