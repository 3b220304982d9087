#pragma once

// Random streams.
//
// Every random draw in the library descends from a single 64-bit seed:
//
//   seed --derive_seed(seed, replicate, stream)--> per-replicate stream seed
//        --SplitMix64 expansion--> Xoshiro256** state --> coins / witnesses
//
// derive_seed is a pure function of its arguments (a counter-based split), so
// a replicate's randomness does not depend on which worker runs it or on how
// many replicates ran before it.

#include <cmath>
#include <cstdint>
#include <limits>

namespace percolab {

// Stafford "mix13" finalizer as used by SplitMix64.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
  state += kGoldenGamma;
  return mix64(state);
}

// Purposes of the independent streams owned by one replicate.
enum class Stream : std::uint64_t {
  Edges = 0,
  Witnesses = 1,
  Bootstrap = 2,
  Instances = 3,
};

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index,
                                    Stream stream) noexcept {
  std::uint64_t h = mix64(seed ^ mix64(index * kGoldenGamma + 0x632be59bd9b4e019ULL));
  return mix64(h + (static_cast<std::uint64_t>(stream) + 1) * 0xd1b54a32d192ed03ULL);
}

// xoshiro256** 1.0 (Blackman & Vigna). Satisfies UniformRandomBitGenerator so
// it can feed <random> distributions.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Xoshiro256(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64_next(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n) by Lemire's multiply-shift; n > 0.
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4]{};
};

// Open-probability threshold on a 32-bit uniform: P(open) = threshold / 2^32.
constexpr std::uint64_t coin_threshold(double p) noexcept {
  if (!(p > 0.0)) return 0;
  if (p >= 1.0) return std::uint64_t{1} << 32;
  return static_cast<std::uint64_t>(p * 4294967296.0);
}

// Bernoulli(p) coins, two per 64-bit draw. The order in which coins are
// consumed is the only thing that ties a coin to an edge, so every explorer
// that wants bit-identical clusters must request coins in the same order.
class CoinStream {
 public:
  CoinStream(double p, std::uint64_t stream_seed) noexcept
      : threshold_(coin_threshold(p)), rng_(stream_seed) {}

  bool next() noexcept {
    if (!have_low_) {
      buffer_ = rng_();
      have_low_ = true;
      return (buffer_ >> 32) < threshold_;
    }
    have_low_ = false;
    return (buffer_ & 0xffffffffULL) < threshold_;
  }

 private:
  std::uint64_t threshold_;
  Xoshiro256 rng_;
  std::uint64_t buffer_ = 0;
  bool have_low_ = false;
};

// A coin that is a fixed function of (key, edge hash). Exploring the same
// graph at two values of p with the same key couples the two configurations
// monotonically: an edge open at p1 is open at every p2 >= p1.
class HashedCoins {
 public:
  HashedCoins(double p, std::uint64_t key) noexcept
      : threshold_(coin_threshold(p)), key_(key) {}

  bool operator()(std::uint64_t edge_hash) const noexcept {
    return (mix64(edge_hash ^ key_) >> 32) < threshold_;
  }

 private:
  std::uint64_t threshold_;
  std::uint64_t key_;
};

}  // namespace percolab
