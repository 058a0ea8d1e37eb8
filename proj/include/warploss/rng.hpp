#ifndef WARPLOSS_RNG_HPP_
#define WARPLOSS_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <array>

namespace warploss {

// Portable deterministic PRNG used for every random decision in the library
// (proxy init, model init, batch sampling, k-means restarts, blob data).
//
// Generator: xoshiro256** (Blackman & Vigna), seeded from a single 64-bit
// seed through splitmix64. Gaussians come from the Box-Muller transform on
// 53-bit uniforms. Both algorithms are fully specified here so a trace can
// be reproduced from the seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
    has_cached_gauss_ = false;
    cached_gauss_ = 0.0;
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53 significant bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection-free modulo is fine here: n is
  // always tiny compared to 2^64 so the bias is immaterial and deterministic.
  std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (has_cached_gauss_) {
      has_cached_gauss_ = false;
      return cached_gauss_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_gauss_ = r * std::sin(a);
    has_cached_gauss_ = true;
    return r * std::cos(a);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  std::array<std::uint64_t, 4> state() const { return state_; }
  void set_state(const std::array<std::uint64_t, 4>& s) {
    state_ = s;
    has_cached_gauss_ = false;
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::array<std::uint64_t, 4> state_;
  bool has_cached_gauss_;
  double cached_gauss_;
};

// Named sub-streams derived from one run seed. Every consumer of randomness
// gets its own stream so the global draw order never depends on scheduling.
enum class RngStream : std::uint64_t {
  kProxies = 1,
  kModel = 2,
  kBatches = 3,
  kBlobCenters = 4,
  kBlobTrainNoise = 5,
  kBlobTestNoise = 6,
  kKmeans = 7,
  kVerify = 8,
};

inline std::uint64_t derive_seed(std::uint64_t seed, RngStream stream) {
  std::uint64_t x = seed ^ (0xD1B54A32D192ED03ULL * static_cast<std::uint64_t>(stream));
  return Rng::splitmix64(x);
}

}  // namespace warploss

#endif  // WARPLOSS_RNG_HPP_
