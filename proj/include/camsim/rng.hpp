#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace camsim {

// Deterministic, platform-independent random streams. Everything stochastic
// in the pipeline (placement, path tracing, diffraction, sensor noise) draws
// from these; std:: distributions are implementation-defined and would break
// byte-identical reproducibility across toolchains.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_mix(std::uint64_t h, std::uint64_t k) {
  // One splitmix round over the combined words.
  std::uint64_t s = h ^ (k + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
  return splitmix64(s);
}

/// FNV-1a over a byte string; used to derive stage seeds from names.
inline std::uint64_t hash_str(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x00000100000001b3ull;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t state) : state_(state) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform in [0,1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0,1]; safe to pass to log().
  double uniform_pos() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) {
    return std::uint64_t((__uint128_t(next_u64()) * __uint128_t(n)) >> 64);
  }

  /// Standard normal via Box-Muller (two uniforms per draw, no cache).
  double normal() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  /// Exponential with the given mean.
  double exponential_mean(double mean) {
    return -mean * std::log(uniform_pos());
  }

  /// Poisson draw: exact (Knuth) below 30, Gaussian approximation above.
  /// The approximation keeps variance == mean, which is what the photon
  /// transfer statistics rely on.
  long poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
      const double limit = std::exp(-mean);
      long k = 0;
      double p = 1.0;
      do {
        ++k;
        p *= uniform();
      } while (p > limit);
      return k - 1;
    }
    double n = std::round(mean + std::sqrt(mean) * normal());
    return n < 0.0 ? 0 : long(n);
  }

 private:
  std::uint64_t state_;
};

/// Derive an independent stream from a seed and up to three key words
/// (pixel index, sample index, stage id, ...).
inline Rng make_stream(std::uint64_t seed, std::uint64_t k1,
                       std::uint64_t k2 = 0, std::uint64_t k3 = 0) {
  std::uint64_t h = hash_mix(seed, k1);
  h = hash_mix(h, k2);
  h = hash_mix(h, k3);
  return Rng(h);
}

}  // namespace camsim
