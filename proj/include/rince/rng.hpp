#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "rince/common.hpp"

namespace rince {

// Deterministic RNG with named substreams. All randomness in a run flows
// from one root seed; substreams are derived by hashing the stream name
// (and optional index) into the seed, so adding a consumer never perturbs
// the draws of another. Distribution sampling is implemented here rather
// than with std::uniform_real_distribution, whose output is not pinned by
// the standard.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller. No cached spare: two uniforms per draw,
  // so the stream position is a pure function of the call count.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform integer in [lo, hi], inclusive, by rejection.
  int uniform_int(int lo, int hi) {
    if (hi < lo) throw invalid_parameter("uniform_int: empty range");
    std::uint64_t span = static_cast<std::uint64_t>(hi) - lo + 1;
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + static_cast<int>(x % span);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<int>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Fixed-point-free permutation of {0,...,n-1} by rejection resampling.
  std::vector<int> derangement(int n) {
    if (n < 2) throw invalid_parameter("derangement: need n >= 2");
    std::vector<int> perm(n);
    while (true) {
      for (int i = 0; i < n; ++i) perm[i] = i;
      shuffle(perm);
      bool ok = true;
      for (int i = 0; i < n; ++i) {
        if (perm[i] == i) {
          ok = false;
          break;
        }
      }
      if (ok) return perm;
    }
  }

 private:
  std::mt19937_64 engine_;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace detail

inline std::uint64_t substream_seed(std::uint64_t root, std::string_view name) {
  return detail::splitmix64(root ^ detail::fnv1a(name));
}

inline std::uint64_t substream_seed(std::uint64_t root, std::string_view name,
                                    std::uint64_t index) {
  return detail::splitmix64(substream_seed(root, name) + 0x632be59bd9b4e019ull * (index + 1));
}

inline Rng substream(std::uint64_t root, std::string_view name) {
  return Rng(substream_seed(root, name));
}

inline Rng substream(std::uint64_t root, std::string_view name, std::uint64_t index) {
  return Rng(substream_seed(root, name, index));
}

}  // namespace rince
