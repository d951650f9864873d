#pragma once

#include <cstdint>
#include <string_view>

namespace malacopula {

/// SplitMix64 (Steele, Lea & Flood 2014). Every stream in the toolkit is drawn
/// from this generator so that corpora, projections and filter initialisations
/// are bit-reproducible across standard libraries. Output i of a stream seeded
/// with s is mix(s + (i + 1) * 0x9E3779B97F4A7C15).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Order-dependent 64-bit mixing of seeds (used to derive per-cell and
/// per-utterance seeds from a global seed).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// FNV-1a over a byte string.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace malacopula
