#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "malacopula/embedder.hpp"
#include "malacopula/evaluation.hpp"
#include "malacopula/rng.hpp"
#include "malacopula/signal.hpp"

namespace testing_support {

using namespace malacopula;

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  SplitMix64 rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline Signal random_signal(std::size_t n, std::uint64_t seed, int rate = 16000) {
  return Signal(random_vector(n, seed), rate);
}

/// Small embedder so that gradient checks on short signals stay cheap.
inline EmbedderConfig desk_embedder(std::uint64_t seed = 77) {
  EmbedderConfig c;
  c.frame_length = 24;
  c.hop_length = 8;
  c.fft_size = 32;
  c.mel_bands = 8;
  c.embedding_dim = 12;
  c.projection_seed = seed;
  return c;
}

inline MalacopulaFilter random_filter(std::size_t k, std::size_t l, std::uint64_t seed, double scale = 1.0) {
  return MalacopulaFilter(k, l, random_vector(k * l, seed, -scale, scale));
}

// Triple-loop centred convolution, straight from the definition.
inline std::vector<double> brute_convolve(std::span<const double> x, std::span<const double> h) {
  const long n = static_cast<long>(x.size());
  const long c = static_cast<long>(h.size() - 1) / 2;
  std::vector<double> out(x.size(), 0.0);
  for (long i = 0; i < n; ++i) {
    long double acc = 0.0L;
    for (long j = 0; j < static_cast<long>(h.size()); ++j) {
      const long src = i + j - c;
      if (src >= 0 && src < n) acc += static_cast<long double>(h[j]) * x[src];
    }
    out[i] = static_cast<double>(acc);
  }
  return out;
}

// Integral of |F_a - F_b| over the merged support, with F the empirical CDFs.
inline double cdf_integral_w1(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> grid(a);
  grid.insert(grid.end(), b.begin(), b.end());
  std::sort(grid.begin(), grid.end());
  auto cdf = [](const std::vector<double>& s, double t) {
    return static_cast<double>(std::upper_bound(s.begin(), s.end(), t) - s.begin()) / static_cast<double>(s.size());
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double w = grid[i + 1] - grid[i];
    if (w > 0.0) total += w * std::abs(cdf(a, grid[i]) - cdf(b, grid[i]));
  }
  return total;
}

// FAR/FRR at every midpoint between sorted distinct scores (and beyond both
// ends); the EER is read at the first sign change of FAR - FRR by
// interpolating linearly between the two bracketing operating points.
inline double sweep_eer(std::span<const double> pos, std::span<const double> neg) {
  std::vector<double> all(pos.begin(), pos.end());
  all.insert(all.end(), neg.begin(), neg.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> thresholds;
  thresholds.push_back(all.front() - 1.0);
  for (std::size_t i = 0; i + 1 < all.size(); ++i) thresholds.push_back(0.5 * (all[i] + all[i + 1]));
  thresholds.push_back(all.back() + 1.0);
  auto rates = [&](double t) {
    double far = 0.0, frr = 0.0;
    for (double s : neg) far += s >= t;
    for (double s : pos) frr += s < t;
    return std::pair{far / neg.size(), frr / pos.size()};
  };
  auto [far0, frr0] = rates(thresholds.front());
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    auto [far1, frr1] = rates(thresholds[i]);
    const double d0 = far0 - frr0, d1 = far1 - frr1;
    if (d1 <= 0.0) {
      if (d0 == d1) return 0.5 * (far1 + frr1);
      const double t = d0 / (d0 - d1);
      return far0 + t * (far1 - far0);
    }
    far0 = far1;
    frr0 = frr1;
  }
  return 0.5 * (far0 + frr0);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace testing_support
