#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace malacopula::detail {

/// Circular kernel q with q[d mod n] = h[c - d] for d in [-c, c], so that the
/// circular convolution x (*) q equals the centred correlation-form output
/// whenever n >= len(x) + c.
inline std::vector<double> circular_kernel(std::span<const double> h, std::size_t n) {
  const std::size_t c = h.size() / 2;
  std::vector<double> q(n, 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const std::size_t pos = i <= c ? c - i : n - (i - c);
    q[pos] += h[i];
  }
  return q;
}

/// Index of tap i inside a circular kernel of size n.
inline std::size_t circular_index(std::size_t i, std::size_t c, std::size_t n) { return i <= c ? c - i : n - (i - c); }

}  // namespace malacopula::detail
