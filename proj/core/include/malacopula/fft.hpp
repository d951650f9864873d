#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace malacopula {

using Spectrum = std::vector<std::complex<double>>;

/// Real-input DFT of a fixed length backed by FFTW. Plans are created once per
/// length (FFTW_ESTIMATE, unaligned) and shared, so every instance of a given
/// length runs the same plan and results are bit-reproducible. Execution is
/// thread-safe; planning is serialised internally.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  /// Unnormalised forward transform of `in` zero-padded to size().
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  Spectrum forward(std::span<const double> in) const;

  /// Unnormalised inverse of a half spectrum (bins() values); the caller scales
  /// by 1/size() when a true inverse is wanted.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

 private:
  std::size_t n_;
  void* r2c_;
  void* c2r_;
};

/// Smallest n' >= n whose only prime factors are 2, 3 and 5.
std::size_t good_fft_size(std::size_t n);

}  // namespace malacopula
