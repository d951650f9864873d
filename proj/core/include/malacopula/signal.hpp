#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace malacopula {

/// Peak magnitude at or below which linf_normalize leaves a signal untouched.
inline constexpr double kNormGuard = 1e-9;

/// Finite mono waveform. Samples are nominally in [-1, 1].
class Signal {
 public:
  Signal() = default;
  Signal(std::vector<double> samples, int sample_rate_hz);

  std::span<const double> samples() const { return samples_; }
  const std::vector<double>& data() const { return samples_; }
  int sample_rate() const { return sample_rate_hz_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  friend bool operator==(const Signal&, const Signal&) = default;

 private:
  std::vector<double> samples_;
  int sample_rate_hz_ = 16000;
};

/// K x L coefficient matrix of a Malacopula filter. Row k holds the taps of the
/// branch fed by x^(k+1). The Bartlett window is not stored; it is applied on
/// every use. L must be odd so the centre tap is the zero-delay position.
class MalacopulaFilter {
 public:
  MalacopulaFilter(std::size_t branches, std::size_t length);
  MalacopulaFilter(std::size_t branches, std::size_t length, std::vector<double> coeffs);

  std::size_t branches() const { return branches_; }
  std::size_t length() const { return length_; }
  std::size_t centre() const { return length_ / 2; }

  std::span<const double> coeffs() const { return coeffs_; }
  std::span<double> coeffs() { return coeffs_; }
  std::span<const double> row(std::size_t k) const { return {coeffs_.data() + k * length_, length_}; }
  std::span<double> row(std::size_t k) { return {coeffs_.data() + k * length_, length_}; }

  /// w ⊙ c_k: the taps actually convolved with branch k.
  std::vector<double> windowed_row(std::size_t k) const;

  friend bool operator==(const MalacopulaFilter&, const MalacopulaFilter&) = default;

 private:
  std::size_t branches_;
  std::size_t length_;
  std::vector<double> coeffs_;
};

/// Triangular window w[i] = 1 - |2i - (L-1)| / (L-1); w = [1] for L = 1.
std::vector<double> bartlett_window(std::size_t length);

/// Elementwise x^k by repeated multiplication.
Signal polynomial_branch(const Signal& x, int k);

/// Centred "same" convolution with zero padding:
///   out[n] = sum_i h[i] * x[n + i - (L-1)/2].
/// Dispatches to the direct or FFT route by problem size.
std::vector<double> convolve_same(std::span<const double> x, std::span<const double> h);
Signal convolve_same(const Signal& x, std::span<const double> h);

std::vector<double> convolve_direct(std::span<const double> x, std::span<const double> h);
std::vector<double> convolve_fft(std::span<const double> x, std::span<const double> h);

/// Problem sizes (N * L) at or above this use the FFT route.
inline constexpr std::size_t kFftCrossover = std::size_t{1} << 15;

/// mc(x) = sum_k x^k * (w ⊙ c_k), before normalisation.
Signal hammerstein_forward(const Signal& x, const MalacopulaFilter& filter);

/// y / max|y|, or y unchanged when max|y| <= kNormGuard.
Signal linf_normalize(const Signal& y);

/// The attack transform: linf_normalize(hammerstein_forward(x, filter)).
Signal malacopula_apply(const Signal& x, const MalacopulaFilter& filter);

/// Index and magnitude of the first sample with the largest |y|.
struct Peak {
  std::size_t index = 0;
  double magnitude = 0.0;
};
Peak find_peak(std::span<const double> y);

}  // namespace malacopula
