#include "malacopula/signal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "circular_kernel.hpp"
#include "malacopula/fft.hpp"

namespace malacopula {
namespace {

void require_odd_length(std::size_t length, const char* who) {
  if (length == 0 || length % 2 == 0)
    throw std::invalid_argument(std::string(who) + ": filter length must be odd, got " +
                                std::to_string(length));
}

}  // namespace

Signal::Signal(std::vector<double> samples, int sample_rate_hz)
    : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
  if (sample_rate_hz_ <= 0) throw std::invalid_argument("Signal: sample rate must be positive");
  for (double v : samples_)
    if (!std::isfinite(v)) throw std::invalid_argument("Signal: non-finite sample");
}

MalacopulaFilter::MalacopulaFilter(std::size_t branches, std::size_t length)
    : MalacopulaFilter(branches, length, std::vector<double>(branches * length, 0.0)) {}

MalacopulaFilter::MalacopulaFilter(std::size_t branches, std::size_t length, std::vector<double> coeffs)
    : branches_(branches), length_(length), coeffs_(std::move(coeffs)) {
  if (branches_ == 0) throw std::invalid_argument("MalacopulaFilter: need at least one branch");
  require_odd_length(length_, "MalacopulaFilter");
  if (coeffs_.size() != branches_ * length_)
    throw std::invalid_argument("MalacopulaFilter: coefficient count does not match K x L");
  for (double v : coeffs_)
    if (!std::isfinite(v)) throw std::invalid_argument("MalacopulaFilter: non-finite coefficient");
}

std::vector<double> MalacopulaFilter::windowed_row(std::size_t k) const {
  const auto w = bartlett_window(length_);
  const auto c = row(k);
  std::vector<double> h(length_);
  for (std::size_t i = 0; i < length_; ++i) h[i] = w[i] * c[i];
  return h;
}

std::vector<double> bartlett_window(std::size_t length) {
  if (length == 0) throw std::invalid_argument("bartlett_window: length must be positive");
  if (length == 1) return {1.0};
  std::vector<double> w(length);
  const double denom = static_cast<double>(length - 1);
  for (std::size_t i = 0; i < length; ++i) {
    const double offset = std::abs(2.0 * static_cast<double>(i) - denom);
    w[i] = 1.0 - offset / denom;
  }
  return w;
}

Signal polynomial_branch(const Signal& x, int k) {
  if (k < 1) throw std::invalid_argument("polynomial_branch: power must be >= 1");
  std::vector<double> out(x.samples().begin(), x.samples().end());
  for (std::size_t n = 0; n < out.size(); ++n) {
    const double v = x.samples()[n];
    double p = v;
    for (int j = 1; j < k; ++j) p *= v;
    out[n] = p;
  }
  return Signal(std::move(out), x.sample_rate());
}

std::vector<double> convolve_direct(std::span<const double> x, std::span<const double> h) {
  require_odd_length(h.size(), "convolve_direct");
  const auto n_x = static_cast<std::ptrdiff_t>(x.size());
  const auto c = static_cast<std::ptrdiff_t>(h.size() / 2);
  std::vector<double> out(x.size(), 0.0);
  for (std::ptrdiff_t n = 0; n < n_x; ++n) {
    // Only taps whose input index lands inside x contribute.
    const std::ptrdiff_t i_lo = std::max<std::ptrdiff_t>(0, c - n);
    const std::ptrdiff_t i_hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(h.size()), n_x - n + c);
    double acc = 0.0;
    for (std::ptrdiff_t i = i_lo; i < i_hi; ++i) acc += h[i] * x[n + i - c];
    out[n] = acc;
  }
  return out;
}

std::vector<double> convolve_fft(std::span<const double> x, std::span<const double> h) {
  require_odd_length(h.size(), "convolve_fft");
  if (x.empty()) return {};
  const RealFft fft(good_fft_size(x.size() + h.size() / 2));
  const auto q = detail::circular_kernel(h, fft.size());
  auto X = fft.forward(x);
  const auto Q = fft.forward(q);
  for (std::size_t b = 0; b < X.size(); ++b) X[b] *= Q[b];
  std::vector<double> full(fft.size());
  fft.inverse(X, full);
  const double scale = 1.0 / static_cast<double>(fft.size());
  std::vector<double> out(x.size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = full[n] * scale;
  return out;
}

std::vector<double> convolve_same(std::span<const double> x, std::span<const double> h) {
  require_odd_length(h.size(), "convolve_same");
  if (h.size() <= 15 || x.size() * h.size() < kFftCrossover) return convolve_direct(x, h);
  return convolve_fft(x, h);
}

Signal convolve_same(const Signal& x, std::span<const double> h) {
  return Signal(convolve_same(x.samples(), h), x.sample_rate());
}

Signal hammerstein_forward(const Signal& x, const MalacopulaFilter& filter) {
  if (x.empty()) throw std::invalid_argument("hammerstein_forward: empty signal");
  const std::size_t n = x.size();
  const std::size_t length = filter.length();
  const std::size_t K = filter.branches();
  std::vector<double> branch(x.samples().begin(), x.samples().end());

  if (length <= 15 || n * length < kFftCrossover) {
    std::vector<double> y(n, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      if (k > 0)
        for (std::size_t i = 0; i < n; ++i) branch[i] *= x.samples()[i];
      const auto part = convolve_direct(branch, filter.windowed_row(k));
      for (std::size_t i = 0; i < n; ++i) y[i] += part[i];
    }
    return Signal(std::move(y), x.sample_rate());
  }

  // Branch outputs are summed in the frequency domain: one inverse transform.
  const RealFft fft(good_fft_size(n + length / 2));
  Spectrum acc(fft.bins(), {0.0, 0.0});
  for (std::size_t k = 0; k < K; ++k) {
    if (k > 0)
      for (std::size_t i = 0; i < n; ++i) branch[i] *= x.samples()[i];
    const auto X = fft.forward(branch);
    const auto Q = fft.forward(detail::circular_kernel(filter.windowed_row(k), fft.size()));
    for (std::size_t b = 0; b < acc.size(); ++b) acc[b] += X[b] * Q[b];
  }
  std::vector<double> full(fft.size());
  fft.inverse(acc, full);
  const double scale = 1.0 / static_cast<double>(fft.size());
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = full[i] * scale;
  return Signal(std::move(y), x.sample_rate());
}

Peak find_peak(std::span<const double> y) {
  Peak p;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double m = std::abs(y[i]);
    if (m > p.magnitude) {
      p.magnitude = m;
      p.index = i;
    }
  }
  return p;
}

Signal linf_normalize(const Signal& y) {
  if (y.empty()) throw std::invalid_argument("linf_normalize: empty signal");
  const Peak p = find_peak(y.samples());
  if (p.magnitude <= kNormGuard) return y;
  std::vector<double> out(y.samples().begin(), y.samples().end());
  for (double& v : out) v /= p.magnitude;
  return Signal(std::move(out), y.sample_rate());
}

Signal malacopula_apply(const Signal& x, const MalacopulaFilter& filter) {
  return linf_normalize(hammerstein_forward(x, filter));
}

}  // namespace malacopula
