#include "malacopula/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>

namespace malacopula {
namespace {

struct PlanPair {
  fftw_plan r2c;
  fftw_plan c2r;
};

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

PlanPair plans_for(std::size_t n) {
  // Plans live for the whole process; FFTW owns them.
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  if (auto it = cache.find(n); it != cache.end()) return it->second;

  const int len = static_cast<int>(n);
  std::vector<double> real(n);
  std::vector<std::complex<double>> cplx(n / 2 + 1);
  auto* c = reinterpret_cast<fftw_complex*>(cplx.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p{fftw_plan_dft_r2c_1d(len, real.data(), c, flags),
             fftw_plan_dft_c2r_1d(len, c, real.data(), flags | FFTW_DESTROY_INPUT)};
  if (!p.r2c || !p.c2r) throw std::runtime_error("fft: planning failed for size " + std::to_string(n));
  cache.emplace(n, p);
  return p;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n == 0) throw std::invalid_argument("RealFft: size must be positive");
  const PlanPair p = plans_for(n);
  r2c_ = p.r2c;
  c2r_ = p.c2r;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  if (in.size() > n_) throw std::invalid_argument("RealFft::forward: input longer than transform");
  if (out.size() != bins()) throw std::invalid_argument("RealFft::forward: output size mismatch");
  std::vector<double> buf(n_, 0.0);
  std::copy(in.begin(), in.end(), buf.begin());
  fftw_execute_dft_r2c(static_cast<fftw_plan>(r2c_), buf.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

Spectrum RealFft::forward(std::span<const double> in) const {
  Spectrum out(bins());
  forward(in, out);
  return out;
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
  if (in.size() != bins()) throw std::invalid_argument("RealFft::inverse: input size mismatch");
  if (out.size() != n_) throw std::invalid_argument("RealFft::inverse: output size mismatch");
  // c2r overwrites its input.
  Spectrum scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(c2r_), reinterpret_cast<fftw_complex*>(scratch.data()),
                       out.data());
}

std::size_t good_fft_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2u, 3u, 5u})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

}  // namespace malacopula
