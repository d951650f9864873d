#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "malacopula/fft.hpp"
#include "malacopula/signal.hpp"
#include "support.hpp"

using namespace malacopula;
using namespace testing_support;

namespace {

void expect_near_vec(const std::vector<double>& got, const std::vector<double>& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
}

}  // namespace

TEST(SignalType, RejectsNonFiniteSamples) {
  EXPECT_THROW(Signal({0.1, NAN}, 16000), std::invalid_argument);
  EXPECT_THROW(Signal({INFINITY}, 16000), std::invalid_argument);
  EXPECT_THROW(Signal({0.1}, 0), std::invalid_argument);
}

TEST(FilterType, ShapeAndOddLength) {
  EXPECT_THROW(MalacopulaFilter(1, 4), std::invalid_argument);
  EXPECT_THROW(MalacopulaFilter(0, 3), std::invalid_argument);
  EXPECT_THROW(MalacopulaFilter(2, 3, std::vector<double>(5)), std::invalid_argument);
  EXPECT_THROW(MalacopulaFilter(1, 3, {0.0, NAN, 0.0}), std::invalid_argument);
  MalacopulaFilter f(3, 5);
  EXPECT_EQ(f.coeffs().size(), 15u);
  EXPECT_EQ(f.centre(), 2u);
}

TEST(BartlettWindow, SmallLengths) {
  expect_near_vec(bartlett_window(3), {0, 1, 0}, 0);
  expect_near_vec(bartlett_window(5), {0, 0.5, 1, 0.5, 0}, 0);
  expect_near_vec(bartlett_window(1), {1}, 0);
  EXPECT_THROW(bartlett_window(0), std::invalid_argument);
}

TEST(BartlettWindow, SymmetricWithUnitCentre) {
  for (std::size_t l : {7u, 257u, 1025u}) {
    const auto w = bartlett_window(l);
    EXPECT_EQ(w[l / 2], 1.0);
    for (std::size_t i = 0; i < l; ++i) EXPECT_DOUBLE_EQ(w[i], w[l - 1 - i]);
  }
}

TEST(PolynomialBranch, Powers) {
  expect_near_vec(polynomial_branch(Signal({1, 2, -1}, 8000), 2).data(), {1, 4, 1}, 0);
  expect_near_vec(polynomial_branch(Signal({0.5, -0.5}, 8000), 3).data(), {0.125, -0.125}, 0);
  const Signal x = random_signal(50, 3);
  EXPECT_EQ(polynomial_branch(x, 1), x);
  EXPECT_THROW(polynomial_branch(x, 0), std::invalid_argument);
}

TEST(PolynomialBranch, DoublingInputScalesByPowerOfTwo) {
  const Signal x = random_signal(64, 5);
  std::vector<double> doubled(x.data());
  for (double& v : doubled) v *= 2.0;
  for (int k = 1; k <= 5; ++k) {
    const auto a = polynomial_branch(x, k).data();
    const auto b = polynomial_branch(Signal(doubled, x.sample_rate()), k).data();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], std::ldexp(a[i], k), 1e-12);
  }
}

TEST(ConvolveSame, SmallExamples) {
  const std::vector<double> x = {1, 2, 3};
  expect_near_vec(convolve_same(x, std::vector<double>{0, 1, 0}), {1, 2, 3}, 0);
  expect_near_vec(convolve_same(x, std::vector<double>{1, 0, 0}), {0, 1, 2}, 0);
  expect_near_vec(convolve_same(std::vector<double>{1, 1, 1, 1}, std::vector<double>{0.5, 0.5, 0.5}),
                  {1.0, 1.5, 1.5, 1.0}, 1e-15);
  EXPECT_THROW(convolve_same(x, std::vector<double>{1, 0}), std::invalid_argument);
  EXPECT_THROW(convolve_fft(x, std::vector<double>{1, 0}), std::invalid_argument);
}

TEST(ConvolveSame, CentredImpulseIsIdentityForEveryLength) {
  for (std::size_t n : {1u, 2u, 7u, 100u, 4097u}) {
    for (std::size_t l : {1u, 3u, 257u}) {
      std::vector<double> h(l, 0.0);
      h[l / 2] = 1.0;
      const auto x = random_vector(n, n * 31 + l);
      EXPECT_EQ(convolve_direct(x, h), x);
      expect_near_vec(convolve_fft(x, h), x, 1e-12);
    }
  }
}

TEST(ConvolveSame, MatchesBruteForceOracle) {
  SplitMix64 rng(11);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 1 + rng.next() % 600;
    const std::size_t l = 2 * (rng.next() % 40) + 1;
    const auto x = random_vector(n, rng.next());
    const auto h = random_vector(l, rng.next());
    const auto want = brute_convolve(x, h);
    expect_near_vec(convolve_direct(x, h), want, 1e-12);
    expect_near_vec(convolve_fft(x, h), want, 1e-11);
    expect_near_vec(convolve_same(x, h), want, 1e-11);
  }
}

TEST(ConvolveSame, FilterLongerThanSignal) {
  const auto x = random_vector(5, 1);
  const auto h = random_vector(1025, 2);
  expect_near_vec(convolve_fft(x, h), brute_convolve(x, h), 1e-12);
  expect_near_vec(convolve_direct(x, h), brute_convolve(x, h), 1e-12);
}

TEST(ConvolveSame, FftAgreesWithDirectOnLongInputs) {
  SplitMix64 rng(99);
  for (int t = 0; t < 6; ++t) {
    const std::size_t n = 1000 + rng.next() % 65000;
    const std::size_t l = t % 2 ? 1025 : 257;
    const auto x = random_vector(n, rng.next());
    const auto h = random_vector(l, rng.next());
    const auto a = convolve_fft(x, h);
    const auto b = convolve_direct(x, h);
    EXPECT_LE(max_abs_diff(a, b), 1e-8 * std::max(1.0, max_abs(b)));
  }
}

TEST(Fft, GoodSizesAreSmoothAndLargeEnough) {
  for (std::size_t n : {1u, 2u, 7u, 17u, 1000u, 65537u, 66561u}) {
    std::size_t m = good_fft_size(n);
    EXPECT_GE(m, n);
    for (std::size_t p : {2u, 3u, 5u})
      while (m % p == 0) m /= p;
    EXPECT_EQ(m, 1u);
  }
}

TEST(Fft, RoundTrip) {
  const auto x = random_vector(96, 4);
  RealFft fft(96);
  const Spectrum X = fft.forward(x);
  std::vector<double> back(96);
  fft.inverse(X, back);
  for (double& v : back) v /= 96.0;
  expect_near_vec(back, x, 1e-13);
}

TEST(HammersteinForward, Examples) {
  MalacopulaFilter ident(1, 3, {0, 1, 0});
  expect_near_vec(hammerstein_forward(Signal({0.2, -0.4}, 16000), ident).data(), {0.2, -0.4}, 0);
  MalacopulaFilter two(2, 1, {1, 1});
  expect_near_vec(hammerstein_forward(Signal({1, 2}, 16000), two).data(), {2, 6}, 0);
}

TEST(HammersteinForward, EqualsSumOfPerBranchOracles) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Signal x = random_signal(32, seed);
    const MalacopulaFilter f = random_filter(3, 5, seed + 100);
    std::vector<double> want(32, 0.0);
    const auto w = bartlett_window(5);
    for (std::size_t k = 0; k < 3; ++k) {
      std::vector<double> xk(x.data()), h(5);
      for (double& v : xk) v = std::pow(v, static_cast<double>(k + 1));
      for (std::size_t i = 0; i < 5; ++i) h[i] = w[i] * f.row(k)[i];
      const auto y = brute_convolve(xk, h);
      for (std::size_t i = 0; i < 32; ++i) want[i] += y[i];
    }
    expect_near_vec(hammerstein_forward(x, f).data(), want, 1e-13);
  }
}

TEST(HammersteinForward, LinearInCoefficients) {
  const Signal x = random_signal(3000, 8);
  for (std::size_t l : {5u, 257u}) {
    const auto a = random_filter(3, l, 1);
    const auto b = random_filter(3, l, 2);
    const double alpha = 0.7, beta = -1.3;
    std::vector<double> mix(a.coeffs().size());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * a.coeffs()[i] + beta * b.coeffs()[i];
    const auto ya = hammerstein_forward(x, a).data();
    const auto yb = hammerstein_forward(x, b).data();
    const auto ym = hammerstein_forward(x, MalacopulaFilter(3, l, mix)).data();
    for (std::size_t i = 0; i < ym.size(); ++i) EXPECT_NEAR(ym[i], alpha * ya[i] + beta * yb[i], 1e-10);
  }
}

TEST(LinfNormalize, Examples) {
  expect_near_vec(linf_normalize(Signal({0.5, -2, 1}, 8000)).data(), {0.25, -1, 0.5}, 0);
  expect_near_vec(linf_normalize(Signal({0, 0, 0}, 8000)).data(), {0, 0, 0}, 0);
  expect_near_vec(linf_normalize(Signal({1}, 8000)).data(), {1}, 0);
  const Signal tiny({1e-10, -5e-10}, 8000);
  EXPECT_EQ(linf_normalize(tiny), tiny);
}

TEST(FindPeak, FirstMaximumWins) {
  const std::vector<double> y = {0.1, -0.5, 0.5, 0.2};
  const Peak p = find_peak(y);
  EXPECT_EQ(p.index, 1u);
  EXPECT_EQ(p.magnitude, 0.5);
}

TEST(MalacopulaApply, Examples) {
  Signal x({0.25, -1.0, 0.5}, 16000);
  EXPECT_EQ(malacopula_apply(x, MalacopulaFilter(1, 3, {0, 1, 0})), x);
  MalacopulaFilter two(2, 1, {1, 1});
  expect_near_vec(malacopula_apply(Signal({1, 2}, 16000), two).data(), {1.0 / 3.0, 1.0}, 1e-15);
}

TEST(MalacopulaApply, UnitPeakOnRandomInputs) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Signal x = random_signal(200 + seed * 37, seed);
    const auto f = random_filter(1 + seed % 5, 2 * (seed % 9) + 1, seed + 7);
    EXPECT_NEAR(max_abs(malacopula_apply(x, f).data()), 1.0, 1e-12);
  }
}
