#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "malacopula/grad.hpp"
#include "malacopula/trainer.hpp"
#include "support.hpp"

using namespace malacopula;
using namespace testing_support;

namespace {

Embedding random_target(std::size_t dim, std::uint64_t seed) { return Embedding{random_vector(dim, seed)}; }

}  // namespace

TEST(ForwardWithTape, SelfTargetGivesZeroLossAndStationaryGradient) {
  const auto cfg = desk_embedder();
  const Signal x = random_signal(200, 1);
  const auto f = random_filter(3, 5, 2, 0.5);
  const Embedding own = extract_embedding(malacopula_apply(x, f), cfg);
  auto [loss, tape] = forward_with_tape(x, f, cfg, own);
  EXPECT_NEAR(loss, 0.0, 1e-10);
  const Gradient g = backward(tape);
  double norm = 0.0;
  for (double v : g.d_coeffs) norm += v * v;
  EXPECT_LT(std::sqrt(norm), 1e-6);
}

TEST(ForwardWithTape, AntipodalTargetGivesLossTwo) {
  const auto cfg = desk_embedder();
  const Signal x = random_signal(150, 3);
  const auto f = random_filter(2, 3, 4);
  Embedding neg = extract_embedding(malacopula_apply(x, f), cfg);
  for (double& v : neg.values) v = -v;
  EXPECT_NEAR(forward_with_tape(x, f, cfg, neg).first, 2.0, 1e-10);
}

TEST(ForwardWithTape, LossMatchesTapeFreeRecomputation) {
  const auto cfg = desk_embedder();
  const Embedder emb(cfg);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Signal x = random_signal(64 + 40 * s, s);
    const auto f = random_filter(1 + s % 5, 2 * (s % 4) + 1, s + 50);
    const auto target = random_target(emb.dim(), s + 99);
    const auto [loss, tape] = forward_with_tape(x, f, cfg, target);
    EXPECT_NEAR(loss, objective(x, f, emb, target), 1e-12);
    EXPECT_NEAR(tape.loss, loss, 0.0);
    EXPECT_GE(loss, 0.0);
    EXPECT_LE(loss, 2.0);
  }
}

TEST(ForwardWithTape, DimensionMismatchRejected) {
  const auto cfg = desk_embedder();
  EXPECT_THROW(forward_with_tape(random_signal(100, 1), random_filter(1, 3, 1), cfg, random_target(5, 1)),
               std::invalid_argument);
}

TEST(PreparedInput, MatchesHammersteinForward) {
  for (std::size_t l : {3u, 257u, 1025u}) {
    const Signal x = random_signal(3000, l);
    const auto f = random_filter(3, l, l + 1, 0.1);
    PreparedInput prep(x, 3, l);
    const auto a = prep.forward(f);
    const auto b = hammerstein_forward(x, f).data();
    EXPECT_LE(max_abs_diff(a, b), 1e-10 * std::max(1.0, max_abs(b)));
    EXPECT_THROW(prep.forward(random_filter(2, l, 1)), std::invalid_argument);
  }
}

TEST(Backward, SmallInstanceMatchesCentralDifferences) {
  const auto cfg = desk_embedder();
  const Embedder emb(cfg);
  const Signal x = random_signal(64, 21);
  const auto f = random_filter(2, 5, 22, 0.5);
  const auto report = check_gradient(x, f, cfg, random_target(emb.dim(), 23), 1e-4, 1e-4);
  EXPECT_FALSE(report.degenerate);
  EXPECT_GT(report.checked, 0u);
  EXPECT_TRUE(report.passed) << "max relative error " << report.max_relative_error;
}

TEST(Backward, TargetScaleDoesNotChangeGradient) {
  const auto cfg = desk_embedder();
  const Signal x = random_signal(180, 31);
  const auto f = random_filter(3, 5, 32, 0.5);
  Embedding t = random_target(12, 33), t10 = t;
  for (double& v : t10.values) v *= 10.0;
  const auto g1 = backward(forward_with_tape(x, f, cfg, t).second);
  const auto g10 = backward(forward_with_tape(x, f, cfg, t10).second);
  EXPECT_LE(max_abs_diff(g1.d_coeffs, g10.d_coeffs), 1e-10);
}

TEST(Backward, DeterministicAndShaped) {
  const auto cfg = desk_embedder();
  const Signal x = random_signal(100, 41);
  const auto f = random_filter(4, 9, 42);
  const auto tape = forward_with_tape(x, f, cfg, random_target(12, 43)).second;
  const Gradient a = backward(tape), b = backward(tape);
  EXPECT_EQ(a.d_coeffs, b.d_coeffs);
  EXPECT_EQ(a.branches, 4u);
  EXPECT_EQ(a.length, 9u);
  EXPECT_EQ(a.d_coeffs.size(), 36u);
  for (double v : a.d_coeffs) EXPECT_TRUE(std::isfinite(v));
}

TEST(Backward, CorruptedTapeIsAnInternalError) {
  const auto cfg = desk_embedder();
  auto tape = forward_with_tape(random_signal(100, 1), random_filter(2, 3, 2), cfg, random_target(12, 3)).second;
  auto broken = tape;
  broken.output.pop_back();
  EXPECT_THROW(backward(broken), std::logic_error);
  broken = tape;
  broken.input.reset();
  EXPECT_THROW(backward(broken), std::logic_error);
  broken = tape;
  broken.trace.mean.clear();
  EXPECT_THROW(backward(broken), std::logic_error);
}

TEST(CheckGradient, IdentityFilterPasses) {
  const auto cfg = desk_embedder();
  const Signal x = random_signal(300, 51);
  const auto f = init_filter(3, 5, 52);
  const auto r = check_gradient(x, f, cfg, random_target(12, 53), 1e-4, 1e-3);
  EXPECT_TRUE(r.passed) << r.max_relative_error;
}

TEST(CheckGradient, ZeroFilterIsDegenerate) {
  const auto cfg = desk_embedder();
  const auto r = check_gradient(random_signal(100, 1), MalacopulaFilter(2, 5), cfg, random_target(12, 2), 1e-4, 1e-3);
  EXPECT_TRUE(r.degenerate);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.checked, 0u);
}

TEST(CheckGradient, SampledCoordinatesOnLongFilter) {
  const auto cfg = desk_embedder();
  const Signal x = random_signal(512, 61);
  const auto f = random_filter(5, 257, 62, 0.05);
  GradientCheckOptions opt;
  opt.seed = 63;
  const auto r = check_gradient(x, f, cfg, random_target(12, 64), 1e-4, 1e-3, opt);
  EXPECT_FALSE(r.degenerate);
  EXPECT_LE(r.checked, 64u);
  EXPECT_GE(r.checked, 60u);
  EXPECT_TRUE(r.passed) << r.max_relative_error;
}

TEST(CheckGradient, RejectsNonPositiveStep) {
  EXPECT_THROW(check_gradient(random_signal(100, 1), random_filter(1, 3, 1), desk_embedder(), random_target(12, 1), 0.0,
                              1e-3),
               std::invalid_argument);
}
