#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "malacopula/corpus.hpp"
#include "malacopula/embedder.hpp"
#include "support.hpp"

using namespace malacopula;
using namespace testing_support;

namespace {

Signal tone(double hz, double phase, double seconds = 1.0, int rate = 16000) {
  std::vector<double> x(static_cast<std::size_t>(seconds * rate));
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = 0.8 * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate + phase);
  return Signal(std::move(x), rate);
}

}  // namespace

TEST(EmbedderConfig, DefaultRolesAreValidAndDistinct) {
  const auto a = EmbedderConfig::training(), b = EmbedderConfig::selection(), t = EmbedderConfig::evaluation();
  for (const auto& c : {a, b, t}) EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(a.frame_length, 400);
  EXPECT_EQ(b.mel_bands, 32);
  EXPECT_EQ(t.embedding_dim, 28);
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_NE(b.hash(), t.hash());
  EXPECT_EQ(a.hash(), EmbedderConfig::training().hash());
}

TEST(EmbedderConfig, RejectsBrokenInvariants) {
  auto c = EmbedderConfig::training();
  c.fft_size = 256;  // below frame length
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = EmbedderConfig::training();
  c.mel_bands = 256;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = EmbedderConfig::training();
  c.embedding_dim = 49;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = EmbedderConfig::training();
  c.hop_length = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(Embedder{c}, std::invalid_argument);
}

TEST(Embedder, ProjectionIsDeterministic) {
  const Embedder a(EmbedderConfig::training()), b(EmbedderConfig::training());
  EXPECT_TRUE(std::equal(a.projection().begin(), a.projection().end(), b.projection().begin()));
  EXPECT_EQ(a.projection_hash(), b.projection_hash());
  auto other = EmbedderConfig::training();
  other.projection_seed += 1;
  EXPECT_NE(Embedder(other).projection_hash(), a.projection_hash());
}

TEST(Embedder, DeterministicAndFinite) {
  const Signal x = random_signal(4000, 1);
  const auto e1 = extract_embedding(x, EmbedderConfig::evaluation());
  const auto e2 = extract_embedding(x, EmbedderConfig::evaluation());
  EXPECT_EQ(e1, e2);
  EXPECT_EQ(e1.size(), 28u);
  for (double v : e1.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(Embedder, ShortSignalRejected) {
  EXPECT_THROW(extract_embedding(random_signal(399, 2), EmbedderConfig::training()), std::invalid_argument);
  EXPECT_NO_THROW(extract_embedding(random_signal(400, 2), EmbedderConfig::training()));
}

TEST(Embedder, NearlyGainInvariantOnCorpusUtterances) {
  const auto profile = make_speaker_profile("s", 5);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Signal x = generate_utterance(profile, 0.6, seed);
    std::vector<double> half(x.data());
    for (double& v : half) v *= 0.5;
    for (const auto& cfg : {EmbedderConfig::training(), EmbedderConfig::selection(), EmbedderConfig::evaluation()}) {
      const double cs =
          cosine_similarity(extract_embedding(x, cfg), extract_embedding(Signal(half, x.sample_rate()), cfg));
      EXPECT_GT(cs, 0.99);
    }
  }
}

TEST(Embedder, TonesOfDifferentPitchAreLessSimilar) {
  for (const auto& cfg : {EmbedderConfig::training(), EmbedderConfig::selection(), EmbedderConfig::evaluation()}) {
    const auto a = extract_embedding(tone(440, 0.3), cfg);
    const auto b = extract_embedding(tone(440, 2.1), cfg);
    const auto c = extract_embedding(tone(220, 0.3), cfg);
    EXPECT_LT(cosine_similarity(a, c), cosine_similarity(a, b));
  }
}

TEST(Embedder, BackwardMatchesFiniteDifferences) {
  const Embedder emb(desk_embedder());
  const Signal x = random_signal(120, 9);
  const auto w = random_vector(emb.dim(), 10);
  auto objective = [&](std::span<const double> s) {
    const auto e = emb.extract(s);
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * e.values[i];
    return acc;
  };
  Embedder::Trace trace;
  emb.extract(x.samples(), trace);
  const auto grad = emb.backward(trace, w);
  ASSERT_EQ(grad.size(), x.size());
  std::vector<double> xp(x.data());
  const double h = 1e-6;
  for (std::size_t i = 0; i < xp.size(); i += 7) {
    const double keep = xp[i];
    xp[i] = keep + h;
    const double up = objective(xp);
    xp[i] = keep - h;
    const double down = objective(xp);
    xp[i] = keep;
    const double fd = (up - down) / (2 * h);
    EXPECT_NEAR(grad[i], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "sample " << i;
  }
}

TEST(CosineSimilarity, Examples) {
  EXPECT_EQ(cosine_similarity({{1, 0}}, {{0, 1}}), 0.0);
  EXPECT_NEAR(cosine_similarity({{3, 4}}, {{3, 4}}), 1.0, 1e-15);
  EXPECT_NEAR(cosine_similarity({{1, 2}}, {{-2, -4}}), -1.0, 1e-15);
  EXPECT_THROW(cosine_similarity({{0, 0}}, {{1, 0}}), std::invalid_argument);
  EXPECT_THROW(cosine_similarity({{1, 0}}, {{1, 0, 0}}), std::invalid_argument);
}

TEST(CosineSimilarity, SymmetricScaleInvariantAndBounded) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    Embedding a{random_vector(9, s)}, b{random_vector(9, s + 1000)};
    const double cs = cosine_similarity(a, b);
    EXPECT_GE(cs, -1.0);
    EXPECT_LE(cs, 1.0);
    EXPECT_EQ(cs, cosine_similarity(b, a));
    Embedding scaled = a;
    for (double& v : scaled.values) v *= 17.0;
    EXPECT_NEAR(cosine_similarity(scaled, b), cs, 1e-14);
  }
}

TEST(AverageEnrolment, Examples) {
  const std::vector<Embedding> two = {{{1, 0}}, {{0, 1}}};
  EXPECT_EQ(average_enrolment(two).values, (std::vector<double>{0.5, 0.5}));
  const std::vector<Embedding> one = {{{0.3, -2}}};
  EXPECT_EQ(average_enrolment(one), one[0]);
  EXPECT_THROW(average_enrolment(std::span<const Embedding>{}), std::invalid_argument);
  const std::vector<Embedding> cancel = {{{1, 2}}, {{-1, -2}}};
  const Embedding zero = average_enrolment(cancel);
  EXPECT_THROW(cosine_similarity(zero, one[0]), std::invalid_argument);
  const std::vector<Embedding> mismatch = {{{1, 2}}, {{1}}};
  EXPECT_THROW(average_enrolment(mismatch), std::invalid_argument);
}
