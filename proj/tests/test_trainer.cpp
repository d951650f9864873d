#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "malacopula/corpus.hpp"
#include "malacopula/trainer.hpp"
#include "support.hpp"

using namespace malacopula;
using namespace testing_support;

namespace {

struct Job {
  std::vector<Signal> spoofs;
  Embedding enrol;
};

Job corpus_job(const EmbedderConfig& cfg, int n_spoofs = 6) {
  const auto spk = make_speaker_profile("spk", 42);
  const AttackSpec attack{"A01", AttackKind::FrequencyDetune, 0.02};
  Job job;
  std::vector<Embedding> enrol;
  for (std::uint64_t i = 0; i < 3; ++i) enrol.push_back(extract_embedding(generate_utterance(spk, 0.5, 100 + i), cfg));
  job.enrol = average_enrolment(enrol);
  for (int i = 0; i < n_spoofs; ++i) job.spoofs.push_back(generate_spoof(spk, attack, 0.5, 200 + i));
  return job;
}

double mean_of(const std::vector<FilterCheckpoint>& cps, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += cps[i].mean_loss;
  return s / static_cast<double>(to - from);
}

}  // namespace

TEST(TrainingConfig, Defaults) {
  TrainingConfig c;
  EXPECT_EQ(c.epochs, 60);
  EXPECT_EQ(c.batch_size, 12);
  EXPECT_EQ(c.learning_rate, 1e-3);
  EXPECT_EQ(c.adam_beta1, 0.9);
  EXPECT_EQ(c.adam_beta2, 0.999);
  EXPECT_EQ(c.adam_eps, 1e-8);
  EXPECT_FALSE(c.checkpoint_every_batch);
  EXPECT_NO_THROW(c.validate());
  c.length = 4;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainingConfig{};
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainingConfig{};
  c.adam_beta2 = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(InitFilter, IdentityPlusSmallNoise) {
  const auto f1 = init_filter(1, 3, 0);
  EXPECT_EQ(std::vector<double>(f1.coeffs().begin(), f1.coeffs().end()), (std::vector<double>{0, 1, 0}));
  const Signal x({0.5, -1.0, 0.25, 0.75}, 16000);
  EXPECT_EQ(malacopula_apply(x, f1), x);

  const auto f3 = init_filter(3, 5, 7);
  for (std::size_t k = 1; k < 3; ++k)
    for (double v : f3.row(k)) EXPECT_LE(std::abs(v), 1e-4);
  EXPECT_EQ(f3.row(0)[2], 1.0);
  EXPECT_EQ(init_filter(3, 5, 7), f3);
  EXPECT_NE(init_filter(3, 5, 8), f3);
  EXPECT_THROW(init_filter(2, 4, 0), std::invalid_argument);
}

TEST(InitFilter, InitialLossIsTheUnfilteredSpoofLoss) {
  const auto cfg = desk_embedder();
  const Signal x = random_signal(400, 3);
  const Embedding target{random_vector(12, 4)};
  const auto unit = linf_normalize(x);
  const double want = 1.0 - cosine_similarity(extract_embedding(unit, cfg), target);
  EXPECT_NEAR(forward_with_tape(x, init_filter(1, 257, 1), cfg, target).first, want, 1e-12);
  EXPECT_NEAR(forward_with_tape(x, init_filter(5, 257, 1), cfg, target).first, want, 1e-3);
}

TEST(AdamStep, ZeroGradientLeavesCoefficients) {
  auto f = init_filter(2, 5, 1);
  const auto before = f;
  auto st = AdamState::for_filter(f);
  Gradient g{2, 5, std::vector<double>(10, 0.0)};
  adam_step(f, g, st, TrainingConfig{});
  EXPECT_EQ(f, before);
  EXPECT_EQ(st.step, 1u);
}

TEST(AdamStep, FirstStepMovesByLearningRateAgainstGradientSign) {
  auto f = random_filter(2, 3, 5);
  const auto before = f;
  auto st = AdamState::for_filter(f);
  Gradient g{2, 3, {0.5, -2.0, 1e-3, -1e-2, 3.0, -0.25}};
  TrainingConfig cfg;
  adam_step(f, g, st, cfg);
  for (std::size_t i = 0; i < 6; ++i) {
    const double delta = f.coeffs()[i] - before.coeffs()[i];
    EXPECT_NEAR(delta, -std::copysign(cfg.learning_rate, g.d_coeffs[i]), 1e-7);
  }
}

TEST(AdamStep, ShapeMismatchRejected) {
  auto f = random_filter(2, 3, 5);
  auto st = AdamState::for_filter(f);
  EXPECT_THROW(adam_step(f, Gradient{1, 3, std::vector<double>(3)}, st, TrainingConfig{}), std::invalid_argument);
  auto other = AdamState::for_filter(random_filter(1, 3, 1));
  EXPECT_THROW(adam_step(f, Gradient{2, 3, std::vector<double>(6)}, other, TrainingConfig{}), std::invalid_argument);
}

TEST(AdamStep, QuadraticSurrogateDistanceDecreases) {
  auto f = MalacopulaFilter(1, 5);
  const std::vector<double> star = {0.3, -0.2, 0.5, 0.05, -0.4};
  auto st = AdamState::for_filter(f);
  TrainingConfig cfg;
  cfg.learning_rate = 0.05;
  auto dist = [&] {
    double d = 0.0;
    for (std::size_t i = 0; i < 5; ++i) d += (f.coeffs()[i] - star[i]) * (f.coeffs()[i] - star[i]);
    return d;
  };
  double prev = dist();
  for (int step = 0; step < 10; ++step) {
    Gradient g{1, 5, std::vector<double>(5)};
    for (std::size_t i = 0; i < 5; ++i) g.d_coeffs[i] = 2.0 * (f.coeffs()[i] - star[i]);
    adam_step(f, g, st, cfg);
    const double d = dist();
    EXPECT_LT(d, prev);
    prev = d;
  }
}

TEST(TrainFilter, EmptyUtteranceListRejected) {
  EXPECT_THROW(train_filter({}, Embedding{{1.0}}, TrainingConfig{}, desk_embedder()), std::invalid_argument);
}

TEST(TrainFilter, StationaryWhenAlreadyAtZeroLoss) {
  const auto cfg = desk_embedder();
  const Signal x = linf_normalize(random_signal(300, 8));
  const Embedding own = extract_embedding(x, cfg);
  TrainingConfig tc;
  tc.branches = 1;
  tc.length = 5;
  tc.epochs = 5;
  const std::vector<Signal> utts = {x};
  const auto cps = train_filter(utts, own, tc, cfg);
  ASSERT_EQ(cps.size(), 5u);
  // The first step sees a round-off sized gradient and barely moves. Adam
  // normalises later ones to roughly learning-rate sized steps, so after that
  // only the loss and a per-step drift bound are checked.
  EXPECT_LE(max_abs_diff(malacopula_apply(x, cps[0].filter).data(), x.data()), 1e-6);
  const auto ident = init_filter(1, 5, 0);
  for (std::size_t e = 0; e < cps.size(); ++e) {
    EXPECT_LT(cps[e].mean_loss, 1e-6);
    EXPECT_LE(max_abs_diff(cps[e].filter.coeffs(), ident.coeffs()), tc.learning_rate * static_cast<double>(e + 1));
  }
}

TEST(TrainFilter, LossFallsOnCorpusJobAndRunsAreDeterministic) {
  const auto cfg = EmbedderConfig::training();
  const Job job = corpus_job(cfg);
  TrainingConfig tc;
  tc.branches = 3;
  tc.length = 257;
  tc.seed = 5;
  std::vector<int> seen;
  const auto cps = train_filter(job.spoofs, job.enrol, tc, cfg, [&](int epoch, double) { seen.push_back(epoch); });
  ASSERT_EQ(cps.size(), 60u);
  EXPECT_EQ(seen.size(), 60u);
  EXPECT_LT(cps.back().mean_loss, cps.front().mean_loss);
  EXPECT_LE(mean_of(cps, 55, 60), mean_of(cps, 0, 5));
  for (std::size_t i = 0; i < cps.size(); ++i) EXPECT_EQ(cps[i].epoch, static_cast<int>(i));
  EXPECT_NE(cps.front().filter, cps.back().filter);

  const auto hash_before = Embedder(cfg).projection_hash();
  const auto again = train_filter(job.spoofs, job.enrol, tc, cfg);
  EXPECT_EQ(Embedder(cfg).projection_hash(), hash_before);
  ASSERT_EQ(again.size(), cps.size());
  for (std::size_t i = 0; i < cps.size(); ++i) {
    EXPECT_EQ(again[i].filter, cps[i].filter);
    EXPECT_EQ(again[i].mean_loss, cps[i].mean_loss);
  }
}

TEST(TrainFilter, PerBatchCheckpoints) {
  const auto cfg = desk_embedder();
  std::vector<Signal> utts;
  for (std::uint64_t i = 0; i < 5; ++i) utts.push_back(random_signal(200, i));
  TrainingConfig tc;
  tc.branches = 2;
  tc.length = 5;
  tc.epochs = 3;
  tc.batch_size = 2;
  tc.checkpoint_every_batch = true;
  const auto cps = train_filter(utts, Embedding{random_vector(12, 9)}, tc, cfg);
  ASSERT_EQ(cps.size(), 9u);  // 3 epochs x ceil(5 / 2) batches
  EXPECT_EQ(cps[4].epoch, 1);
  EXPECT_EQ(cps[4].batch, 1);
}
