#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "malacopula/corpus.hpp"
#include "malacopula/embedder.hpp"
#include "malacopula/grad.hpp"
#include "malacopula/rng.hpp"
#include "malacopula/signal.hpp"
#include "malacopula/trainer.hpp"

using namespace malacopula;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void BM_convolve_direct(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)), 1);
  const auto h = noise(static_cast<std::size_t>(state.range(1)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(convolve_direct(x, h));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_convolve_fft(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)), 1);
  const auto h = noise(static_cast<std::size_t>(state.range(1)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(convolve_fft(x, h));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void conv_args(benchmark::internal::Benchmark* b) {
  for (long n : {8000, 16000, 65536})
    for (long l : {33, 257, 1025}) b->Args({n, l});
}

void BM_embed(benchmark::State& state) {
  const Embedder emb(EmbedderConfig::evaluation());
  const auto x = noise(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(emb.extract(x));
}

// One training step for a single utterance: forward with tape plus backward.
void BM_train_step(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto l = static_cast<std::size_t>(state.range(1));
  const Signal x = generate_utterance(make_speaker_profile("b", 9), 0.5, 10);
  const auto input = std::make_shared<const PreparedInput>(x, k, l);
  const auto emb = std::make_shared<const Embedder>(EmbedderConfig::training());
  const Embedding target = emb->extract(generate_utterance(make_speaker_profile("b", 9), 0.5, 11).samples());
  const MalacopulaFilter f = init_filter(k, l, 5);
  for (auto _ : state) {
    auto [loss, tape] = forward_with_tape(input, f, emb, target);
    benchmark::DoNotOptimize(loss);
    benchmark::DoNotOptimize(backward(tape));
  }
}

}  // namespace

BENCHMARK(BM_convolve_direct)->Apply(conv_args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_convolve_fft)->Apply(conv_args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_embed)->Arg(8000)->Arg(16000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_train_step)->Args({1, 257})->Args({5, 257})->Args({1, 1025})->Args({5, 1025})->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
