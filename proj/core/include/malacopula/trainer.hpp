#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "malacopula/embedder.hpp"
#include "malacopula/grad.hpp"
#include "malacopula/signal.hpp"

namespace malacopula {

struct TrainingConfig {
  int epochs = 60;
  int batch_size = 12;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t branches = 5;
  std::size_t length = 257;
  std::uint64_t seed = 0;
  /// Emit a checkpoint after every batch instead of every epoch.
  bool checkpoint_every_batch = false;

  void validate() const;
  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;

  static AdamState for_filter(const MalacopulaFilter& filter);
};

struct FilterCheckpoint {
  int epoch = 0;  // 0-based; with per-batch checkpoints, the epoch the batch belongs to
  int batch = -1; // -1 for per-epoch checkpoints
  MalacopulaFilter filter{1, 1};
  double mean_loss = 0.0;
};

/// Branch 1 is a centred unit impulse; branches 2..K carry seeded uniform
/// noise in [-1e-4, 1e-4]. With the window's unit centre, the initial filter
/// is the identity up to that noise.
MalacopulaFilter init_filter(std::size_t branches, std::size_t length, std::uint64_t seed);

/// Bias-corrected Adam update applied to the coefficients in place.
void adam_step(MalacopulaFilter& filter, const Gradient& grad, AdamState& state, const TrainingConfig& cfg);

/// Per-epoch progress: (epoch, mean loss).
using EpochCallback = std::function<void(int, double)>;

/// Optimises one filter on a (speaker, attack) pair's spoofed utterances
/// against the averaged enrolment embedding. Utterances are shuffled each
/// epoch with a seed derived from cfg.seed, grouped into batches, and each
/// batch applies one Adam step with the mean per-utterance gradient. The
/// embedder is never modified.
std::vector<FilterCheckpoint> train_filter(std::span<const Signal> spoof_utts, const Embedding& enrol_embedding,
                                           const TrainingConfig& cfg, const EmbedderConfig& embedder,
                                           const EpochCallback& on_epoch = {});

/// Same, starting from a given filter instead of init_filter().
std::vector<FilterCheckpoint> train_filter(std::span<const Signal> spoof_utts, const Embedding& enrol_embedding,
                                           const TrainingConfig& cfg, const EmbedderConfig& embedder,
                                           MalacopulaFilter initial, const EpochCallback& on_epoch = {});

}  // namespace malacopula
