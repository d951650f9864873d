#pragma once

#include <optional>
#include <span>
#include <vector>

#include "malacopula/embedder.hpp"
#include "malacopula/signal.hpp"
#include "malacopula/trainer.hpp"

namespace malacopula {

enum class ScoreLabel { TargetBonaFide, SpoofFiltered, SpoofBaseline };

struct ScoreDistribution {
  std::vector<double> scores;  // cosine similarities
  ScoreLabel label = ScoreLabel::SpoofBaseline;
};

/// Scores each utterance (filtered first when a filter is given) against the
/// enrolment embedding under `embedder`.
ScoreDistribution score_distribution(std::span<const Signal> utts, const Embedding& enrol,
                                     const EmbedderConfig& embedder,
                                     const std::optional<MalacopulaFilter>& filter = std::nullopt);
ScoreDistribution score_distribution(std::span<const Signal> utts, const Embedding& enrol, const Embedder& embedder,
                                     const MalacopulaFilter* filter, ScoreLabel label);

/// Sample median; the mean of the two central order statistics for even sizes.
double median(std::span<const double> values);

/// 1-Wasserstein distance between two empirical distributions:
///   W1 = integral over u in (0,1) of |Q_a(u) - Q_b(u)|
/// with Q the empirical (step) quantile functions. For equal sizes this is
/// mean |sorted_a[i] - sorted_b[i]|.
double wasserstein_1d(std::span<const double> a, std::span<const double> b);

/// s * W1(spoof, target) with s = +1 when median(spoof) > median(target) and
/// -1 otherwise (ties included). The values are taken as given; select_best
/// passes cosine distances.
double signed_wasserstein(std::span<const double> spoof, std::span<const double> target);
double signed_wasserstein(const ScoreDistribution& spoof, const ScoreDistribution& target);

struct SelectionRecord {
  int epoch = 0;
  int batch = -1;
  double signed_wasserstein = 0.0;
  double spoof_median = 0.0;   // cosine distance
  double target_median = 0.0;  // cosine distance
};

struct SelectionResult {
  std::size_t index = 0;  // into the checkpoint list
  FilterCheckpoint checkpoint;
  std::vector<SelectionRecord> diagnostics;
};

/// For each checkpoint, compares the cosine-distance distribution of the
/// filtered spoofs against that of the bona fide target utterances, both
/// relative to the averaged enrolment embedding under `embedder`, and keeps
/// the checkpoint with the smallest signed Wasserstein value. Ties go to the
/// earliest checkpoint.
SelectionResult select_best(std::span<const FilterCheckpoint> checkpoints, std::span<const Signal> spoof_utts,
                            std::span<const Signal> target_utts, std::span<const Signal> enrol_utts,
                            const EmbedderConfig& embedder);

}  // namespace malacopula
