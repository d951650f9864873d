#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "malacopula/embedder.hpp"
#include "malacopula/protocol.hpp"
#include "malacopula/signal.hpp"

namespace malacopula {

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

/// Equal error rate with positives = target trials, negatives = spoofs, and
/// higher score = more target-like. At threshold t,
///   FAR(t) = #{neg >= t} / |neg|,  FRR(t) = #{pos < t} / |pos|.
/// The operating points at every distinct score (plus the all-reject point)
/// form a polyline; the EER is read off where FAR - FRR changes sign, with
/// linear interpolation between the bracketing points.
EerResult compute_eer(std::span<const double> positives, std::span<const double> negatives);

struct Trial {
  std::string speaker_id;
  std::string utterance_id;
  std::string attack_id;  // kBonaFide for target trials
  bool is_target = true;
  double score = 0.0;

  friend bool operator==(const Trial&, const Trial&) = default;
};

struct AttackResult {
  double eer = 0.0;
  double threshold = 0.0;
  std::size_t spoof_trials = 0;

  friend bool operator==(const AttackResult&, const AttackResult&) = default;
};

struct EvalReport {
  std::string condition;  // "baseline" or a grid cell label
  double pooled_eer = 0.0;
  double pooled_threshold = 0.0;
  std::size_t target_trials = 0;
  std::size_t spoof_trials = 0;
  std::map<std::string, AttackResult> per_attack;
  std::vector<Trial> trials;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// (speaker_id, attack_id) -> filter.
using FilterMap = std::map<std::pair<std::string, std::string>, MalacopulaFilter>;

/// Pooled and per-attack EERs from scored trials. Per-attack EERs use every
/// target trial as positives against that attack's spoofs.
EvalReport summarize_trials(std::vector<Trial> trials, std::string condition);

/// Scores every target and spoof trial against its speaker's averaged
/// enrolment embedding. Spoofs are filtered when `filters` holds an entry for
/// their (speaker, attack). Throws DataError naming the trial when an
/// utterance is missing.
EvalReport evaluate_protocol(const TrialProtocol& protocol, const Corpus& corpus, const EmbedderConfig& embedder,
                             const FilterMap* filters = nullptr, std::string condition = "baseline");

}  // namespace malacopula
