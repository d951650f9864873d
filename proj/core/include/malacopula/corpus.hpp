#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "malacopula/protocol.hpp"
#include "malacopula/signal.hpp"

namespace malacopula {

/// A synthetic talker: a few sinusoidal "formant" components, amplitude
/// modulated at a pitch rate, over a noise floor.
struct SpeakerProfile {
  std::string speaker_id;
  std::vector<double> frequencies_hz;
  std::vector<double> amplitudes;
  double pitch_hz = 120.0;
  double noise_floor = 0.01;
  std::uint64_t seed = 0;
  int sample_rate_hz = 16000;
};

SpeakerProfile make_speaker_profile(const std::string& speaker_id, std::uint64_t seed, int sample_rate_hz = 16000);

enum class AttackKind { FrequencyDetune, AmplitudeWarp, NoiseMix, ComponentSwap };

const char* attack_kind_name(AttackKind kind);
AttackKind parse_attack_kind(const std::string& name);

struct AttackSpec {
  std::string attack_id;
  AttackKind kind = AttackKind::FrequencyDetune;
  double severity = 0.1;

  void validate() const;
  friend bool operator==(const AttackSpec&, const AttackSpec&) = default;
};

/// A01..A04: one attack of each kind, with severities chosen so that some are
/// already effective before filtering and others are not.
std::vector<AttackSpec> default_attacks();

/// Peak-normalised (max |x| = 0.9) utterance with seeded per-utterance jitter
/// (component frequency +-1 %, amplitude +-10 %, phases, envelope, noise).
/// Throws std::invalid_argument for durations below 0.5 s.
Signal generate_utterance(const SpeakerProfile& profile, double duration_s, std::uint64_t utt_seed);

/// A target-speaker utterance synthesised through the attack's distortion:
///  - FrequencyDetune: every component shifted by a factor (1 + severity)
///  - AmplitudeWarp:   memoryless saturation tanh(severity * x), renormalised
///  - NoiseMix:        additional white noise with standard deviation severity
///  - ComponentSwap:   decoy-speaker components mixed in at ratio severity
Signal generate_spoof(const SpeakerProfile& target, const AttackSpec& attack, double duration_s,
                      std::uint64_t utt_seed);

struct CorpusParams {
  int n_speakers = 8;
  int n_enrol = 3;
  int n_target = 10;
  int n_spoof_per_attack = 10;
  double duration_s = 0.5;
  /// Utterance durations are drawn uniformly from [d, d * (1 + spread)].
  double duration_spread = 0.2;
  int sample_rate_hz = 16000;
  std::vector<AttackSpec> attacks = default_attacks();
  std::uint64_t seed = 20240901;

  void validate() const;
  friend bool operator==(const CorpusParams&, const CorpusParams&) = default;
};

struct GeneratedCorpus {
  std::vector<SpeakerProfile> speakers;
  TrialProtocol protocol;
  Corpus corpus;  // samples already on the 16-bit PCM grid
  std::vector<std::string> warnings;
};

/// Generates every enrolment, target and spoof utterance of the protocol.
/// Signals are snapped to the 16-bit grid so that the in-memory corpus equals
/// what reading the written WAV files back yields.
GeneratedCorpus build_protocol(const CorpusParams& params);

}  // namespace malacopula
