#include "malacopula/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <stdexcept>

#include "malacopula/rng.hpp"
#include "malacopula/wav.hpp"

namespace malacopula {
namespace {

constexpr double kPeak = 0.9;

struct Voice {
  std::vector<double> frequencies_hz;
  std::vector<double> amplitudes;
  double pitch_hz;
  double noise_floor;
  double extra_noise = 0.0;
};

Voice voice_of(const SpeakerProfile& p) { return {p.frequencies_hz, p.amplitudes, p.pitch_hz, p.noise_floor}; }

Signal synthesize(const Voice& voice, double duration_s, int rate, std::uint64_t seed) {
  if (!(duration_s >= 0.5)) throw std::invalid_argument("generate_utterance: duration must be at least 0.5 s");
  SplitMix64 rng(seed);
  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate));
  const double two_pi = 2.0 * std::numbers::pi;
  const double dt = 1.0 / rate;

  // Slow syllable-rate envelope and pitch-rate amplitude modulation.
  const double env_rate = rng.uniform(2.0, 5.0);
  const double env_phase = rng.uniform(0.0, two_pi);
  const double pitch_phase = rng.uniform(0.0, two_pi);

  std::vector<double> x(n, 0.0);
  for (std::size_t c = 0; c < voice.frequencies_hz.size(); ++c) {
    const double f = voice.frequencies_hz[c] * (1.0 + rng.uniform(-0.01, 0.01));
    const double a = voice.amplitudes[c] * (1.0 + rng.uniform(-0.1, 0.1));
    const double phase = rng.uniform(0.0, two_pi);
    for (std::size_t i = 0; i < n; ++i) x[i] += a * std::sin(two_pi * f * static_cast<double>(i) * dt + phase);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double env = 0.65 + 0.35 * std::sin(two_pi * env_rate * t + env_phase);
    const double am = 1.0 + 0.3 * std::sin(two_pi * voice.pitch_hz * t + pitch_phase);
    x[i] *= env * am;
  }
  const double sigma = std::hypot(voice.noise_floor, voice.extra_noise);
  for (double& v : x) v += sigma * rng.normal();

  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : x) v *= kPeak / peak;
  return Signal(std::move(x), rate);
}

// Memoryless tanh saturation at the given drive, renormalised to the
// corpus peak.
Signal saturate(const Signal& x, double drive) {
  std::vector<double> y(x.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = std::tanh(drive * x.samples()[i]);
    peak = std::max(peak, std::abs(y[i]));
  }
  if (peak > 0.0)
    for (double& v : y) v *= kPeak / peak;
  return Signal(std::move(y), x.sample_rate());
}

std::string two_digits(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", i);
  return buf;
}

Signal snap_to_pcm16(const Signal& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = pcm16_to_sample(sample_to_pcm16(x.samples()[i]));
  return Signal(std::move(out), x.sample_rate());
}

}  // namespace

SpeakerProfile make_speaker_profile(const std::string& speaker_id, std::uint64_t seed, int sample_rate_hz) {
  SplitMix64 rng(seed);
  SpeakerProfile p;
  p.speaker_id = speaker_id;
  p.seed = seed;
  p.sample_rate_hz = sample_rate_hz;
  const int components = 3 + static_cast<int>(rng.next() % 3);
  const double top = std::min(3800.0, 0.45 * sample_rate_hz);
  for (int c = 0; c < components; ++c) {
    p.frequencies_hz.push_back(rng.uniform(250.0, top));
    p.amplitudes.push_back(rng.uniform(0.3, 1.0));
  }
  std::sort(p.frequencies_hz.begin(), p.frequencies_hz.end());
  p.pitch_hz = rng.uniform(90.0, 250.0);
  p.noise_floor = rng.uniform(0.005, 0.02);
  return p;
}

const char* attack_kind_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::FrequencyDetune: return "detune";
    case AttackKind::AmplitudeWarp: return "warp";
    case AttackKind::NoiseMix: return "noise";
    case AttackKind::ComponentSwap: return "swap";
  }
  return "?";
}

AttackKind parse_attack_kind(const std::string& name) {
  if (name == "detune") return AttackKind::FrequencyDetune;
  if (name == "warp") return AttackKind::AmplitudeWarp;
  if (name == "noise") return AttackKind::NoiseMix;
  if (name == "swap") return AttackKind::ComponentSwap;
  throw std::invalid_argument("unknown attack kind '" + name + "' (expected detune, warp, noise or swap)");
}

void AttackSpec::validate() const {
  if (attack_id.empty()) throw std::invalid_argument("AttackSpec: empty attack id");
  if (!(severity > 0.0)) throw std::invalid_argument("AttackSpec " + attack_id + ": severity must be positive");
  if (kind == AttackKind::ComponentSwap && severity >= 1.0)
    throw std::invalid_argument("AttackSpec " + attack_id + ": swap ratio must be < 1");
}

std::vector<AttackSpec> default_attacks() {
  return {{"A01", AttackKind::FrequencyDetune, 0.02},
          {"A02", AttackKind::AmplitudeWarp, 0.8},
          {"A03", AttackKind::NoiseMix, 0.03},
          {"A04", AttackKind::ComponentSwap, 0.2}};
}

Signal generate_utterance(const SpeakerProfile& profile, double duration_s, std::uint64_t utt_seed) {
  return synthesize(voice_of(profile), duration_s, profile.sample_rate_hz, utt_seed);
}

Signal generate_spoof(const SpeakerProfile& target, const AttackSpec& attack, double duration_s,
                      std::uint64_t utt_seed) {
  attack.validate();
  Voice v = voice_of(target);
  switch (attack.kind) {
    case AttackKind::FrequencyDetune:
      for (double& f : v.frequencies_hz) f = std::min(f * (1.0 + attack.severity), 0.49 * target.sample_rate_hz);
      break;
    case AttackKind::AmplitudeWarp:
      break;
    case AttackKind::NoiseMix:
      v.extra_noise = attack.severity;
      break;
    case AttackKind::ComponentSwap: {
      const SpeakerProfile decoy =
          make_speaker_profile("decoy", mix_seed(target.seed, fnv1a(attack.attack_id)), target.sample_rate_hz);
      for (double& a : v.amplitudes) a *= 1.0 - attack.severity;
      for (std::size_t c = 0; c < decoy.frequencies_hz.size(); ++c) {
        v.frequencies_hz.push_back(decoy.frequencies_hz[c]);
        v.amplitudes.push_back(decoy.amplitudes[c] * attack.severity);
      }
      break;
    }
  }
  Signal x = synthesize(v, duration_s, target.sample_rate_hz, utt_seed);
  if (attack.kind == AttackKind::AmplitudeWarp) x = saturate(x, attack.severity);
  return x;
}

void CorpusParams::validate() const {
  if (n_speakers < 1 || n_enrol < 1 || n_target < 1 || n_spoof_per_attack < 1)
    throw std::invalid_argument("CorpusParams: all counts must be >= 1");
  if (!(duration_s >= 0.5)) throw std::invalid_argument("CorpusParams: duration must be at least 0.5 s");
  if (!(duration_spread >= 0.0)) throw std::invalid_argument("CorpusParams: duration spread must be >= 0");
  if (sample_rate_hz <= 0) throw std::invalid_argument("CorpusParams: sample rate must be positive");
  if (attacks.empty()) throw std::invalid_argument("CorpusParams: need at least one attack");
  std::set<std::string> ids;
  for (const auto& a : attacks) {
    a.validate();
    if (!ids.insert(a.attack_id).second) throw std::invalid_argument("CorpusParams: duplicate attack id " + a.attack_id);
  }
}

GeneratedCorpus build_protocol(const CorpusParams& params) {
  params.validate();
  GeneratedCorpus out;
  if (params.n_speakers == 1)
    out.warnings.push_back("single-speaker corpus: no cross-speaker trials, speaker separation cannot be measured");

  auto add = [&](Role role, const SpeakerProfile& spk, const std::string& attack, const std::string& utt_id,
                 const Signal& x) {
    out.corpus.add(utt_id, snap_to_pcm16(x));
    out.protocol.entries.push_back({role, spk.speaker_id, utt_id, attack, "wav/" + utt_id + ".wav"});
  };
  auto duration = [&](std::uint64_t utt_seed) {
    SplitMix64 r(mix_seed(utt_seed, 0xD0));
    return params.duration_s * (1.0 + params.duration_spread * r.uniform());
  };

  for (int s = 0; s < params.n_speakers; ++s) {
    const std::string speaker_id = "spk" + two_digits(s);
    const std::uint64_t speaker_seed = mix_seed(params.seed, static_cast<std::uint64_t>(s));
    const SpeakerProfile spk = make_speaker_profile(speaker_id, speaker_seed, params.sample_rate_hz);
    out.speakers.push_back(spk);

    for (int i = 0; i < params.n_enrol; ++i) {
      const std::uint64_t us = mix_seed(speaker_seed, 1000 + static_cast<std::uint64_t>(i));
      add(Role::Enrol, spk, kBonaFide, speaker_id + "_enrol_" + two_digits(i),
          generate_utterance(spk, duration(us), us));
    }
    for (int i = 0; i < params.n_target; ++i) {
      const std::uint64_t us = mix_seed(speaker_seed, 2000 + static_cast<std::uint64_t>(i));
      add(Role::Target, spk, kBonaFide, speaker_id + "_target_" + two_digits(i),
          generate_utterance(spk, duration(us), us));
    }
    for (const AttackSpec& attack : params.attacks) {
      const std::uint64_t attack_seed = mix_seed(speaker_seed, fnv1a(attack.attack_id));
      for (int i = 0; i < params.n_spoof_per_attack; ++i) {
        const std::uint64_t us = mix_seed(attack_seed, static_cast<std::uint64_t>(i));
        add(Role::Spoof, spk, attack.attack_id, speaker_id + "_" + attack.attack_id + "_" + two_digits(i),
            generate_spoof(spk, attack, duration(us), us));
      }
    }
  }
  return out;
}

}  // namespace malacopula
