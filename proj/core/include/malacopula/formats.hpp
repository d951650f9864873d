#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "malacopula/evaluation.hpp"
#include "malacopula/protocol.hpp"
#include "malacopula/selection.hpp"
#include "malacopula/signal.hpp"

namespace malacopula {

// ---------------------------------------------------------------------------
// Filter file
//
//   MALACOPULA-FILTER 1\n
//   K <int>\n
//   L <int>\n
//   speaker <id>\n
//   attack <id>\n
//   epoch <int>\n
//   fa_hash <16 hex digits>\n
//   fb_hash <16 hex digits>\n
//   payload\n
//   <K*L IEEE-754 binary64 values, row-major, little-endian>
// ---------------------------------------------------------------------------

inline constexpr const char* kFilterMagic = "MALACOPULA-FILTER";
inline constexpr int kFilterVersion = 1;

struct FilterFile {
  std::string speaker_id;
  std::string attack_id;
  int selected_epoch = 0;
  std::uint64_t fa_hash = 0;
  std::uint64_t fb_hash = 0;
  MalacopulaFilter filter{1, 1};

  friend bool operator==(const FilterFile&, const FilterFile&) = default;
};

std::vector<std::uint8_t> encode_filter_file(const FilterFile& f);
FilterFile decode_filter_file(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");
void write_filter_file(const std::filesystem::path& path, const FilterFile& f);
FilterFile read_filter_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Protocol file: one entry per line, "role speaker_id utterance_id attack_id path".
// ---------------------------------------------------------------------------

std::string format_protocol(const TrialProtocol& protocol);
TrialProtocol parse_protocol(const std::string& text, const std::string& origin = "<memory>");

// ---------------------------------------------------------------------------
// Score file: one trial per line, "speaker_id utterance_id attack_id label score"
// with label in {target, spoof} and the score printed with %.17g.
// ---------------------------------------------------------------------------

std::string format_scores(const std::vector<Trial>& trials);
std::vector<Trial> parse_scores(const std::string& text, const std::string& origin = "<memory>");

// ---------------------------------------------------------------------------
// Report file: "key value" lines followed by a per-attack table.
//
//   condition <label>
//   embedder <describe()>
//   target_trials <n>
//   spoof_trials <n>
//   pooled_eer <%.17g>
//   pooled_threshold <%.17g>
//   attacks <n>
//   attack <id> <eer> <threshold> <spoof_trials>     (n lines)
// ---------------------------------------------------------------------------

std::string format_report(const EvalReport& report, const std::string& embedder_description);
/// Trials are not part of the report file; the returned report has none.
EvalReport parse_report(const std::string& text, const std::string& origin = "<memory>");

// ---------------------------------------------------------------------------
// Line-oriented diagnostics.
// ---------------------------------------------------------------------------

/// "epoch mean_loss" per line.
std::string format_training_curve(const std::vector<FilterCheckpoint>& checkpoints);
/// "epoch signed_wasserstein spoof_median target_median" per line.
std::string format_selection(const std::vector<SelectionRecord>& records);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// %.17g formatting (round-trips binary64 exactly).
std::string format_double(double v);
std::string hex64(std::uint64_t v);

}  // namespace malacopula
