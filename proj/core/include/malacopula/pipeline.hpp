#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "malacopula/config.hpp"
#include "malacopula/corpus.hpp"
#include "malacopula/evaluation.hpp"
#include "malacopula/formats.hpp"
#include "malacopula/protocol.hpp"
#include "malacopula/selection.hpp"

namespace malacopula {

/// Name of the protocol listing inside a corpus directory.
inline constexpr const char* kProtocolFile = "protocol.txt";
/// Environment variable holding the default worker count.
inline constexpr const char* kWorkersEnv = "MALACOPULA_WORKERS";

/// Worker count from MALACOPULA_WORKERS, or `fallback` when unset.
/// Throws UsageError for values that are not positive integers.
int default_workers(int fallback = 1);

/// Runs fn(0..n-1) on up to `workers` threads. Indices are claimed in order;
/// the first exception (lowest index) is rethrown after all threads join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

using LogFn = std::function<void(const std::string&)>;

struct LoadedCorpus {
  TrialProtocol protocol;
  Corpus corpus;
};

/// Generates the corpus and writes wav/<utt>.wav plus protocol.txt under
/// `out_dir` (created when missing).
GeneratedCorpus gen_corpus(const CorpusParams& params, const std::filesystem::path& out_dir, int workers = 1);
void write_corpus(const GeneratedCorpus& corpus, const std::filesystem::path& out_dir, int workers = 1);
LoadedCorpus load_corpus(const std::filesystem::path& dir, int workers = 1);

/// One (speaker, attack, L, K) training unit.
struct CellJob {
  GridCell cell;
  std::string speaker_id;
  std::string attack_id;

  std::string name() const;  // "L257_K5/spk01_A01"
  /// Seed derived from the global seed and the cell identity only.
  std::uint64_t seed(std::uint64_t global_seed) const;
};

/// Grid-major, then speaker, then attack.
std::vector<CellJob> enumerate_jobs(const std::vector<GridCell>& grid, const TrialProtocol& protocol);

struct CellOutcome {
  FilterFile file;
  std::vector<FilterCheckpoint> checkpoints;
  SelectionResult selection;
};

/// Trains the cell's filter under f_A and selects a checkpoint under f_B.
CellOutcome train_cell(const ExperimentConfig& config, const TrialProtocol& protocol, const Corpus& corpus,
                       const CellJob& job);

std::filesystem::path filter_path(const std::filesystem::path& run_dir, const CellJob& job);

struct TrainSummary {
  std::size_t trained = 0;
  std::size_t skipped = 0;
  std::vector<std::string> failures;  // "<cell>: <message>"
};

/// Runs every job of the grid on the worker pool and writes
///   filters/<L_K>/<spk>_<att>.mcf
///   diagnostics/<L_K>/<spk>_<att>.loss     (epoch mean_loss)
///   diagnostics/<L_K>/<spk>_<att>.select   (epoch signed_w1 medians)
/// under config.output_dir. With `skip_existing`, jobs whose filter file is
/// already present are not retrained. Failures are collected, not thrown.
TrainSummary train_grid(const ExperimentConfig& config, const LoadedCorpus& data, bool skip_existing,
                        const LogFn& log = {});

/// Filters of one grid cell. Hash mismatches against the configured f_A/f_B
/// are appended to `warnings`.
FilterMap load_filters(const ExperimentConfig& config, const GridCell& cell, std::vector<std::string>* warnings);

/// Reads a filter file and a WAV file, writes malacopula_apply() as PCM16.
void apply_filter(const std::filesystem::path& filter_file, const std::filesystem::path& in_wav,
                  const std::filesystem::path& out_wav);

/// Scores the baseline and, with `filtered`, every grid cell under the given
/// embedder role. Writes scores/<role>/<condition>.scores and
/// reports/<role>/<condition>.report. Throws DataError when `filtered` is set
/// and a cell has no filter files.
std::vector<EvalReport> score_conditions(const ExperimentConfig& config, const LoadedCorpus& data, EmbedderRole role,
                                         bool filtered, std::vector<std::string>* warnings = nullptr);

struct ReportTable {
  std::vector<EvalReport> rows;  // baseline first when present, then grid order
  std::string text;              // human-readable comparison
  std::string plot_data;         // "condition attack eer" lines
};

/// Reads scores/<role>/*.scores under `run_dir` and rebuilds the reports.
/// Throws DataError listing missing inputs or naming a corrupted line.
ReportTable build_report(const std::filesystem::path& run_dir, EmbedderRole role);

}  // namespace malacopula
