#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "malacopula/corpus.hpp"
#include "malacopula/embedder.hpp"
#include "malacopula/trainer.hpp"

namespace malacopula {

/// One (L, K) point of the filter grid.
struct GridCell {
  std::size_t length = 257;
  std::size_t branches = 5;

  /// "L257_K5"
  std::string label() const;
  friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// "257x5,1025x3" -> cells. Throws UsageError on malformed input or even L.
std::vector<GridCell> parse_grid(const std::string& text);
std::string format_grid(const std::vector<GridCell>& grid);
/// L in {257, 1025} x K in {1, 3, 5}.
std::vector<GridCell> full_grid();

enum class EmbedderRole { Training, Selection, Evaluation };
const char* role_key(EmbedderRole role);  // "fa", "fb", "ftest"
EmbedderRole parse_embedder_role(const std::string& key);

struct ExperimentConfig {
  std::filesystem::path corpus_dir = "corpus";
  CorpusParams corpus;
  EmbedderConfig fa = EmbedderConfig::training();
  EmbedderConfig fb = EmbedderConfig::selection();
  EmbedderConfig ftest = EmbedderConfig::evaluation();
  TrainingConfig training;  // branches/length are taken from each grid cell
  std::vector<GridCell> grid = {GridCell{257, 5}};
  std::filesystem::path output_dir = "run";
  int workers = 1;
  std::uint64_t seed = 7;

  const EmbedderConfig& embedder(EmbedderRole role) const;
  /// Throws UsageError describing the first violated constraint.
  void validate() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Sectioned key-value text:
///
///   # comment
///   [corpus]
///   dir = corpus
///   speakers = 8
///   attack = A01 detune 0.03      (repeatable; replaces the default list)
///   [embedder.fa]                 (also embedder.fb, embedder.ftest)
///   frame_length = 400
///   [training]
///   epochs = 60
///   checkpoint = epoch            (or batch)
///   [experiment]
///   output_dir = run
///   grid = 257x5,1025x5
///   workers = 4
///   seed = 7
///
/// Unknown sections or keys, duplicate keys and unparsable values are
/// rejected with the line number. Relative paths are resolved against
/// `base_dir`. When `default_workers` is positive it replaces the built-in
/// default before the file is applied.
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin = "<memory>",
                                         const std::filesystem::path& base_dir = {}, int default_workers = 0);
ExperimentConfig load_experiment_config(const std::filesystem::path& path, int default_workers = 0);

/// Writes every field; parse_experiment_config(format_experiment_config(c)) == c
/// for configs with relative paths.
std::string format_experiment_config(const ExperimentConfig& config);

}  // namespace malacopula
