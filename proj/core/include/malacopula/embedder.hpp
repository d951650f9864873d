#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "malacopula/signal.hpp"

namespace malacopula {

/// Parameters of a spectral speaker-embedding extractor.
struct EmbedderConfig {
  int frame_length = 400;
  int hop_length = 160;
  int fft_size = 512;
  int mel_bands = 24;
  int embedding_dim = 32;
  std::uint64_t projection_seed = 101;
  int sample_rate_hz = 16000;

  /// Throws std::invalid_argument when the config breaks an invariant.
  void validate() const;

  /// Stable 64-bit digest of every field (stored in filter files).
  std::uint64_t hash() const;

  std::string describe() const;

  /// Training extractor.
  static EmbedderConfig training();
  /// Checkpoint-selection extractor.
  static EmbedderConfig selection();
  /// Held-out evaluation extractor.
  static EmbedderConfig evaluation();

  friend bool operator==(const EmbedderConfig&, const EmbedderConfig&) = default;
};

struct Embedding {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const Embedding&, const Embedding&) = default;
};

/// Guard inside the log of the mel energies.
inline constexpr double kMelFloor = 1e-8;
/// Guard inside the square root of the per-band variance.
inline constexpr double kVarianceFloor = 1e-6;

/// Frame -> Hann -> |DFT|^2 -> mel -> log -> mean/std pooling -> projection.
///
/// The per-band means are level-normalised (their across-band average is
/// removed) before the seeded projection, so the embedding depends on spectral
/// shape and not on overall gain, apart from the kMelFloor guard.
class Embedder {
 public:
  explicit Embedder(EmbedderConfig config);

  const EmbedderConfig& config() const { return config_; }
  std::size_t dim() const { return static_cast<std::size_t>(config_.embedding_dim); }
  std::size_t frame_count(std::size_t n_samples) const;

  /// Intermediates retained for the backward pass.
  struct Trace {
    std::size_t n_samples = 0;
    std::size_t frames = 0;
    std::vector<std::complex<double>> spectra;  // frames x bins
    std::vector<double> mel_energy;             // frames x mel_bands
    std::vector<double> log_mel;                // frames x mel_bands
    std::vector<double> mean;
    std::vector<double> stddev;
  };

  Embedding extract(std::span<const double> x) const;
  Embedding extract(std::span<const double> x, Trace& trace) const;
  Embedding extract(const Signal& x) const { return extract(x.samples()); }

  /// Vector-Jacobian product: d(loss)/d(x) given d(loss)/d(embedding).
  std::vector<double> backward(const Trace& trace, std::span<const double> d_embedding) const;

  /// Row-major embedding_dim x (2 * mel_bands) projection.
  std::span<const double> projection() const { return projection_; }
  std::uint64_t projection_hash() const;

 private:
  struct Band {
    std::size_t first_bin = 0;
    std::vector<double> weights;
  };

  EmbedderConfig config_;
  std::vector<double> window_;
  std::vector<Band> bands_;
  std::vector<double> projection_;
};

Embedding extract_embedding(const Signal& x, const EmbedderConfig& config);

/// A·B / (|A| |B|). Throws on dimension mismatch or a zero vector.
double cosine_similarity(const Embedding& a, const Embedding& b);

/// Elementwise mean. Throws on an empty list or mismatched dimensions.
Embedding average_enrolment(std::span<const Embedding> embeddings);

}  // namespace malacopula
