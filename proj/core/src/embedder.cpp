#include "malacopula/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "malacopula/fft.hpp"
#include "malacopula/rng.hpp"

namespace malacopula {
namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

void EmbedderConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("EmbedderConfig: " + what); };
  if (frame_length <= 0 || hop_length <= 0 || fft_size <= 0 || mel_bands <= 0 || embedding_dim <= 0 ||
      sample_rate_hz <= 0)
    fail("all sizes must be positive");
  if (fft_size < frame_length) fail("fft_size must be >= frame_length");
  if (mel_bands >= fft_size / 2) fail("mel_bands must be < fft_size / 2");
  if (embedding_dim > 2 * mel_bands) fail("embedding_dim must be <= 2 * mel_bands");
}

std::uint64_t EmbedderConfig::hash() const {
  std::ostringstream os;
  os << frame_length << ' ' << hop_length << ' ' << fft_size << ' ' << mel_bands << ' ' << embedding_dim << ' '
     << projection_seed << ' ' << sample_rate_hz;
  return fnv1a(os.str());
}

std::string EmbedderConfig::describe() const {
  std::ostringstream os;
  os << "frame=" << frame_length << " hop=" << hop_length << " fft=" << fft_size << " mels=" << mel_bands
     << " dim=" << embedding_dim << " seed=" << projection_seed << " rate=" << sample_rate_hz;
  return os.str();
}

EmbedderConfig EmbedderConfig::training() { return {400, 160, 512, 24, 32, 101, 16000}; }
EmbedderConfig EmbedderConfig::selection() { return {512, 200, 512, 32, 24, 202, 16000}; }
EmbedderConfig EmbedderConfig::evaluation() { return {400, 200, 512, 28, 28, 303, 16000}; }

Embedder::Embedder(EmbedderConfig config) : config_(config) {
  config_.validate();
  const auto frame = static_cast<std::size_t>(config_.frame_length);
  const auto fft = static_cast<std::size_t>(config_.fft_size);
  const auto n_mels = static_cast<std::size_t>(config_.mel_bands);
  const std::size_t n_bins = fft / 2 + 1;

  window_.resize(frame);
  for (std::size_t n = 0; n < frame; ++n)
    window_[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(frame));

  // Triangular filters on fractional bin positions, equally spaced in mel.
  const double mel_max = hz_to_mel(config_.sample_rate_hz / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double hz = mel_to_hz(mel_max * static_cast<double>(i) / static_cast<double>(n_mels + 1));
    edges[i] = hz / config_.sample_rate_hz * static_cast<double>(fft);
  }
  bands_.resize(n_mels);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    Band& band = bands_[m];
    bool started = false;
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double pos = static_cast<double>(b);
      double weight = 0.0;
      if (pos > lo && pos <= mid)
        weight = (pos - lo) / (mid - lo);
      else if (pos > mid && pos < hi)
        weight = (hi - pos) / (hi - mid);
      if (weight > 0.0) {
        if (!started) {
          band.first_bin = b;
          started = true;
        }
        band.weights.resize(b - band.first_bin + 1, 0.0);
        band.weights.back() = weight;
      }
    }
  }

  const std::size_t in_dim = 2 * n_mels;
  projection_.resize(dim() * in_dim);
  SplitMix64 rng(config_.projection_seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (double& v : projection_) v = rng.normal() * scale;
}

std::size_t Embedder::frame_count(std::size_t n_samples) const {
  const auto frame = static_cast<std::size_t>(config_.frame_length);
  if (n_samples < frame) return 0;
  return 1 + (n_samples - frame) / static_cast<std::size_t>(config_.hop_length);
}

Embedding Embedder::extract(std::span<const double> x) const {
  Trace trace;
  return extract(x, trace);
}

Embedding Embedder::extract(std::span<const double> x, Trace& trace) const {
  const std::size_t frames = frame_count(x.size());
  if (frames == 0)
    throw std::invalid_argument("extract_embedding: signal of " + std::to_string(x.size()) +
                                " samples is shorter than one frame (" + std::to_string(config_.frame_length) + ")");
  const auto frame = static_cast<std::size_t>(config_.frame_length);
  const auto hop = static_cast<std::size_t>(config_.hop_length);
  const std::size_t n_mels = bands_.size();
  const RealFft fft(static_cast<std::size_t>(config_.fft_size));
  const std::size_t n_bins = fft.bins();

  trace.n_samples = x.size();
  trace.frames = frames;
  trace.spectra.assign(frames * n_bins, {});
  trace.mel_energy.assign(frames * n_mels, 0.0);
  trace.log_mel.assign(frames * n_mels, 0.0);

  std::vector<double> buf(frame);
  std::vector<double> power(n_bins);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* src = x.data() + t * hop;
    for (std::size_t n = 0; n < frame; ++n) buf[n] = src[n] * window_[n];
    std::span<std::complex<double>> spec(trace.spectra.data() + t * n_bins, n_bins);
    fft.forward(buf, spec);
    for (std::size_t b = 0; b < n_bins; ++b) power[b] = std::norm(spec[b]);
    for (std::size_t m = 0; m < n_mels; ++m) {
      const Band& band = bands_[m];
      double e = 0.0;
      for (std::size_t j = 0; j < band.weights.size(); ++j) e += band.weights[j] * power[band.first_bin + j];
      trace.mel_energy[t * n_mels + m] = e;
      trace.log_mel[t * n_mels + m] = std::log(kMelFloor + e);
    }
  }

  const double inv_t = 1.0 / static_cast<double>(frames);
  trace.mean.assign(n_mels, 0.0);
  trace.stddev.assign(n_mels, 0.0);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t m = 0; m < n_mels; ++m) trace.mean[m] += trace.log_mel[t * n_mels + m];
  for (double& v : trace.mean) v *= inv_t;
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t m = 0; m < n_mels; ++m) {
      const double d = trace.log_mel[t * n_mels + m] - trace.mean[m];
      trace.stddev[m] += d * d;
    }
  for (double& v : trace.stddev) v = std::sqrt(v * inv_t + kVarianceFloor);

  double level = 0.0;
  for (double v : trace.mean) level += v;
  level /= static_cast<double>(n_mels);
  std::vector<double> stats(2 * n_mels);
  for (std::size_t m = 0; m < n_mels; ++m) {
    stats[m] = trace.mean[m] - level;
    stats[n_mels + m] = trace.stddev[m];
  }

  Embedding e;
  e.values.assign(dim(), 0.0);
  for (std::size_t d = 0; d < dim(); ++d) {
    const double* w = projection_.data() + d * stats.size();
    double acc = 0.0;
    for (std::size_t j = 0; j < stats.size(); ++j) acc += w[j] * stats[j];
    e.values[d] = acc;
  }
  return e;
}

std::vector<double> Embedder::backward(const Trace& trace, std::span<const double> d_embedding) const {
  if (d_embedding.size() != dim()) throw std::invalid_argument("Embedder::backward: gradient dimension mismatch");
  const std::size_t n_mels = bands_.size();
  const std::size_t frames = trace.frames;
  if (frames == 0 || trace.log_mel.size() != frames * n_mels || trace.mean.size() != n_mels)
    throw std::logic_error("Embedder::backward: trace does not belong to this embedder");

  const std::size_t in_dim = 2 * n_mels;
  std::vector<double> d_stats(in_dim, 0.0);
  for (std::size_t d = 0; d < dim(); ++d) {
    const double* w = projection_.data() + d * in_dim;
    for (std::size_t j = 0; j < in_dim; ++j) d_stats[j] += w[j] * d_embedding[d];
  }
  // Undo the level normalisation: subtracting the band average is a
  // projection, so its adjoint removes the average gradient.
  double avg = 0.0;
  for (std::size_t m = 0; m < n_mels; ++m) avg += d_stats[m];
  avg /= static_cast<double>(n_mels);

  const double inv_t = 1.0 / static_cast<double>(frames);
  std::vector<double> d_mean_coef(n_mels), d_dev_coef(n_mels);
  for (std::size_t m = 0; m < n_mels; ++m) {
    d_mean_coef[m] = (d_stats[m] - avg) * inv_t;
    d_dev_coef[m] = d_stats[n_mels + m] * inv_t / trace.stddev[m];
  }

  const auto frame = static_cast<std::size_t>(config_.frame_length);
  const auto hop = static_cast<std::size_t>(config_.hop_length);
  const RealFft fft(static_cast<std::size_t>(config_.fft_size));
  const std::size_t n_bins = fft.bins();

  std::vector<double> dx(trace.n_samples, 0.0);
  std::vector<double> d_power(n_bins);
  std::vector<std::complex<double>> z(n_bins);
  std::vector<double> du(fft.size());
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(d_power.begin(), d_power.end(), 0.0);
    for (std::size_t m = 0; m < n_mels; ++m) {
      const std::size_t idx = t * n_mels + m;
      const double d_log = d_mean_coef[m] + d_dev_coef[m] * (trace.log_mel[idx] - trace.mean[m]);
      const double d_energy = d_log / (kMelFloor + trace.mel_energy[idx]);
      const Band& band = bands_[m];
      for (std::size_t j = 0; j < band.weights.size(); ++j) d_power[band.first_bin + j] += band.weights[j] * d_energy;
    }
    // d|X_b|^2/du[n] = 2 Re(X_b e^{+i 2 pi b n / F}); the half-spectrum sum is
    // a c2r transform once interior bins are halved.
    const std::complex<double>* spec = trace.spectra.data() + t * n_bins;
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double weight = (b == 0 || 2 * b == fft.size()) ? 2.0 : 1.0;
      z[b] = weight * d_power[b] * spec[b];
    }
    fft.inverse(z, du);
    double* out = dx.data() + t * hop;
    for (std::size_t n = 0; n < frame; ++n) out[n] += window_[n] * du[n];
  }
  return dx;
}

std::uint64_t Embedder::projection_hash() const {
  std::string bytes(projection_.size() * sizeof(double), '\0');
  std::memcpy(bytes.data(), projection_.data(), bytes.size());
  return fnv1a(bytes);
}

Embedding extract_embedding(const Signal& x, const EmbedderConfig& config) {
  return Embedder(config).extract(x.samples());
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine_similarity: zero vector");
  const double cs = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(cs, -1.0, 1.0);
}

Embedding average_enrolment(std::span<const Embedding> embeddings) {
  if (embeddings.empty()) throw std::invalid_argument("average_enrolment: no embeddings");
  Embedding mean;
  mean.values.assign(embeddings.front().size(), 0.0);
  for (const auto& e : embeddings) {
    if (e.size() != mean.size()) throw std::invalid_argument("average_enrolment: dimension mismatch");
    for (std::size_t i = 0; i < e.size(); ++i) mean.values[i] += e.values[i];
  }
  for (double& v : mean.values) v /= static_cast<double>(embeddings.size());
  return mean;
}

}  // namespace malacopula
