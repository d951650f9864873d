#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "malacopula/embedder.hpp"
#include "malacopula/fft.hpp"
#include "malacopula/signal.hpp"

namespace malacopula {

/// d(loss)/d(coeffs), same K x L layout as MalacopulaFilter.
struct Gradient {
  std::size_t branches = 0;
  std::size_t length = 0;
  std::vector<double> d_coeffs;

  double max_abs() const;
};

/// An utterance prepared for repeated filtering with a fixed (K, L): the
/// branch signals x^k and their spectra at a transform size large enough for
/// alias-free centred convolution. Utterances do not change during training,
/// so this is computed once per utterance.
class PreparedInput {
 public:
  PreparedInput(Signal x, std::size_t branches, std::size_t length);

  const Signal& signal() const { return x_; }
  std::size_t branches() const { return branches_; }
  std::size_t length() const { return length_; }
  const RealFft& fft() const { return fft_; }
  std::span<const std::complex<double>> branch_spectrum(std::size_t k) const {
    return {spectra_.data() + k * fft_.bins(), fft_.bins()};
  }

  /// mc(x) before normalisation.
  std::vector<double> forward(const MalacopulaFilter& filter) const;

 private:
  Signal x_;
  std::size_t branches_;
  std::size_t length_;
  RealFft fft_;
  std::vector<std::complex<double>> spectra_;
};

/// Everything backward() needs from a forward pass.
struct Tape {
  std::shared_ptr<const PreparedInput> input;
  std::shared_ptr<const Embedder> embedder;
  MalacopulaFilter filter{1, 1};
  std::vector<double> pre_norm;  // mc(x)
  Peak peak;                     // of pre_norm
  double scale = 1.0;            // divisor applied by the normaliser
  std::vector<double> output;    // MC(x)
  Embedder::Trace trace;
  Embedding embedding;
  Embedding target;
  double loss = 0.0;
};

/// loss = 1 - CS(f(MC(x)), target).
std::pair<double, Tape> forward_with_tape(std::shared_ptr<const PreparedInput> input, const MalacopulaFilter& filter,
                                          std::shared_ptr<const Embedder> embedder, const Embedding& target);
std::pair<double, Tape> forward_with_tape(const Signal& x, const MalacopulaFilter& filter,
                                          const EmbedderConfig& embedder, const Embedding& target);

/// Analytic d(loss)/d(coeffs). The L-infinity divisor is held constant
/// (stop-gradient); the convolution adjoint is correlation with the same
/// zero padding. Throws std::logic_error on an inconsistent tape.
Gradient backward(const Tape& tape);

/// Recomputes the loss from scratch through malacopula_apply, without a tape.
double objective(const Signal& x, const MalacopulaFilter& filter, const Embedder& embedder, const Embedding& target);

struct GradientCheckOptions {
  /// Above this many coefficients a seeded random subset is checked.
  std::size_t exhaustive_limit = 256;
  std::size_t sampled_coordinates = 64;
  std::uint64_t seed = 0;
  /// Denominator floor of the relative error.
  double error_floor = 1e-8;
};

struct GradientCheckReport {
  bool degenerate = false;  // normalisation guard active at the base point
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates whose peak index moved under +-step
  double max_relative_error = 0.0;
  std::size_t worst_coordinate = 0;
  bool passed = false;
};

/// Compares backward() against central differences of the true objective,
///   (loss(c + step e_j) - loss(c - step e_j)) / (2 step),
/// at coordinates where the peak index of mc(x) is unchanged by the
/// perturbation. At such points the true derivative is backward() plus the
/// term routed through the peak sample, which the checker adds before
/// comparing (it is nonzero only through the embedder's residual gain
/// sensitivity). Relative error is
/// |analytic - numeric| / max(|analytic|, |numeric|, error_floor).
GradientCheckReport check_gradient(const Signal& x, const MalacopulaFilter& filter, const EmbedderConfig& embedder,
                                   const Embedding& target, double step, double tolerance,
                                   const GradientCheckOptions& options = {});

}  // namespace malacopula
