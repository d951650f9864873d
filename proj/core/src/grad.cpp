#include "malacopula/grad.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "circular_kernel.hpp"
#include "malacopula/rng.hpp"

namespace malacopula {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// d(1 - CS(e, t))/de
std::vector<double> cosine_loss_gradient(const Embedding& e, const Embedding& t) {
  const double ee = dot(e.values, e.values);
  const double tt = dot(t.values, t.values);
  const double et = dot(e.values, t.values);
  const double ne = std::sqrt(ee), nt = std::sqrt(tt);
  std::vector<double> g(e.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = -(t.values[i] / (ne * nt) - et * e.values[i] / (ee * ne * nt));
  return g;
}

}  // namespace

double Gradient::max_abs() const {
  double m = 0.0;
  for (double v : d_coeffs) m = std::max(m, std::abs(v));
  return m;
}

PreparedInput::PreparedInput(Signal x, std::size_t branches, std::size_t length)
    : x_(std::move(x)),
      branches_(branches),
      length_(length),
      fft_(good_fft_size(std::max<std::size_t>(x_.size() + length / 2, 2))) {
  if (x_.empty()) throw std::invalid_argument("PreparedInput: empty signal");
  if (branches_ == 0) throw std::invalid_argument("PreparedInput: need at least one branch");
  if (length_ == 0 || length_ % 2 == 0) throw std::invalid_argument("PreparedInput: filter length must be odd");
  const std::size_t bins = fft_.bins();
  spectra_.resize(branches_ * bins);
  std::vector<double> branch(x_.samples().begin(), x_.samples().end());
  for (std::size_t k = 0; k < branches_; ++k) {
    if (k > 0)
      for (std::size_t i = 0; i < branch.size(); ++i) branch[i] *= x_.samples()[i];
    fft_.forward(branch, std::span(spectra_.data() + k * bins, bins));
  }
}

std::vector<double> PreparedInput::forward(const MalacopulaFilter& filter) const {
  if (filter.branches() != branches_ || filter.length() != length_)
    throw std::invalid_argument("PreparedInput::forward: filter shape does not match prepared input");
  const std::size_t bins = fft_.bins();
  Spectrum acc(bins, {0.0, 0.0});
  Spectrum kernel(bins);
  for (std::size_t k = 0; k < branches_; ++k) {
    fft_.forward(detail::circular_kernel(filter.windowed_row(k), fft_.size()), kernel);
    const auto X = branch_spectrum(k);
    for (std::size_t b = 0; b < bins; ++b) acc[b] += X[b] * kernel[b];
  }
  std::vector<double> full(fft_.size());
  fft_.inverse(acc, full);
  const double scale = 1.0 / static_cast<double>(fft_.size());
  std::vector<double> y(x_.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = full[i] * scale;
  return y;
}

std::pair<double, Tape> forward_with_tape(std::shared_ptr<const PreparedInput> input, const MalacopulaFilter& filter,
                                          std::shared_ptr<const Embedder> embedder, const Embedding& target) {
  if (!input || !embedder) throw std::invalid_argument("forward_with_tape: null input or embedder");
  if (target.size() != embedder->dim())
    throw std::invalid_argument("forward_with_tape: target dimension " + std::to_string(target.size()) +
                                " does not match embedder dimension " + std::to_string(embedder->dim()));
  Tape tape;
  tape.filter = filter;
  tape.pre_norm = input->forward(filter);
  tape.peak = find_peak(tape.pre_norm);
  tape.scale = tape.peak.magnitude > kNormGuard ? tape.peak.magnitude : 1.0;
  tape.output = tape.pre_norm;
  if (tape.peak.magnitude > kNormGuard)
    for (double& v : tape.output) v /= tape.scale;
  tape.embedding = embedder->extract(tape.output, tape.trace);
  tape.target = target;
  tape.loss = 1.0 - cosine_similarity(tape.embedding, target);
  tape.input = std::move(input);
  tape.embedder = std::move(embedder);
  const double loss = tape.loss;
  return {loss, std::move(tape)};
}

std::pair<double, Tape> forward_with_tape(const Signal& x, const MalacopulaFilter& filter,
                                          const EmbedderConfig& embedder, const Embedding& target) {
  return forward_with_tape(std::make_shared<const PreparedInput>(x, filter.branches(), filter.length()), filter,
                           std::make_shared<const Embedder>(embedder), target);
}

Gradient backward(const Tape& tape) {
  if (!tape.input || !tape.embedder) throw std::logic_error("backward: tape has no input or embedder");
  const PreparedInput& in = *tape.input;
  const std::size_t n = in.signal().size();
  const std::size_t K = tape.filter.branches();
  const std::size_t L = tape.filter.length();
  if (in.branches() != K || in.length() != L || tape.output.size() != n || tape.pre_norm.size() != n ||
      tape.embedding.size() != tape.target.size() || tape.trace.n_samples != n || !(tape.scale > 0.0))
    throw std::logic_error("backward: corrupted tape");

  const auto d_embedding = cosine_loss_gradient(tape.embedding, tape.target);
  auto d_y = tape.embedder->backward(tape.trace, d_embedding);
  for (double& v : d_y) v /= tape.scale;

  const RealFft& fft = in.fft();
  const std::size_t bins = fft.bins();
  const Spectrum G = fft.forward(d_y);
  const auto window = bartlett_window(L);
  const std::size_t c = L / 2;
  const double inv_n = 1.0 / static_cast<double>(fft.size());

  Gradient grad{K, L, std::vector<double>(K * L, 0.0)};
  Spectrum prod(bins);
  std::vector<double> corr(fft.size());
  for (std::size_t k = 0; k < K; ++k) {
    // dq[d] = sum_n g[n] x^k[n - d]  <=>  G * conj(X_k)
    const auto X = in.branch_spectrum(k);
    for (std::size_t b = 0; b < bins; ++b) prod[b] = G[b] * std::conj(X[b]);
    fft.inverse(prod, corr);
    for (std::size_t i = 0; i < L; ++i)
      grad.d_coeffs[k * L + i] = window[i] * corr[detail::circular_index(i, c, fft.size())] * inv_n;
  }
  return grad;
}

double objective(const Signal& x, const MalacopulaFilter& filter, const Embedder& embedder, const Embedding& target) {
  const Signal out = malacopula_apply(x, filter);
  return 1.0 - cosine_similarity(embedder.extract(out.samples()), target);
}

GradientCheckReport check_gradient(const Signal& x, const MalacopulaFilter& filter, const EmbedderConfig& embedder_cfg,
                                   const Embedding& target, double step, double tolerance,
                                   const GradientCheckOptions& options) {
  if (!(step > 0.0)) throw std::invalid_argument("check_gradient: step must be positive");
  GradientCheckReport report;
  const auto embedder = std::make_shared<const Embedder>(embedder_cfg);
  const auto input = std::make_shared<const PreparedInput>(x, filter.branches(), filter.length());

  const Peak base_peak = find_peak(hammerstein_forward(x, filter).samples());
  const std::size_t total = filter.coeffs().size();
  if (base_peak.magnitude <= kNormGuard) {
    report.degenerate = true;
    report.skipped = total;
    return report;
  }

  auto [loss, tape] = forward_with_tape(input, filter, embedder, target);
  (void)loss;
  Gradient analytic = backward(tape);

  // backward() holds the divisor fixed. The true loss also routes through the
  // peak sample: d(1/M)/dc_j = -sgn(mc[p]) / M^2 * d mc[p] / dc_j. The
  // embedder is gain invariant only up to its log floor, so this term is tiny
  // but not zero; adding it makes the comparison exact at stable-peak points.
  {
    const auto d_y = embedder->backward(tape.trace, cosine_loss_gradient(tape.embedding, tape.target));
    double dy_dot_y = 0.0;
    for (std::size_t n = 0; n < d_y.size(); ++n) dy_dot_y += d_y[n] * tape.output[n];
    const double sign = tape.pre_norm[base_peak.index] < 0.0 ? -1.0 : 1.0;
    const double coef = -sign * dy_dot_y / tape.scale;
    const std::size_t L = filter.length(), c = L / 2, n = x.size();
    const auto window = bartlett_window(L);
    for (std::size_t k = 0; k < filter.branches(); ++k)
      for (std::size_t i = 0; i < L; ++i) {
        const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(base_peak.index + i) - static_cast<std::ptrdiff_t>(c);
        if (m < 0 || m >= static_cast<std::ptrdiff_t>(n)) continue;
        analytic.d_coeffs[k * L + i] += coef * window[i] * std::pow(x.samples()[static_cast<std::size_t>(m)], static_cast<int>(k + 1));
      }
  }

  auto peak_index_after = [&](const MalacopulaFilter& f) { return find_peak(hammerstein_forward(x, f).samples()); };

  auto check_coordinate = [&](std::size_t j) -> bool {
    MalacopulaFilter plus = filter, minus = filter;
    plus.coeffs()[j] += step;
    minus.coeffs()[j] -= step;
    const Peak pp = peak_index_after(plus), pm = peak_index_after(minus);
    if (pp.index != base_peak.index || pm.index != base_peak.index || pp.magnitude <= kNormGuard ||
        pm.magnitude <= kNormGuard)
      return false;
    const double numeric =
        (objective(x, plus, *embedder, target) - objective(x, minus, *embedder, target)) / (2.0 * step);
    const double a = analytic.d_coeffs[j];
    const double denom = std::max({std::abs(a), std::abs(numeric), options.error_floor});
    const double rel = std::abs(a - numeric) / denom;
    if (rel > report.max_relative_error || report.checked == 0) {
      report.max_relative_error = std::max(report.max_relative_error, rel);
      if (rel >= report.max_relative_error) report.worst_coordinate = j;
    }
    ++report.checked;
    return true;
  };

  if (total <= options.exhaustive_limit) {
    for (std::size_t j = 0; j < total; ++j)
      if (!check_coordinate(j)) ++report.skipped;
  } else {
    // Unstable coordinates are skipped and another one is drawn, up to a bound.
    SplitMix64 rng(options.seed);
    std::size_t attempts = 0;
    const std::size_t max_attempts = options.sampled_coordinates * 8;
    while (report.checked < options.sampled_coordinates && attempts < max_attempts) {
      ++attempts;
      const std::size_t j = static_cast<std::size_t>(rng.next() % total);
      if (!check_coordinate(j)) ++report.skipped;
    }
  }
  report.passed = report.checked > 0 && report.max_relative_error < tolerance;
  return report;
}

}  // namespace malacopula
