#include "malacopula/trainer.hpp"

#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "malacopula/rng.hpp"

namespace malacopula {

void TrainingConfig::validate() const {
  if (epochs <= 0) throw std::invalid_argument("TrainingConfig: epochs must be positive");
  if (batch_size <= 0) throw std::invalid_argument("TrainingConfig: batch_size must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainingConfig: learning_rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw std::invalid_argument("TrainingConfig: Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw std::invalid_argument("TrainingConfig: adam_eps must be positive");
  if (branches == 0) throw std::invalid_argument("TrainingConfig: K must be >= 1");
  if (length == 0 || length % 2 == 0) throw std::invalid_argument("TrainingConfig: L must be odd");
}

AdamState AdamState::for_filter(const MalacopulaFilter& filter) {
  const std::size_t n = filter.coeffs().size();
  return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0};
}

MalacopulaFilter init_filter(std::size_t branches, std::size_t length, std::uint64_t seed) {
  MalacopulaFilter f(branches, length);
  f.row(0)[f.centre()] = 1.0;
  SplitMix64 rng(seed);
  for (std::size_t k = 1; k < branches; ++k)
    for (double& c : f.row(k)) c = rng.uniform(-1e-4, 1e-4);
  return f;
}

void adam_step(MalacopulaFilter& filter, const Gradient& grad, AdamState& state, const TrainingConfig& cfg) {
  const std::size_t n = filter.coeffs().size();
  if (grad.branches != filter.branches() || grad.length != filter.length() || grad.d_coeffs.size() != n)
    throw std::invalid_argument("adam_step: gradient shape does not match filter");
  if (state.first_moment.size() != n || state.second_moment.size() != n)
    throw std::invalid_argument("adam_step: optimiser state shape does not match filter");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.adam_beta2, t);
  auto coeffs = filter.coeffs();
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad.d_coeffs[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    coeffs[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
  }
}

std::vector<FilterCheckpoint> train_filter(std::span<const Signal> spoof_utts, const Embedding& enrol_embedding,
                                           const TrainingConfig& cfg, const EmbedderConfig& embedder,
                                           const EpochCallback& on_epoch) {
  return train_filter(spoof_utts, enrol_embedding, cfg, embedder,
                      init_filter(cfg.branches, cfg.length, mix_seed(cfg.seed, 0x1417)), on_epoch);
}

std::vector<FilterCheckpoint> train_filter(std::span<const Signal> spoof_utts, const Embedding& enrol_embedding,
                                           const TrainingConfig& cfg, const EmbedderConfig& embedder_cfg,
                                           MalacopulaFilter filter, const EpochCallback& on_epoch) {
  cfg.validate();
  if (spoof_utts.empty()) throw std::invalid_argument("train_filter: no spoofed utterances");
  if (filter.branches() != cfg.branches || filter.length() != cfg.length)
    throw std::invalid_argument("train_filter: initial filter shape does not match config");

  const auto embedder = std::make_shared<const Embedder>(embedder_cfg);
  std::vector<std::shared_ptr<const PreparedInput>> inputs;
  inputs.reserve(spoof_utts.size());
  for (const Signal& x : spoof_utts) inputs.push_back(std::make_shared<const PreparedInput>(x, cfg.branches, cfg.length));

  AdamState state = AdamState::for_filter(filter);
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  std::vector<FilterCheckpoint> checkpoints;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    SplitMix64 shuffle_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.next() % i]);

    double epoch_loss = 0.0;
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += batch, ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + batch);
      Gradient mean{filter.branches(), filter.length(), std::vector<double>(filter.coeffs().size(), 0.0)};
      double batch_loss = 0.0;
      for (std::size_t j = start; j < stop; ++j) {
        auto [loss, tape] = forward_with_tape(inputs[order[j]], filter, embedder, enrol_embedding);
        const Gradient g = backward(tape);
        for (std::size_t i = 0; i < g.d_coeffs.size(); ++i) mean.d_coeffs[i] += g.d_coeffs[i];
        batch_loss += loss;
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (double& v : mean.d_coeffs) v *= inv;
      epoch_loss += batch_loss;
      adam_step(filter, mean, state, cfg);
      if (cfg.checkpoint_every_batch) checkpoints.push_back({epoch, batch_index, filter, batch_loss * inv});
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!cfg.checkpoint_every_batch) checkpoints.push_back({epoch, -1, filter, epoch_loss});
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return checkpoints;
}

}  // namespace malacopula
