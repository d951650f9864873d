#include "malacopula/selection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace malacopula {

ScoreDistribution score_distribution(std::span<const Signal> utts, const Embedding& enrol, const Embedder& embedder,
                                     const MalacopulaFilter* filter, ScoreLabel label) {
  if (utts.empty()) throw std::invalid_argument("score_distribution: no utterances");
  ScoreDistribution dist;
  dist.label = label;
  dist.scores.reserve(utts.size());
  for (const Signal& x : utts) {
    const Embedding e = filter ? embedder.extract(malacopula_apply(x, *filter)) : embedder.extract(x);
    dist.scores.push_back(cosine_similarity(e, enrol));
  }
  return dist;
}

ScoreDistribution score_distribution(std::span<const Signal> utts, const Embedding& enrol,
                                     const EmbedderConfig& embedder, const std::optional<MalacopulaFilter>& filter) {
  return score_distribution(utts, enrol, Embedder(embedder), filter ? &*filter : nullptr,
                            filter ? ScoreLabel::SpoofFiltered : ScoreLabel::SpoofBaseline);
}

double median(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double wasserstein_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein_1d: empty distribution");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const std::size_t na = sa.size(), nb = sb.size();
  if (na == nb) {
    double acc = 0.0;
    for (std::size_t i = 0; i < na; ++i) acc += std::abs(sa[i] - sb[i]);
    return acc / static_cast<double>(na);
  }
  // Walk the merged breakpoints i/na and j/nb of the two step quantile
  // functions; compare as integers (i * nb vs j * na) to avoid drift.
  double acc = 0.0;
  std::size_t i = 0, j = 0;
  std::size_t prev = 0;  // current position in units of 1/(na*nb)
  while (i < na && j < nb) {
    const std::size_t next_a = (i + 1) * nb;
    const std::size_t next_b = (j + 1) * na;
    const std::size_t next = std::min(next_a, next_b);
    acc += static_cast<double>(next - prev) * std::abs(sa[i] - sb[j]);
    prev = next;
    if (next_a == next) ++i;
    if (next_b == next) ++j;
  }
  return acc / static_cast<double>(na * nb);
}

double signed_wasserstein(std::span<const double> spoof, std::span<const double> target) {
  const double w = wasserstein_1d(spoof, target);
  return median(spoof) > median(target) ? w : -w;
}

double signed_wasserstein(const ScoreDistribution& spoof, const ScoreDistribution& target) {
  return signed_wasserstein(spoof.scores, target.scores);
}

SelectionResult select_best(std::span<const FilterCheckpoint> checkpoints, std::span<const Signal> spoof_utts,
                            std::span<const Signal> target_utts, std::span<const Signal> enrol_utts,
                            const EmbedderConfig& embedder_cfg) {
  if (checkpoints.empty()) throw std::invalid_argument("select_best: no checkpoints");
  if (spoof_utts.empty() || target_utts.empty() || enrol_utts.empty())
    throw std::invalid_argument("select_best: utterance lists must be non-empty");

  const Embedder embedder(embedder_cfg);
  std::vector<Embedding> enrol_embeddings;
  for (const Signal& y : enrol_utts) enrol_embeddings.push_back(embedder.extract(y));
  const Embedding enrol = average_enrolment(enrol_embeddings);

  auto to_distance = [](std::vector<double> scores) {
    for (double& s : scores) s = 1.0 - s;
    return scores;
  };
  const auto target =
      to_distance(score_distribution(target_utts, enrol, embedder, nullptr, ScoreLabel::TargetBonaFide).scores);
  const double target_median = median(target);

  SelectionResult result;
  double best = 0.0;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const auto spoof = to_distance(
        score_distribution(spoof_utts, enrol, embedder, &checkpoints[c].filter, ScoreLabel::SpoofFiltered).scores);
    const double value = signed_wasserstein(spoof, target);
    result.diagnostics.push_back({checkpoints[c].epoch, checkpoints[c].batch, value, median(spoof), target_median});
    if (c == 0 || value < best) {
      best = value;
      result.index = c;
    }
  }
  result.checkpoint = checkpoints[result.index];
  return result;
}

}  // namespace malacopula
