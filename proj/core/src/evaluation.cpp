#include "malacopula/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <stdexcept>

#include "malacopula/errors.hpp"

namespace malacopula {

EerResult compute_eer(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) throw std::invalid_argument("compute_eer: empty score list");
  std::vector<double> pos(positives.begin(), positives.end()), neg(negatives.begin(), negatives.end());
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  std::vector<double> thresholds;
  thresholds.reserve(pos.size() + neg.size());
  std::merge(pos.begin(), pos.end(), neg.begin(), neg.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double n_pos = static_cast<double>(pos.size());
  const double n_neg = static_cast<double>(neg.size());
  auto far_at = [&](double t) {
    return static_cast<double>(neg.end() - std::lower_bound(neg.begin(), neg.end(), t)) / n_neg;
  };
  auto frr_at = [&](double t) {
    return static_cast<double>(std::lower_bound(pos.begin(), pos.end(), t) - pos.begin()) / n_pos;
  };

  double prev_far = 1.0, prev_frr = 0.0, prev_t = thresholds.front();
  for (std::size_t i = 0; i <= thresholds.size(); ++i) {
    // One step past the largest score every trial is rejected.
    const bool sentinel = i == thresholds.size();
    const double t = sentinel ? std::nextafter(thresholds.back(), std::numeric_limits<double>::infinity())
                              : thresholds[i];
    const double far = sentinel ? 0.0 : far_at(t);
    const double frr = sentinel ? 1.0 : frr_at(t);
    const double diff = far - frr;
    if (diff <= 0.0) {
      if (diff == 0.0 || i == 0) return {far, t};
      const double prev_diff = prev_far - prev_frr;
      const double alpha = prev_diff / (prev_diff - diff);
      return {prev_far + alpha * (far - prev_far), prev_t + alpha * (t - prev_t)};
    }
    prev_far = far;
    prev_frr = frr;
    prev_t = t;
  }
  return {0.5, thresholds.back()};  // unreachable: the sentinel has diff = -1
}

EvalReport summarize_trials(std::vector<Trial> trials, std::string condition) {
  EvalReport report;
  report.condition = std::move(condition);
  std::vector<double> pos, neg;
  std::map<std::string, std::vector<double>> by_attack;
  for (const Trial& t : trials) {
    if (t.is_target) {
      pos.push_back(t.score);
    } else {
      neg.push_back(t.score);
      by_attack[t.attack_id].push_back(t.score);
    }
  }
  if (pos.empty() || neg.empty())
    throw DataError("cannot compute spf-EER: need both target and spoof trials (" + std::to_string(pos.size()) +
                    " target, " + std::to_string(neg.size()) + " spoof)");
  report.target_trials = pos.size();
  report.spoof_trials = neg.size();
  const EerResult pooled = compute_eer(pos, neg);
  report.pooled_eer = pooled.eer;
  report.pooled_threshold = pooled.threshold;
  for (const auto& [attack, scores] : by_attack) {
    const EerResult r = compute_eer(pos, scores);
    report.per_attack[attack] = {r.eer, r.threshold, scores.size()};
  }
  report.trials = std::move(trials);
  return report;
}

EvalReport evaluate_protocol(const TrialProtocol& protocol, const Corpus& corpus, const EmbedderConfig& embedder_cfg,
                             const FilterMap* filters, std::string condition) {
  const Embedder embedder(embedder_cfg);
  auto fetch = [&](const ProtocolEntry& e) -> const Signal& {
    if (!corpus.contains(e.utterance_id))
      throw DataError(std::string("trial ") + role_name(e.role) + " " + e.speaker_id + " " + e.utterance_id + " " +
                      e.attack_id + ": utterance missing from corpus (" + e.path + ")");
    return corpus.at(e.utterance_id);
  };

  std::map<std::string, Embedding> enrolment;
  for (const std::string& speaker : protocol.speakers()) {
    std::vector<Embedding> es;
    for (const ProtocolEntry* e : protocol.select(Role::Enrol, speaker)) es.push_back(embedder.extract(fetch(*e)));
    if (!es.empty()) enrolment.emplace(speaker, average_enrolment(es));
  }

  std::vector<Trial> trials;
  for (const ProtocolEntry& e : protocol.entries) {
    if (e.role == Role::Enrol) continue;
    auto enrol = enrolment.find(e.speaker_id);
    if (enrol == enrolment.end())
      throw DataError("trial " + e.speaker_id + " " + e.utterance_id + ": speaker has no enrolment utterances");
    const Signal& x = fetch(e);
    Embedding emb;
    const MalacopulaFilter* filter = nullptr;
    if (e.role == Role::Spoof && filters) {
      auto it = filters->find({e.speaker_id, e.attack_id});
      if (it != filters->end()) filter = &it->second;
    }
    emb = filter ? embedder.extract(malacopula_apply(x, *filter)) : embedder.extract(x);
    trials.push_back({e.speaker_id, e.utterance_id, e.role == Role::Spoof ? e.attack_id : kBonaFide,
                      e.role == Role::Target, cosine_similarity(emb, enrol->second)});
  }
  return summarize_trials(std::move(trials), std::move(condition));
}

}  // namespace malacopula
