#pragma once

#include <map>
#include <string>
#include <vector>

#include "malacopula/signal.hpp"

namespace malacopula {

enum class Role { Enrol, Target, Spoof };

const char* role_name(Role role);
Role parse_role(const std::string& name);

/// Attack id used for bona fide entries.
inline constexpr const char* kBonaFide = "-";

struct ProtocolEntry {
  Role role = Role::Target;
  std::string speaker_id;
  std::string utterance_id;
  std::string attack_id = kBonaFide;
  std::string path;  // relative to the corpus directory

  friend bool operator==(const ProtocolEntry&, const ProtocolEntry&) = default;
};

/// Enrolment, target and spoof utterance lists keyed by speaker and attack.
struct TrialProtocol {
  std::vector<ProtocolEntry> entries;

  std::vector<std::string> speakers() const;
  std::vector<std::string> attacks() const;
  std::vector<const ProtocolEntry*> select(Role role, const std::string& speaker,
                                           const std::string& attack = kBonaFide) const;

  friend bool operator==(const TrialProtocol&, const TrialProtocol&) = default;
};

/// In-memory utterances keyed by utterance id.
class Corpus {
 public:
  void add(const std::string& utterance_id, Signal signal);
  bool contains(const std::string& utterance_id) const { return utts_.count(utterance_id) > 0; }
  /// Throws DataError when the utterance is missing.
  const Signal& at(const std::string& utterance_id) const;
  std::size_t size() const { return utts_.size(); }

  /// Signals for the protocol entries matching (role, speaker, attack).
  std::vector<Signal> gather(const TrialProtocol& protocol, Role role, const std::string& speaker,
                             const std::string& attack = kBonaFide) const;

 private:
  std::map<std::string, Signal> utts_;
};

}  // namespace malacopula
