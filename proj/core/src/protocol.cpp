#include "malacopula/protocol.hpp"

#include <algorithm>
#include <set>

#include "malacopula/errors.hpp"

namespace malacopula {

const char* role_name(Role role) {
  switch (role) {
    case Role::Enrol: return "enrol";
    case Role::Target: return "target";
    case Role::Spoof: return "spoof";
  }
  return "?";
}

Role parse_role(const std::string& name) {
  if (name == "enrol") return Role::Enrol;
  if (name == "target") return Role::Target;
  if (name == "spoof") return Role::Spoof;
  throw DataError("unknown protocol role '" + name + "'");
}

std::vector<std::string> TrialProtocol::speakers() const {
  std::set<std::string> s;
  for (const auto& e : entries) s.insert(e.speaker_id);
  return {s.begin(), s.end()};
}

std::vector<std::string> TrialProtocol::attacks() const {
  std::set<std::string> s;
  for (const auto& e : entries)
    if (e.role == Role::Spoof) s.insert(e.attack_id);
  return {s.begin(), s.end()};
}

std::vector<const ProtocolEntry*> TrialProtocol::select(Role role, const std::string& speaker,
                                                        const std::string& attack) const {
  std::vector<const ProtocolEntry*> out;
  for (const auto& e : entries)
    if (e.role == role && e.speaker_id == speaker && (role != Role::Spoof || e.attack_id == attack))
      out.push_back(&e);
  return out;
}

void Corpus::add(const std::string& utterance_id, Signal signal) { utts_.insert_or_assign(utterance_id, std::move(signal)); }

const Signal& Corpus::at(const std::string& utterance_id) const {
  auto it = utts_.find(utterance_id);
  if (it == utts_.end()) throw DataError("utterance '" + utterance_id + "' is not in the corpus");
  return it->second;
}

std::vector<Signal> Corpus::gather(const TrialProtocol& protocol, Role role, const std::string& speaker,
                                   const std::string& attack) const {
  std::vector<Signal> out;
  for (const ProtocolEntry* e : protocol.select(role, speaker, attack)) out.push_back(at(e->utterance_id));
  return out;
}

}  // namespace malacopula
