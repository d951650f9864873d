#include "malacopula/formats.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "malacopula/errors.hpp"
#include "malacopula/wav.hpp"

namespace malacopula {
namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const std::size_t next = line.find(' ', pos);
    out.push_back(line.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string where(const std::string& origin, std::size_t line_no) { return origin + ":" + std::to_string(line_no); }

// Splits text into lines; a trailing newline does not produce an empty line.
std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::uint8_t> encode_filter_file(const FilterFile& f) {
  std::ostringstream os;
  os << kFilterMagic << ' ' << kFilterVersion << '\n'
     << "K " << f.filter.branches() << '\n'
     << "L " << f.filter.length() << '\n'
     << "speaker " << f.speaker_id << '\n'
     << "attack " << f.attack_id << '\n'
     << "epoch " << f.selected_epoch << '\n'
     << "fa_hash " << hex64(f.fa_hash) << '\n'
     << "fb_hash " << hex64(f.fb_hash) << '\n'
     << "payload\n";
  const std::string header = os.str();
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (double v : f.filter.coeffs()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

FilterFile decode_filter_file(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&]() {
    const auto* begin = bytes.data() + pos;
    const auto* nl = static_cast<const std::uint8_t*>(std::memchr(begin, '\n', bytes.size() - pos));
    if (!nl) throw DataError(origin + ": truncated filter header");
    std::string line(begin, nl);
    pos = static_cast<std::size_t>(nl - bytes.data()) + 1;
    ++line_no;
    return line;
  };
  auto field = [&](const char* key) {
    const std::string line = next_line();
    const auto parts = split_fields(line);
    if (parts.size() != 2 || parts[0] != key)
      throw DataError(where(origin, line_no) + ": expected '" + key + " <value>', got '" + line + "'");
    return parts[1];
  };
  auto integer = [&](const char* key) {
    long long v = 0;
    const std::string s = field(key);
    if (!parse_number(s, v)) throw DataError(where(origin, line_no) + ": bad integer for " + key + ": '" + s + "'");
    return v;
  };
  auto hash = [&](const char* key) {
    std::uint64_t v = 0;
    const std::string s = field(key);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw DataError(where(origin, line_no) + ": bad hash for " + key);
    return v;
  };

  if (bytes.size() < std::strlen(kFilterMagic) ||
      std::memcmp(bytes.data(), kFilterMagic, std::strlen(kFilterMagic)) != 0)
    throw DataError(origin + ": not a Malacopula filter file");
  if (integer(kFilterMagic) != kFilterVersion) throw DataError(origin + ": unsupported filter file version");
  const long long K = integer("K");
  const long long L = integer("L");
  FilterFile f;
  f.speaker_id = field("speaker");
  f.attack_id = field("attack");
  f.selected_epoch = static_cast<int>(integer("epoch"));
  f.fa_hash = hash("fa_hash");
  f.fb_hash = hash("fb_hash");
  if (next_line() != "payload") throw DataError(where(origin, line_no) + ": expected 'payload'");
  if (K < 1 || L < 1 || L % 2 == 0) throw DataError(origin + ": invalid filter shape");
  const auto count = static_cast<std::size_t>(K * L);
  if (bytes.size() - pos != count * 8)
    throw DataError(origin + ": payload has " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                    std::to_string(count * 8));
  std::vector<double> coeffs(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t(bytes[pos + 8 * i + b]) << (8 * b);
    std::memcpy(&coeffs[i], &bits, sizeof bits);
  }
  try {
    f.filter = MalacopulaFilter(static_cast<std::size_t>(K), static_cast<std::size_t>(L), std::move(coeffs));
  } catch (const std::invalid_argument& e) {
    throw DataError(origin + ": " + e.what());
  }
  return f;
}

void write_filter_file(const std::filesystem::path& path, const FilterFile& f) {
  write_file_bytes(path, encode_filter_file(f));
}

FilterFile read_filter_file(const std::filesystem::path& path) {
  return decode_filter_file(read_file_bytes(path), path.string());
}

std::string format_protocol(const TrialProtocol& protocol) {
  std::string out;
  for (const auto& e : protocol.entries)
    out += std::string(role_name(e.role)) + ' ' + e.speaker_id + ' ' + e.utterance_id + ' ' + e.attack_id + ' ' +
           e.path + '\n';
  return out;
}

TrialProtocol parse_protocol(const std::string& text, const std::string& origin) {
  TrialProtocol p;
  std::size_t line_no = 0;
  for (const std::string& line : lines_of(text)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 5) throw DataError(where(origin, line_no) + ": expected 5 fields, got " + std::to_string(f.size()));
    ProtocolEntry e;
    try {
      e.role = parse_role(f[0]);
    } catch (const DataError& err) {
      throw DataError(where(origin, line_no) + ": " + err.what());
    }
    e.speaker_id = f[1];
    e.utterance_id = f[2];
    e.attack_id = f[3];
    e.path = f[4];
    if ((e.role == Role::Spoof) == (e.attack_id == kBonaFide))
      throw DataError(where(origin, line_no) + ": spoof entries need an attack id, bona fide entries need '-'");
    p.entries.push_back(std::move(e));
  }
  return p;
}

std::string format_scores(const std::vector<Trial>& trials) {
  std::string out;
  for (const Trial& t : trials)
    out += t.speaker_id + ' ' + t.utterance_id + ' ' + t.attack_id + ' ' + (t.is_target ? "target" : "spoof") + ' ' +
           format_double(t.score) + '\n';
  return out;
}

std::vector<Trial> parse_scores(const std::string& text, const std::string& origin) {
  std::vector<Trial> trials;
  std::size_t line_no = 0;
  for (const std::string& line : lines_of(text)) {
    ++line_no;
    const auto f = split_fields(line);
    if (f.size() != 5)
      throw DataError(where(origin, line_no) + ": corrupted score line (expected 5 fields): '" + line + "'");
    Trial t;
    t.speaker_id = f[0];
    t.utterance_id = f[1];
    t.attack_id = f[2];
    if (f[3] == "target")
      t.is_target = true;
    else if (f[3] == "spoof")
      t.is_target = false;
    else
      throw DataError(where(origin, line_no) + ": corrupted score line (label must be target or spoof)");
    if (!parse_number(f[4], t.score) || !std::isfinite(t.score))
      throw DataError(where(origin, line_no) + ": corrupted score line (bad score '" + f[4] + "')");
    if (t.is_target != (t.attack_id == kBonaFide))
      throw DataError(where(origin, line_no) + ": corrupted score line (label and attack id disagree)");
    trials.push_back(std::move(t));
  }
  return trials;
}

std::string format_report(const EvalReport& r, const std::string& embedder_description) {
  std::string out;
  out += "condition " + r.condition + '\n';
  out += "embedder " + embedder_description + '\n';
  out += "target_trials " + std::to_string(r.target_trials) + '\n';
  out += "spoof_trials " + std::to_string(r.spoof_trials) + '\n';
  out += "pooled_eer " + format_double(r.pooled_eer) + '\n';
  out += "pooled_threshold " + format_double(r.pooled_threshold) + '\n';
  out += "attacks " + std::to_string(r.per_attack.size()) + '\n';
  for (const auto& [id, a] : r.per_attack)
    out += "attack " + id + ' ' + format_double(a.eer) + ' ' + format_double(a.threshold) + ' ' +
           std::to_string(a.spoof_trials) + '\n';
  return out;
}

EvalReport parse_report(const std::string& text, const std::string& origin) {
  EvalReport r;
  const auto lines = lines_of(text);
  std::size_t line_no = 0;
  auto expect = [&](const char* key) -> std::string {
    if (line_no >= lines.size()) throw DataError(origin + ": missing '" + key + "'");
    const std::string& line = lines[line_no++];
    const std::string prefix = std::string(key) + ' ';
    if (line.rfind(prefix, 0) != 0) throw DataError(where(origin, line_no) + ": expected '" + key + "'");
    return line.substr(prefix.size());
  };
  auto number = [&](const char* key, auto& out) {
    const std::string s = expect(key);
    if (!parse_number(s, out)) throw DataError(where(origin, line_no) + ": bad value for " + key);
  };
  r.condition = expect("condition");
  expect("embedder");
  number("target_trials", r.target_trials);
  number("spoof_trials", r.spoof_trials);
  number("pooled_eer", r.pooled_eer);
  number("pooled_threshold", r.pooled_threshold);
  std::size_t n = 0;
  number("attacks", n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto f = split_fields(expect("attack"));
    AttackResult a;
    if (f.size() != 4 || !parse_number(f[1], a.eer) || !parse_number(f[2], a.threshold) ||
        !parse_number(f[3], a.spoof_trials))
      throw DataError(where(origin, line_no) + ": malformed attack row");
    r.per_attack[f[0]] = a;
  }
  if (line_no != lines.size()) throw DataError(where(origin, line_no + 1) + ": trailing content");
  return r;
}

std::string format_training_curve(const std::vector<FilterCheckpoint>& checkpoints) {
  std::string out;
  for (const auto& c : checkpoints) {
    out += std::to_string(c.epoch);
    if (c.batch >= 0) out += '.' + std::to_string(c.batch);
    out += ' ' + format_double(c.mean_loss) + '\n';
  }
  return out;
}

std::string format_selection(const std::vector<SelectionRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += std::to_string(r.epoch);
    if (r.batch >= 0) out += '.' + std::to_string(r.batch);
    out += ' ' + format_double(r.signed_wasserstein) + ' ' + format_double(r.spoof_median) + ' ' +
           format_double(r.target_median) + '\n';
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace malacopula
