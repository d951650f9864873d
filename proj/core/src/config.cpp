#include "malacopula/config.hpp"

#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include "malacopula/errors.hpp"
#include "malacopula/formats.hpp"

namespace malacopula {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T to_number(const std::string& value, const std::string& context) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw UsageError(context + ": cannot parse '" + value + "' as a number");
  return out;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"corpus",
       {"dir", "speakers", "enrol", "target", "spoofs_per_attack", "duration_s", "duration_spread", "sample_rate_hz",
        "seed", "attack"}},
      {"embedder.fa",
       {"frame_length", "hop_length", "fft_size", "mel_bands", "embedding_dim", "projection_seed", "sample_rate_hz"}},
      {"training", {"epochs", "batch_size", "learning_rate", "adam_beta1", "adam_beta2", "adam_eps", "checkpoint"}},
      {"experiment", {"output_dir", "grid", "workers", "seed"}},
  };
  return s;
}

const std::set<std::string>& keys_for(const std::string& section) {
  if (section == "embedder.fb" || section == "embedder.ftest") return schema().at("embedder.fa");
  return schema().at(section);
}

bool known_section(const std::string& section) {
  return schema().count(section) > 0 || section == "embedder.fb" || section == "embedder.ftest";
}

void apply_embedder_key(EmbedderConfig& e, const std::string& key, const std::string& value, const std::string& ctx) {
  if (key == "frame_length") e.frame_length = to_number<int>(value, ctx);
  else if (key == "hop_length") e.hop_length = to_number<int>(value, ctx);
  else if (key == "fft_size") e.fft_size = to_number<int>(value, ctx);
  else if (key == "mel_bands") e.mel_bands = to_number<int>(value, ctx);
  else if (key == "embedding_dim") e.embedding_dim = to_number<int>(value, ctx);
  else if (key == "projection_seed") e.projection_seed = to_number<std::uint64_t>(value, ctx);
  else if (key == "sample_rate_hz") e.sample_rate_hz = to_number<int>(value, ctx);
}

std::string embedder_section(const std::string& name, const EmbedderConfig& e) {
  std::ostringstream os;
  os << "[embedder." << name << "]\n"
     << "frame_length = " << e.frame_length << '\n'
     << "hop_length = " << e.hop_length << '\n'
     << "fft_size = " << e.fft_size << '\n'
     << "mel_bands = " << e.mel_bands << '\n'
     << "embedding_dim = " << e.embedding_dim << '\n'
     << "projection_seed = " << e.projection_seed << '\n'
     << "sample_rate_hz = " << e.sample_rate_hz << '\n';
  return os.str();
}

}  // namespace

std::string GridCell::label() const { return "L" + std::to_string(length) + "_K" + std::to_string(branches); }

std::vector<GridCell> parse_grid(const std::string& text) {
  std::vector<GridCell> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto x = item.find('x');
    if (x == std::string::npos) throw UsageError("grid cell '" + item + "' must look like <L>x<K>, e.g. 257x5");
    GridCell c;
    c.length = to_number<std::size_t>(item.substr(0, x), "grid");
    c.branches = to_number<std::size_t>(item.substr(x + 1), "grid");
    if (c.length == 0 || c.length % 2 == 0) throw UsageError("grid cell '" + item + "': L must be odd");
    if (c.branches == 0) throw UsageError("grid cell '" + item + "': K must be >= 1");
    for (const auto& g : grid)
      if (g == c) throw UsageError("grid cell '" + item + "' listed twice");
    grid.push_back(c);
  }
  if (grid.empty()) throw UsageError("grid is empty");
  return grid;
}

std::string format_grid(const std::vector<GridCell>& grid) {
  std::string out;
  for (const auto& c : grid) {
    if (!out.empty()) out += ',';
    out += std::to_string(c.length) + 'x' + std::to_string(c.branches);
  }
  return out;
}

std::vector<GridCell> full_grid() { return {{257, 1}, {257, 3}, {257, 5}, {1025, 1}, {1025, 3}, {1025, 5}}; }

const char* role_key(EmbedderRole role) {
  switch (role) {
    case EmbedderRole::Training: return "fa";
    case EmbedderRole::Selection: return "fb";
    case EmbedderRole::Evaluation: return "ftest";
  }
  return "?";
}

EmbedderRole parse_embedder_role(const std::string& key) {
  if (key == "fa") return EmbedderRole::Training;
  if (key == "fb") return EmbedderRole::Selection;
  if (key == "ftest") return EmbedderRole::Evaluation;
  throw UsageError("unknown embedder role '" + key + "' (expected fa, fb or ftest)");
}

const EmbedderConfig& ExperimentConfig::embedder(EmbedderRole role) const {
  switch (role) {
    case EmbedderRole::Training: return fa;
    case EmbedderRole::Selection: return fb;
    case EmbedderRole::Evaluation: return ftest;
  }
  return ftest;
}

void ExperimentConfig::validate() const {
  try {
    corpus.validate();
    fa.validate();
    fb.validate();
    ftest.validate();
    TrainingConfig t = training;
    for (const auto& c : grid) {
      t.branches = c.branches;
      t.length = c.length;
      t.validate();
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
  if (grid.empty()) throw UsageError("invalid configuration: empty grid");
  if (workers < 1) throw UsageError("invalid configuration: workers must be >= 1");
  for (const EmbedderConfig* e : {&fa, &fb, &ftest})
    if (e->sample_rate_hz != corpus.sample_rate_hz)
      throw UsageError("invalid configuration: embedder sample rate differs from corpus sample rate");
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin,
                                         const std::filesystem::path& base_dir, int default_workers) {
  ExperimentConfig cfg;
  if (default_workers > 0) cfg.workers = default_workers;
  std::string section;
  std::set<std::string> seen;
  bool attacks_replaced = false;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  auto resolve = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string ctx = origin + ":" + std::to_string(line_no);
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw UsageError(ctx + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!known_section(section)) throw UsageError(ctx + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(ctx + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw UsageError(ctx + ": key '" + key + "' outside of a section");
    if (!keys_for(section).count(key)) throw UsageError(ctx + ": unknown key '" + key + "' in [" + section + "]");
    if (key != "attack" && !seen.insert(section + "." + key).second)
      throw UsageError(ctx + ": duplicate key '" + key + "' in [" + section + "]");

    if (section == "corpus") {
      auto& c = cfg.corpus;
      if (key == "dir") cfg.corpus_dir = resolve(value);
      else if (key == "speakers") c.n_speakers = to_number<int>(value, ctx);
      else if (key == "enrol") c.n_enrol = to_number<int>(value, ctx);
      else if (key == "target") c.n_target = to_number<int>(value, ctx);
      else if (key == "spoofs_per_attack") c.n_spoof_per_attack = to_number<int>(value, ctx);
      else if (key == "duration_s") c.duration_s = to_number<double>(value, ctx);
      else if (key == "duration_spread") c.duration_spread = to_number<double>(value, ctx);
      else if (key == "sample_rate_hz") c.sample_rate_hz = to_number<int>(value, ctx);
      else if (key == "seed") c.seed = to_number<std::uint64_t>(value, ctx);
      else if (key == "attack") {
        std::istringstream fields(value);
        std::string id, kind, severity, extra;
        if (!(fields >> id >> kind >> severity) || (fields >> extra))
          throw UsageError(ctx + ": attack must be '<id> <detune|warp|noise|swap> <severity>'");
        if (!attacks_replaced) {
          c.attacks.clear();
          attacks_replaced = true;
        }
        try {
          c.attacks.push_back({id, parse_attack_kind(kind), to_number<double>(severity, ctx)});
        } catch (const std::invalid_argument& e) {
          throw UsageError(ctx + ": " + e.what());
        }
      }
    } else if (section == "embedder.fa") {
      apply_embedder_key(cfg.fa, key, value, ctx);
    } else if (section == "embedder.fb") {
      apply_embedder_key(cfg.fb, key, value, ctx);
    } else if (section == "embedder.ftest") {
      apply_embedder_key(cfg.ftest, key, value, ctx);
    } else if (section == "training") {
      auto& t = cfg.training;
      if (key == "epochs") t.epochs = to_number<int>(value, ctx);
      else if (key == "batch_size") t.batch_size = to_number<int>(value, ctx);
      else if (key == "learning_rate") t.learning_rate = to_number<double>(value, ctx);
      else if (key == "adam_beta1") t.adam_beta1 = to_number<double>(value, ctx);
      else if (key == "adam_beta2") t.adam_beta2 = to_number<double>(value, ctx);
      else if (key == "adam_eps") t.adam_eps = to_number<double>(value, ctx);
      else if (key == "checkpoint") {
        if (value == "epoch") t.checkpoint_every_batch = false;
        else if (value == "batch") t.checkpoint_every_batch = true;
        else throw UsageError(ctx + ": checkpoint must be 'epoch' or 'batch'");
      }
    } else if (section == "experiment") {
      if (key == "output_dir") cfg.output_dir = resolve(value);
      else if (key == "grid") cfg.grid = parse_grid(value);
      else if (key == "workers") cfg.workers = to_number<int>(value, ctx);
      else if (key == "seed") cfg.seed = to_number<std::uint64_t>(value, ctx);
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, int default_workers) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  return parse_experiment_config(text, path.string(), path.parent_path(), default_workers);
}

std::string format_experiment_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[corpus]\n"
     << "dir = " << c.corpus_dir.string() << '\n'
     << "speakers = " << c.corpus.n_speakers << '\n'
     << "enrol = " << c.corpus.n_enrol << '\n'
     << "target = " << c.corpus.n_target << '\n'
     << "spoofs_per_attack = " << c.corpus.n_spoof_per_attack << '\n'
     << "duration_s = " << format_double(c.corpus.duration_s) << '\n'
     << "duration_spread = " << format_double(c.corpus.duration_spread) << '\n'
     << "sample_rate_hz = " << c.corpus.sample_rate_hz << '\n'
     << "seed = " << c.corpus.seed << '\n';
  for (const auto& a : c.corpus.attacks)
    os << "attack = " << a.attack_id << ' ' << attack_kind_name(a.kind) << ' ' << format_double(a.severity) << '\n';
  os << '\n' << embedder_section("fa", c.fa) << '\n' << embedder_section("fb", c.fb) << '\n'
     << embedder_section("ftest", c.ftest) << '\n';
  os << "[training]\n"
     << "epochs = " << c.training.epochs << '\n'
     << "batch_size = " << c.training.batch_size << '\n'
     << "learning_rate = " << format_double(c.training.learning_rate) << '\n'
     << "adam_beta1 = " << format_double(c.training.adam_beta1) << '\n'
     << "adam_beta2 = " << format_double(c.training.adam_beta2) << '\n'
     << "adam_eps = " << format_double(c.training.adam_eps) << '\n'
     << "checkpoint = " << (c.training.checkpoint_every_batch ? "batch" : "epoch") << "\n\n";
  os << "[experiment]\n"
     << "output_dir = " << c.output_dir.string() << '\n'
     << "grid = " << format_grid(c.grid) << '\n'
     << "workers = " << c.workers << '\n'
     << "seed = " << c.seed << '\n';
  return os.str();
}

}  // namespace malacopula
