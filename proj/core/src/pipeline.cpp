#include "malacopula/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "malacopula/errors.hpp"
#include "malacopula/rng.hpp"
#include "malacopula/trainer.hpp"
#include "malacopula/wav.hpp"

namespace malacopula {
namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::vector<Signal> collect(const Corpus& corpus, const TrialProtocol& protocol, Role role, const std::string& spk,
                            const std::string& att = kBonaFide) {
  return corpus.gather(protocol, role, spk, att);
}

// "L257_K5" -> (257, 5); anything else sorts after the grid.
bool parse_label(const std::string& s, GridCell& out) {
  unsigned long l = 0, k = 0;
  char tail = 0;
  if (std::sscanf(s.c_str(), "L%lu_K%lu%c", &l, &k, &tail) != 2) return false;
  out = {l, k};
  return true;
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

}  // namespace

int default_workers(int fallback) {
  const char* env = std::getenv(kWorkersEnv);
  if (!env || !*env) return fallback;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 4096)
    throw UsageError(std::string(kWorkersEnv) + "='" + env + "' is not a positive integer");
  return static_cast<int>(v);
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(workers, 1)));
  std::vector<std::exception_ptr> errors(n);
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void write_corpus(const GeneratedCorpus& gen, const fs::path& out_dir, int workers) {
  ensure_dir(out_dir);
  std::vector<const ProtocolEntry*> entries;
  for (const auto& e : gen.protocol.entries) entries.push_back(&e);
  std::mutex dirs_mu;
  parallel_for(entries.size(), workers, [&](std::size_t i) {
    const ProtocolEntry& e = *entries[i];
    const fs::path p = out_dir / e.path;
    {
      std::lock_guard lock(dirs_mu);
      ensure_dir(p.parent_path());
    }
    write_wav(p, gen.corpus.at(e.utterance_id));
  });
  write_text_file(out_dir / kProtocolFile, format_protocol(gen.protocol));
}

GeneratedCorpus gen_corpus(const CorpusParams& params, const fs::path& out_dir, int workers) {
  GeneratedCorpus gen = build_protocol(params);
  write_corpus(gen, out_dir, workers);
  return gen;
}

LoadedCorpus load_corpus(const fs::path& dir, int workers) {
  const fs::path proto = dir / kProtocolFile;
  if (!fs::exists(proto)) throw DataError("missing protocol file " + proto.string());
  LoadedCorpus out;
  out.protocol = parse_protocol(read_text_file(proto), proto.string());
  std::vector<Signal> signals(out.protocol.entries.size());
  parallel_for(signals.size(), workers,
               [&](std::size_t i) { signals[i] = read_wav(dir / out.protocol.entries[i].path); });
  for (std::size_t i = 0; i < signals.size(); ++i) {
    const auto& id = out.protocol.entries[i].utterance_id;
    if (out.corpus.contains(id)) throw DataError(proto.string() + ": utterance id '" + id + "' listed twice");
    out.corpus.add(id, std::move(signals[i]));
  }
  return out;
}

std::string CellJob::name() const { return cell.label() + "/" + speaker_id + "_" + attack_id; }

std::uint64_t CellJob::seed(std::uint64_t global_seed) const {
  return mix_seed(global_seed, fnv1a(speaker_id + "/" + attack_id + "/" + cell.label()));
}

std::vector<CellJob> enumerate_jobs(const std::vector<GridCell>& grid, const TrialProtocol& protocol) {
  std::vector<CellJob> jobs;
  const auto speakers = protocol.speakers();
  const auto attacks = protocol.attacks();
  for (const auto& cell : grid)
    for (const auto& spk : speakers)
      for (const auto& att : attacks)
        if (!protocol.select(Role::Spoof, spk, att).empty()) jobs.push_back({cell, spk, att});
  return jobs;
}

CellOutcome train_cell(const ExperimentConfig& config, const TrialProtocol& protocol, const Corpus& corpus,
                       const CellJob& job) {
  const auto enrol = collect(corpus, protocol, Role::Enrol, job.speaker_id);
  const auto target = collect(corpus, protocol, Role::Target, job.speaker_id);
  const auto spoofs = collect(corpus, protocol, Role::Spoof, job.speaker_id, job.attack_id);
  if (enrol.empty()) throw DataError(job.name() + ": speaker has no enrolment utterances");
  if (target.empty()) throw DataError(job.name() + ": speaker has no target utterances");
  if (spoofs.empty()) throw DataError(job.name() + ": no spoofed utterances");

  const Embedder fa(config.fa);
  std::vector<Embedding> enrol_emb;
  for (const auto& s : enrol) enrol_emb.push_back(fa.extract(s));
  const Embedding enrol_avg = average_enrolment(enrol_emb);

  TrainingConfig tc = config.training;
  tc.branches = job.cell.branches;
  tc.length = job.cell.length;
  tc.seed = job.seed(config.seed);

  CellOutcome out;
  out.checkpoints = train_filter(spoofs, enrol_avg, tc, config.fa);
  out.selection = select_best(out.checkpoints, spoofs, target, enrol, config.fb);
  out.file.speaker_id = job.speaker_id;
  out.file.attack_id = job.attack_id;
  out.file.selected_epoch = out.selection.checkpoint.epoch;
  out.file.fa_hash = config.fa.hash();
  out.file.fb_hash = config.fb.hash();
  out.file.filter = out.selection.checkpoint.filter;
  return out;
}

fs::path filter_path(const fs::path& run_dir, const CellJob& job) {
  return run_dir / "filters" / job.cell.label() / (job.speaker_id + "_" + job.attack_id + ".mcf");
}

TrainSummary train_grid(const ExperimentConfig& config, const LoadedCorpus& data, bool skip_existing,
                        const LogFn& log) {
  config.validate();
  const auto jobs = enumerate_jobs(config.grid, data.protocol);
  for (const auto& cell : config.grid) {
    ensure_dir(config.output_dir / "filters" / cell.label());
    ensure_dir(config.output_dir / "diagnostics" / cell.label());
  }

  TrainSummary summary;
  std::mutex mu;
  std::vector<std::string> failures(jobs.size());
  parallel_for(jobs.size(), config.workers, [&](std::size_t i) {
    const CellJob& job = jobs[i];
    const fs::path fp = filter_path(config.output_dir, job);
    if (skip_existing && fs::exists(fp)) {
      std::lock_guard lock(mu);
      ++summary.skipped;
      if (log) log("skip " + job.name());
      return;
    }
    try {
      const CellOutcome out = train_cell(config, data.protocol, data.corpus, job);
      const fs::path diag = config.output_dir / "diagnostics" / job.cell.label();
      const std::string stem = job.speaker_id + "_" + job.attack_id;
      write_text_file(diag / (stem + ".loss"), format_training_curve(out.checkpoints));
      write_text_file(diag / (stem + ".select"), format_selection(out.selection.diagnostics));
      // The filter goes last so that its presence marks a completed cell.
      const fs::path tmp = fp.string() + ".tmp";
      write_filter_file(tmp, out.file);
      fs::rename(tmp, fp);
      std::lock_guard lock(mu);
      ++summary.trained;
      if (log)
        log("trained " + job.name() + " epoch " + std::to_string(out.file.selected_epoch) + " loss " +
            format_double(out.checkpoints.back().mean_loss));
    } catch (const std::exception& e) {
      failures[i] = job.name() + ": " + e.what();
      std::lock_guard lock(mu);
      if (log) log("FAILED " + failures[i]);
    }
  });
  for (auto& f : failures)
    if (!f.empty()) summary.failures.push_back(std::move(f));
  return summary;
}

FilterMap load_filters(const ExperimentConfig& config, const GridCell& cell, std::vector<std::string>* warnings) {
  FilterMap filters;
  const fs::path dir = config.output_dir / "filters" / cell.label();
  if (!fs::is_directory(dir)) return filters;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".mcf") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    FilterFile f = read_filter_file(p);
    if (f.filter.length() != cell.length || f.filter.branches() != cell.branches)
      throw DataError(p.string() + ": filter shape does not match grid cell " + cell.label());
    if (warnings && (f.fa_hash != config.fa.hash() || f.fb_hash != config.fb.hash()))
      warnings->push_back(p.string() + ": embedder hashes differ from the current configuration");
    filters.emplace(std::make_pair(f.speaker_id, f.attack_id), std::move(f.filter));
  }
  return filters;
}

void apply_filter(const fs::path& filter_file, const fs::path& in_wav, const fs::path& out_wav) {
  const FilterFile f = read_filter_file(filter_file);
  const auto bytes = read_file_bytes(in_wav);
  const WavInfo info = probe_wav(bytes, in_wav.string());
  if (info.channels != 1)
    throw DataError(in_wav.string() + ": expected mono audio, found " + std::to_string(info.channels) + " channels");
  const Signal x = decode_wav(bytes, in_wav.string());
  if (x.sample_rate() != 16000)
    throw DataError(in_wav.string() + ": expected 16000 Hz audio, found " + std::to_string(x.sample_rate()) + " Hz");
  if (out_wav.has_parent_path()) ensure_dir(out_wav.parent_path());
  write_wav(out_wav, malacopula_apply(x, f.filter));
}

std::vector<EvalReport> score_conditions(const ExperimentConfig& config, const LoadedCorpus& data, EmbedderRole role,
                                         bool filtered, std::vector<std::string>* warnings) {
  const EmbedderConfig& emb = config.embedder(role);
  std::vector<std::string> conditions = {"baseline"};
  std::vector<FilterMap> maps(1);
  if (filtered) {
    for (const auto& cell : config.grid) {
      FilterMap m = load_filters(config, cell, warnings);
      if (m.empty())
        throw DataError("--filtered: no filter files for grid cell " + cell.label() + " under " +
                        (config.output_dir / "filters" / cell.label()).string());
      conditions.push_back(cell.label());
      maps.push_back(std::move(m));
    }
  }
  const fs::path score_dir = config.output_dir / "scores" / role_key(role);
  const fs::path report_dir = config.output_dir / "reports" / role_key(role);
  ensure_dir(score_dir);
  ensure_dir(report_dir);

  std::vector<EvalReport> reports(conditions.size());
  parallel_for(conditions.size(), config.workers, [&](std::size_t i) {
    reports[i] = evaluate_protocol(data.protocol, data.corpus, emb, i == 0 ? nullptr : &maps[i], conditions[i]);
    write_text_file(score_dir / (conditions[i] + ".scores"), format_scores(reports[i].trials));
    write_text_file(report_dir / (conditions[i] + ".report"), format_report(reports[i], emb.describe()));
  });
  return reports;
}

ReportTable build_report(const fs::path& run_dir, EmbedderRole role) {
  const fs::path dir = run_dir / "scores" / role_key(role);
  if (!fs::is_directory(dir)) throw DataError("missing inputs: score directory " + dir.string());
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".scores") files.emplace_back(e.path().stem().string(), e.path());
  if (files.empty()) throw DataError("missing inputs: no .scores files in " + dir.string());

  auto rank = [](const std::string& name) {
    GridCell c;
    if (name == "baseline") return std::make_tuple(0, std::size_t{0}, std::size_t{0}, name);
    if (parse_label(name, c)) return std::make_tuple(1, c.length, c.branches, name);
    return std::make_tuple(2, std::size_t{0}, std::size_t{0}, name);
  };
  std::sort(files.begin(), files.end(), [&](const auto& a, const auto& b) { return rank(a.first) < rank(b.first); });

  ReportTable table;
  std::vector<std::string> attacks;
  for (const auto& [name, path] : files) {
    table.rows.push_back(summarize_trials(parse_scores(read_text_file(path), path.string()), name));
    for (const auto& [att, r] : table.rows.back().per_attack)
      if (std::find(attacks.begin(), attacks.end(), att) == attacks.end()) attacks.push_back(att);
  }
  std::sort(attacks.begin(), attacks.end());

  const EvalReport* baseline = table.rows.front().condition == "baseline" ? &table.rows.front() : nullptr;
  std::ostringstream text, plot;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-12s %10s %10s", "condition", "pooled%", "gain_pp");
  text << buf;
  for (const auto& a : attacks) {
    std::snprintf(buf, sizeof buf, " %8s", a.c_str());
    text << buf;
  }
  text << '\n';
  plot << "# condition attack eer\n";
  for (const auto& r : table.rows) {
    const std::string gain = baseline && &r != baseline ? percent(r.pooled_eer - baseline->pooled_eer) : "-";
    std::snprintf(buf, sizeof buf, "%-12s %10s %10s", r.condition.c_str(), percent(r.pooled_eer).c_str(),
                  gain.c_str());
    text << buf;
    plot << r.condition << " pooled " << format_double(r.pooled_eer) << '\n';
    for (const auto& a : attacks) {
      auto it = r.per_attack.find(a);
      std::snprintf(buf, sizeof buf, " %8s", it == r.per_attack.end() ? "-" : percent(it->second.eer).c_str());
      text << buf;
      if (it != r.per_attack.end()) plot << r.condition << ' ' << a << ' ' << format_double(it->second.eer) << '\n';
    }
    text << '\n';
  }
  table.text = text.str();
  table.plot_data = plot.str();
  return table;
}

}  // namespace malacopula
