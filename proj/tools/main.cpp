// malacopula: corpus generation, filter training, scoring and reporting.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "malacopula/config.hpp"
#include "malacopula/errors.hpp"
#include "malacopula/pipeline.hpp"

namespace fs = std::filesystem;
using namespace malacopula;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string corpus_dir;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::string grid;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_grid) {
  cmd->add_option("-c,--config", o.config_path, "experiment config file");
  cmd->add_option("--corpus", o.corpus_dir, "corpus directory (overrides config)");
  cmd->add_option("-o,--out", o.output_dir, "run/output directory (overrides config)");
  cmd->add_option("--seed", o.seed, "global seed (overrides config)");
  cmd->add_option("-j,--workers", o.workers, "worker threads (default: $MALACOPULA_WORKERS or 1)")
      ->check(CLI::PositiveNumber);
  if (with_grid) cmd->add_option("--grid", o.grid, "filter grid, e.g. 257x1,257x3,257x5");
}

ExperimentConfig resolve_config(const CommonOptions& o) {
  const int env_workers = default_workers(0);
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_experiment_config(o.config_path, env_workers);
  if (o.config_path.empty() && env_workers > 0) cfg.workers = env_workers;
  if (!o.corpus_dir.empty()) cfg.corpus_dir = o.corpus_dir;
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (o.seed) cfg.seed = *o.seed;
  if (!o.grid.empty()) cfg.grid = parse_grid(o.grid);
  if (o.workers > 0) cfg.workers = o.workers;
  cfg.validate();
  return cfg;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

std::vector<EmbedderRole> parse_roles(const std::string& s) {
  if (s == "all") return {EmbedderRole::Evaluation, EmbedderRole::Training, EmbedderRole::Selection};
  return {parse_embedder_role(s)};
}

int run(int argc, char** argv) {
  CLI::App app{"Malacopula filter training and spoofing evaluation toolkit"};
  app.require_subcommand(1);

  CommonOptions gen_o, train_o, score_o, report_o, print_o;

  auto* gen = app.add_subcommand("gen-corpus", "generate the synthetic corpus (WAV files + protocol.txt)");
  add_common(gen, gen_o, false);

  auto* train = app.add_subcommand("train", "train and select one filter per (speaker, attack, L, K)");
  add_common(train, train_o, true);
  bool skip_existing = false;
  train->add_flag("--skip-existing", skip_existing, "keep filters already present in the run directory");

  std::string filter_file, in_wav, out_wav;
  auto* apply = app.add_subcommand("apply", "filter one WAV file");
  apply->add_option("filter", filter_file, "filter file (.mcf)")->required();
  apply->add_option("input", in_wav, "input WAV (PCM16 mono)")->required();
  apply->add_option("output", out_wav, "output WAV")->required();

  auto* score = app.add_subcommand("score", "score baseline and filtered trials, write score files and reports");
  add_common(score, score_o, true);
  bool filtered = false;
  std::string score_role = "ftest";
  score->add_flag("--filtered", filtered, "also score every grid cell with its trained filters");
  score->add_option("--embedder", score_role, "fa, fb, ftest or all")->check(CLI::IsMember({"fa", "fb", "ftest", "all"}));

  auto* report = app.add_subcommand("report", "summarise score files as a table and per-attack plot data");
  add_common(report, report_o, false);
  std::string report_role = "ftest";
  report->add_option("--embedder", report_role, "fa, fb or ftest")->check(CLI::IsMember({"fa", "fb", "ftest"}));

  auto* print = app.add_subcommand("print-config", "print the effective configuration");
  add_common(print, print_o, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*gen) {
    ExperimentConfig cfg = resolve_config(gen_o);
    if (gen_o.seed) cfg.corpus.seed = *gen_o.seed;
    const GeneratedCorpus c = gen_corpus(cfg.corpus, cfg.corpus_dir, cfg.workers);
    print_warnings(c.warnings);
    std::cout << "wrote " << c.protocol.entries.size() << " utterances to " << cfg.corpus_dir.string() << '\n';
  } else if (*train) {
    const ExperimentConfig cfg = resolve_config(train_o);
    const LoadedCorpus data = load_corpus(cfg.corpus_dir, cfg.workers);
    const TrainSummary s = train_grid(cfg, data, skip_existing, [](const std::string& line) {
      std::cerr << line << '\n';
    });
    std::cout << "trained " << s.trained << ", skipped " << s.skipped << ", failed " << s.failures.size() << '\n';
    if (!s.failures.empty()) {
      for (const auto& f : s.failures) std::cerr << "error: " << f << '\n';
      return 3;
    }
  } else if (*apply) {
    apply_filter(filter_file, in_wav, out_wav);
  } else if (*score) {
    const ExperimentConfig cfg = resolve_config(score_o);
    const LoadedCorpus data = load_corpus(cfg.corpus_dir, cfg.workers);
    std::vector<std::string> warnings;
    for (EmbedderRole role : parse_roles(score_role)) {
      for (const auto& r : score_conditions(cfg, data, role, filtered, &warnings))
        std::cout << role_key(role) << ' ' << r.condition << " pooled_eer " << r.pooled_eer << '\n';
    }
    print_warnings(warnings);
  } else if (*report) {
    const ExperimentConfig cfg = resolve_config(report_o);
    const EmbedderRole role = parse_embedder_role(report_role);
    const ReportTable t = build_report(cfg.output_dir, role);
    const fs::path plot = cfg.output_dir / "reports" / role_key(role) / "per_attack.dat";
    fs::create_directories(plot.parent_path());
    write_text_file(plot, t.plot_data);
    std::cout << t.text;
  } else if (*print) {
    std::cout << format_experiment_config(resolve_config(print_o));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 1;
  } catch (const ComputeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
