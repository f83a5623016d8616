// genreforge command-line entry point.
//
// Exit codes: 0 ok, 1 I/O, 2 config or schema, 3 internal invariant violation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "genreforge/autoencoder.hpp"
#include "genreforge/dataset.hpp"
#include "genreforge/error.hpp"
#include "genreforge/pipeline.hpp"
#include "genreforge/selection.hpp"
#include "genreforge/svm.hpp"
#include "genreforge/synthetic.hpp"

namespace fs = std::filesystem;
using namespace genreforge;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string input;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;  // overrides the config when given
  std::string stage;
  int verbosity = 1;  // 0 quiet, 1 progress, 2 verbose
  bool synthetic_features = false;
};

void log(const Options& o, int level, const std::string& msg) {
  if (o.verbosity >= level) std::cerr << msg << '\n';
}

// Deletes declared outputs unless the command reaches commit().
class OutputGuard {
 public:
  void claim(const fs::path& p) {
    std::error_code ec;
    if (!fs::exists(p, ec)) created_.push_back(p);
  }
  void commit() { created_.clear(); }
  ~OutputGuard() {
    for (auto it = created_.rbegin(); it != created_.rend(); ++it) {
      std::error_code ec;
      fs::remove_all(*it, ec);
    }
  }

 private:
  std::vector<fs::path> created_;
};

ExperimentConfig load_or_default(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.jobs) cfg.jobs = *o.jobs;
  return cfg;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) fail(ErrorCode::Io, std::string("no ") + what + " given");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) fail(ErrorCode::Io, std::string(what) + " not found: " + path);
}

std::string data_root(const Options& o) {
  if (!o.input.empty()) return o.input;
  if (const char* env = std::getenv("GENREFORGE_DATA")) return env;
  return {};
}

// Output directory for multi-file commands; each file written inside is claimed.
fs::path prepare_dir(const Options& o, OutputGuard& guard) {
  if (o.out.empty()) fail(ErrorCode::Io, "--out is required");
  const fs::path dir(o.out);
  guard.claim(dir);
  fs::create_directories(dir);
  return dir;
}

int cmd_extract(const Options& o) {
  const std::string root = data_root(o);
  if (root.empty()) fail(ErrorCode::Io, "no dataset directory (use --input or GENREFORGE_DATA)");
  if (!fs::is_directory(root)) fail(ErrorCode::Io, "dataset directory not found: " + root);
  if (o.out.empty()) fail(ErrorCode::Io, "--out is required");
  const ExperimentConfig cfg = load_or_default(o);
  OutputGuard guard;
  guard.claim(o.out);
  const auto data = extract_directory(root, cfg.extraction, cfg.jobs,
                                      [&](const std::string& m) { log(o, 1, m); });
  write_feature_csv(o.out, data);
  guard.commit();
  log(o, 1, "wrote " + std::to_string(data.n_samples()) + " vectors to " + o.out);
  return 0;
}

int cmd_select(const Options& o) {
  require_file(o.input, "feature CSV");
  ExperimentConfig cfg = load_or_default(o);
  const LabeledDataset data = read_feature_csv(o.input);
  OutputGuard guard;
  const fs::path dir = prepare_dir(o, guard);
  ForestConfig fc = cfg.forest;
  fc.jobs = cfg.jobs;
  if (o.seed) fc.rng_seed = *o.seed;
  const SelectionReport report = train_forest(data, fc).report;
  guard.claim(dir / "selection.csv");
  write_selection_csv(dir / "selection.csv", report);
  guard.claim(dir / "features_selected.csv");
  write_feature_csv(dir / "features_selected.csv", apply_selection(data, report));
  guard.commit();
  log(o, 1, "retained " + std::to_string(report.retained_count) + " of " +
                std::to_string(report.component_names.size()) + " components");
  return 0;
}

int cmd_encode(const Options& o) {
  require_file(o.input, "feature CSV");
  ExperimentConfig cfg = load_or_default(o);
  const LabeledDataset data = read_feature_csv(o.input);
  OutputGuard guard;
  const fs::path dir = prepare_dir(o, guard);
  const ScalingParams scale = fit_minmax(data.features);
  const Eigen::MatrixXd x = apply_minmax(data.features, scale);
  const auto ae_cfg = cfg.autoencoder.for_input(data.n_features(), o.seed.value_or(1));
  const Autoencoder model = train_autoencoder(x, ae_cfg);
  const Eigen::MatrixXd codes = encode(model, x);

  LabeledDataset augmented = data;
  augmented.features.resize(x.rows(), x.cols() + codes.cols());
  augmented.features << x, codes;
  for (std::size_t k = 0; k < ae_cfg.code_dim(); ++k) {
    augmented.schema.components.push_back({"bottleneck", Statistic::Value, k});
  }
  guard.claim(dir / "scaling.csv");
  write_scaling_csv(dir / "scaling.csv", data.schema.names(), scale);
  guard.claim(dir / "autoencoder.gfae");
  save_autoencoder(dir / "autoencoder.gfae", model);
  guard.claim(dir / "features_encoded.csv");
  write_feature_csv(dir / "features_encoded.csv", augmented);
  guard.commit();
  const auto& h = model.loss_history();
  log(o, 1, "trained autoencoder: loss " + std::to_string(h.front()) + " -> " + std::to_string(h.back()));
  return 0;
}

int cmd_train_svm(const Options& o) {
  require_file(o.input, "feature CSV");
  ExperimentConfig cfg = load_or_default(o);
  const LabeledDataset data = read_feature_csv(o.input);
  OutputGuard guard;
  const fs::path dir = prepare_dir(o, guard);
  const ScalingParams scale = fit_minmax(data.features);
  LabeledDataset scaled = data;
  scaled.features = apply_minmax(data.features, scale);
  const GridSearchResult cv = grid_search_cv(scaled, cfg.svm, o.seed.value_or(1), cfg.jobs);
  const SvmModel model = train_svm(scaled, cv.best, cfg.jobs);
  guard.claim(dir / "scaling.csv");
  write_scaling_csv(dir / "scaling.csv", data.schema.names(), scale);
  guard.claim(dir / "cv.csv");
  write_cv_table(dir / "cv.csv", cv);
  guard.claim(dir / "svm.json");
  save_svm(dir / "svm.json", model);
  guard.commit();
  log(o, 1, "best " + to_string(cv.best.kernel) + " C=" + format_double(cv.best.C) +
                (cv.best.kernel.kind == KernelKind::Rbf ? " gamma=" + format_double(cv.best.kernel.gamma) : "") +
                " cv accuracy " + format_double(cv.best_accuracy));
  return 0;
}

int cmd_run(const Options& o) {
  ExperimentConfig cfg = load_or_default(o);
  if (!o.input.empty()) {
    cfg.data.path = o.input;
    if (cfg.data.kind == SourceKind::Synthetic) cfg.data.kind = SourceKind::WavDirectory;
    std::error_code ec;
    if (fs::is_regular_file(cfg.data.path, ec)) cfg.data.kind = SourceKind::FeatureCsv;
    if (fs::is_directory(cfg.data.path, ec)) cfg.data.kind = SourceKind::WavDirectory;
  }
  if (cfg.data.kind == SourceKind::WavDirectory && cfg.data.path.empty()) cfg.data.path = data_root(o);
  if (cfg.data.kind != SourceKind::Synthetic) {
    std::error_code ec;
    if (cfg.data.path.empty() || !fs::exists(cfg.data.path, ec)) {
      fail(ErrorCode::Io, "dataset not found: " + cfg.data.path.string());
    }
  }
  if (o.seed) {
    cfg.seeds.clear();
    for (std::size_t r = 0; r < cfg.n_repetitions; ++r) cfg.seeds.push_back(*o.seed + r);
  }
  if (!o.stage.empty()) cfg.stages = {parse_stage(o.stage)};
  cfg.validate();
  log(o, 2, config_to_json(cfg));

  OutputGuard guard;
  fs::path dir;
  if (!o.out.empty()) {
    dir = o.out;
    guard.claim(dir);
    guard.claim(dir / "report.csv");
    guard.claim(dir / "summary.txt");
    guard.claim(dir / "config.json");
    for (std::size_t r = 1; r <= cfg.n_repetitions; ++r) {
      char name[32];
      std::snprintf(name, sizeof name, "rep_%02zu", r);
      guard.claim(dir / name);
    }
  }
  const auto report = run_experiment(cfg, dir, [&](const std::string& m) { log(o, 1, m); });
  guard.commit();
  if (o.verbosity >= 0) std::cout << format_summary(report);
  return 0;
}

int cmd_report(const Options& o) {
  if (o.input.empty()) fail(ErrorCode::Io, "--input is required");
  fs::path p(o.input);
  if (fs::is_directory(p)) p /= "report.csv";
  if (!fs::is_regular_file(p)) fail(ErrorCode::Io, "report not found: " + p.string());
  std::cout << summarize_report_csv(p);
  return 0;
}

int cmd_synth(const Options& o) {
  if (o.out.empty()) fail(ErrorCode::Io, "--out is required");
  OutputGuard guard;
  guard.claim(o.out);
  if (o.synthetic_features) {
    SyntheticFeatureConfig sc = load_or_default(o).data.synthetic;
    if (o.seed) sc.seed = *o.seed;
    write_feature_csv(o.out, make_synthetic_features(sc).data);
  } else {
    SyntheticAudioConfig ac;
    if (o.seed) ac.seed = *o.seed;
    const auto files = write_synthetic_corpus(o.out, ac);
    log(o, 1, "wrote " + std::to_string(files.size()) + " clips under " + o.out);
  }
  guard.commit();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Music genre classification pipeline: extraction, IG selection, autoencoder codes, SVM"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Options o;
  bool verbose = false, quiet = false;
  app.add_option("--config", o.config, "JSON experiment config");
  app.add_option("--jobs", o.jobs, "Worker threads (0: all cores)");
  app.add_option("--seed", o.seed, "Seed override");
  app.add_flag("-v,--verbose", verbose, "Verbose logging");
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  auto* extract = app.add_subcommand("extract", "WAV class directories to a content-feature CSV");
  extract->add_option("--input", o.input, "Dataset root (default: $GENREFORGE_DATA)");
  extract->add_option("--out", o.out, "Output CSV")->required();

  auto* select = app.add_subcommand("select", "IG selection over a feature CSV");
  select->add_option("--input", o.input, "Feature CSV")->required();
  select->add_option("--out", o.out, "Output directory")->required();

  auto* enc = app.add_subcommand("encode", "Train an autoencoder and append bottleneck codes");
  enc->add_option("--input", o.input, "Feature CSV")->required();
  enc->add_option("--out", o.out, "Output directory")->required();

  auto* svm = app.add_subcommand("train-svm", "Grid-searched SVM over a feature CSV");
  svm->add_option("--input", o.input, "Feature CSV")->required();
  svm->add_option("--out", o.out, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Full repeated-split experiment");
  run->add_option("--input", o.input, "Dataset path, overriding the config");
  run->add_option("--out", o.out, "Report directory");
  run->add_option("--stage", o.stage, "Run a single stage")
      ->check(CLI::IsMember({"content_only", "selected", "selected_plus_bottleneck"}));

  auto* report = app.add_subcommand("report", "Summarise a report.csv");
  report->add_option("--input", o.input, "report.csv or its directory")->required();

  auto* synth = app.add_subcommand("synth", "Write a synthetic WAV corpus or feature CSV");
  synth->add_option("--out", o.out, "Output directory (or CSV with --features)")->required();
  synth->add_flag("--features", o.synthetic_features, "Write synthetic content vectors instead of audio");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  o.verbosity = quiet ? 0 : (verbose ? 2 : 1);

  try {
    if (extract->parsed()) return cmd_extract(o);
    if (select->parsed()) return cmd_select(o);
    if (enc->parsed()) return cmd_encode(o);
    if (svm->parsed()) return cmd_train_svm(o);
    if (run->parsed()) return cmd_run(o);
    if (report->parsed()) return cmd_report(o);
    if (synth->parsed()) return cmd_synth(o);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return static_cast<int>(category(e.code()));
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error [Io]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 3;
}
