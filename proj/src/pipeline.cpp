#include "genreforge/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>

#include "genreforge/audio.hpp"
#include "genreforge/error.hpp"
#include "genreforge/parallel.hpp"

namespace genreforge {

namespace fs = std::filesystem;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::ContentOnly: return "content_only";
    case Stage::Selected: return "selected";
    case Stage::SelectedPlusBottleneck: return "selected_plus_bottleneck";
  }
  return "?";
}

Stage parse_stage(std::string_view s) {
  for (Stage st : all_stages()) {
    if (to_string(st) == s) return st;
  }
  fail(ErrorCode::InvalidConfig, "unknown stage '" + std::string(s) + "'");
}

FramingConfig ExtractionConfig::framing() const {
  return make_framing(kCanonicalSampleRate, frame_ms, frame_overlap, window_s, window_overlap);
}

AutoencoderConfig AutoencoderSettings::for_input(std::size_t input_dim, std::uint64_t seed) const {
  AutoencoderConfig cfg = AutoencoderConfig::standard(input_dim, hidden, code, dropout);
  cfg.epochs = epochs;
  cfg.batch_size = batch_size;
  cfg.optimizer = optimizer;
  cfg.rng_seed = seed;
  return cfg;
}

std::vector<std::uint64_t> ExperimentConfig::repetition_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out(n_repetitions);
  std::iota(out.begin(), out.end(), std::uint64_t{1});
  return out;
}

void ExperimentConfig::validate() const {
  if (n_repetitions == 0) fail(ErrorCode::InvalidConfig, "n_repetitions must be at least 1");
  if (!seeds.empty() && seeds.size() != n_repetitions) {
    fail(ErrorCode::InvalidConfig, "seeds must list one value per repetition");
  }
  if (train_size == 0 || test_size == 0) fail(ErrorCode::InvalidConfig, "train and test sizes must be positive");
  if (stages.empty()) fail(ErrorCode::InvalidConfig, "no stages requested");
  if (forest.n_trees == 0) fail(ErrorCode::InvalidConfig, "forest.n_trees must be at least 1");
  if (svm.folds < 2) fail(ErrorCode::InvalidConfig, "svm.folds must be at least 2");
  if (svm.c_values.empty() || svm.kernels.empty()) fail(ErrorCode::InvalidConfig, "empty SVM grid");
  if (autoencoder.code == 0 || autoencoder.hidden == 0 || autoencoder.epochs == 0 ||
      autoencoder.batch_size == 0) {
    fail(ErrorCode::InvalidConfig, "autoencoder sizes must be positive");
  }
  if (!(autoencoder.dropout >= 0.0 && autoencoder.dropout < 1.0)) {
    fail(ErrorCode::InvalidConfig, "autoencoder.dropout must lie in [0, 1)");
  }
  (void)extraction.framing();
}

TrainTestSplit stratified_split(const LabeledDataset& data, std::size_t train_size, std::uint64_t seed) {
  const std::size_t n = data.n_samples();
  if (train_size == 0 || train_size >= n) {
    fail(ErrorCode::IndivisibleSplit, "train size " + std::to_string(train_size) + " of " + std::to_string(n));
  }
  std::vector<std::vector<std::size_t>> by_class(data.n_classes());
  for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
  std::mt19937_64 rng(seed);
  TrainTestSplit split;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if ((train_size * members.size()) % n != 0) {
      fail(ErrorCode::IndivisibleSplit, "class '" + data.class_names[c] + "' with " +
                                            std::to_string(members.size()) + " samples cannot take a " +
                                            std::to_string(train_size) + "/" + std::to_string(n) + " share");
    }
    const std::size_t k = train_size * members.size() / n;
    std::shuffle(members.begin(), members.end(), rng);
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(k));
    split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(k), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

ScalingParams fit_minmax(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) fail(ErrorCode::EmptySet, "cannot fit scaling on zero rows");
  return {rows.colwise().minCoeff().transpose(), rows.colwise().maxCoeff().transpose()};
}

Eigen::VectorXd apply_minmax(const Eigen::VectorXd& v, const ScalingParams& p) {
  if (v.size() != p.min.size()) fail(ErrorCode::DimensionMismatch, "scaling width mismatch");
  Eigen::VectorXd out(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double range = p.max(j) - p.min(j);
    out(j) = range > 0.0 ? std::clamp((v(j) - p.min(j)) / range, 0.0, 1.0) : 0.0;
  }
  return out;
}

Eigen::MatrixXd apply_minmax(const Eigen::MatrixXd& rows, const ScalingParams& p) {
  if (rows.cols() != p.min.size()) fail(ErrorCode::DimensionMismatch, "scaling width mismatch");
  Eigen::MatrixXd out(rows.rows(), rows.cols());
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    out.row(r) = apply_minmax(Eigen::VectorXd(rows.row(r).transpose()), p).transpose();
  }
  return out;
}

void write_scaling_csv(const fs::path& path, const std::vector<std::string>& names, const ScalingParams& p) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "component,min,max\n";
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto e = static_cast<Eigen::Index>(j);
    out << names[j] << ',' << format_double(p.min(e)) << ',' << format_double(p.max(e)) << '\n';
  }
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finaliser over (base, stream).
  std::uint64_t z = base * 0x9E3779B97F4A7C15ULL + stream + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

enum : std::uint64_t { kForestStream = 1, kAutoencoderStream = 2, kCvStream = 3 };

Eigen::MatrixXd vstack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

Eigen::MatrixXd hstack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

ScalingParams fit_scaling(const Eigen::MatrixXd& train, const Eigen::MatrixXd& test, bool whole) {
  return whole ? fit_minmax(vstack(train, test)) : fit_minmax(train);
}

LabeledDataset with_features(const LabeledDataset& like, Eigen::MatrixXd features, FeatureSchema schema) {
  LabeledDataset d;
  d.schema = std::move(schema);
  d.features = std::move(features);
  d.labels = like.labels;
  d.class_names = like.class_names;
  d.track_ids = like.track_ids;
  return d;
}

void write_predictions(const fs::path& path, const LabeledDataset& test, const std::vector<int>& pred) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "track_id,label,predicted\n";
  for (std::size_t i = 0; i < pred.size(); ++i) {
    out << test.track_ids[i] << ',' << test.class_names[static_cast<std::size_t>(test.labels[i])] << ','
        << test.class_names[static_cast<std::size_t>(pred[i])] << '\n';
  }
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

void write_split(const fs::path& path, const LabeledDataset& data, const TrainTestSplit& split) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "track_id,label,partition\n";
  std::vector<char> is_train(data.n_samples(), 0);
  for (std::size_t i : split.train) is_train[i] = 1;
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    out << data.track_ids[i] << ',' << data.class_names[static_cast<std::size_t>(data.labels[i])] << ','
        << (is_train[i] ? "train" : "test") << '\n';
  }
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

FeatureSchema stage_schema(Stage stage, const SelectionReport* selection, std::size_t code_dim) {
  if (stage == Stage::ContentOnly) return content_schema();
  if (selection == nullptr) fail(ErrorCode::Internal, "selected stages need a selection report");
  const auto mask = selection->mask();
  const std::unique_ptr<bool[]> keep(new bool[mask.size()]);
  std::copy(mask.begin(), mask.end(), keep.get());
  FeatureSchema schema = content_schema().project(std::span<const bool>(keep.get(), mask.size()));
  if (stage == Stage::SelectedPlusBottleneck) {
    for (std::size_t k = 0; k < code_dim; ++k) {
      schema.components.push_back({"bottleneck", Statistic::Value, k});
    }
  }
  return schema;
}

StageResult run_stage(Stage stage, const LabeledDataset& train, const LabeledDataset& test,
                      const ExperimentConfig& cfg, RepetitionContext& ctx, const fs::path& artifact_dir) {
  if (!(train.schema == test.schema) || train.class_names != test.class_names) {
    fail(ErrorCode::SchemaMismatch, "train and test folds disagree on schema or classes");
  }
  const bool persist = !artifact_dir.empty();
  if (persist) fs::create_directories(artifact_dir);
  const std::string tag(to_string(stage));

  Eigen::MatrixXd xtr = train.features;
  Eigen::MatrixXd xte = test.features;
  FeatureSchema schema = train.schema;

  if (stage != Stage::ContentOnly) {
    if (!(train.schema == content_schema())) {
      fail(ErrorCode::SchemaMismatch, "selection stages require the content schema");
    }
    if (!ctx.selection) {
      ForestConfig fc = cfg.forest;
      fc.rng_seed = derive_seed(ctx.seed, kForestStream);
      fc.jobs = cfg.jobs;
      ctx.selection = train_forest(train, fc).report;
      if (persist) write_selection_csv(artifact_dir / "selection.csv", *ctx.selection);
    }
    if (ctx.selection->retained_count == 0) {
      fail(ErrorCode::DegenerateDataset, "selection retained no components");
    }
    const LabeledDataset sel_train = apply_selection(train, *ctx.selection);
    xtr = sel_train.features;
    xte = apply_selection(test, *ctx.selection).features;
    schema = sel_train.schema;

    if (stage == Stage::SelectedPlusBottleneck) {
      const ScalingParams ae_scale = fit_scaling(xtr, xte, cfg.scale_whole_dataset);
      if (persist) write_scaling_csv(artifact_dir / "scaling_autoencoder_input.csv", schema.names(), ae_scale);
      xtr = apply_minmax(xtr, ae_scale);
      xte = apply_minmax(xte, ae_scale);
      if (!ctx.autoencoder) {
        const auto ae_cfg = cfg.autoencoder.for_input(static_cast<std::size_t>(xtr.cols()),
                                                      derive_seed(ctx.seed, kAutoencoderStream));
        ctx.autoencoder = train_autoencoder(xtr, ae_cfg);
        if (persist) save_autoencoder(artifact_dir / "autoencoder.gfae", *ctx.autoencoder);
      }
      if (static_cast<Eigen::Index>(ctx.autoencoder->config().input_dim()) != xtr.cols()) {
        fail(ErrorCode::DimensionMismatch, "cached autoencoder does not match the selected width");
      }
      const auto code_dim = ctx.autoencoder->config().code_dim();
      xtr = hstack(xtr, encode(*ctx.autoencoder, xtr));
      xte = hstack(xte, encode(*ctx.autoencoder, xte));
      schema = stage_schema(Stage::SelectedPlusBottleneck, &*ctx.selection, code_dim);
    }
  }

  const ScalingParams scale = fit_scaling(xtr, xte, cfg.scale_whole_dataset);
  if (persist) write_scaling_csv(artifact_dir / ("scaling_" + tag + ".csv"), schema.names(), scale);
  const LabeledDataset strain = with_features(train, apply_minmax(xtr, scale), schema);
  const Eigen::MatrixXd ste = apply_minmax(xte, scale);

  const GridSearchResult cv = grid_search_cv(strain, cfg.svm, derive_seed(ctx.seed, kCvStream), cfg.jobs);
  const SvmModel model = train_svm(strain, cv.best, cfg.jobs);
  if (persist) {
    write_cv_table(artifact_dir / ("cv_" + tag + ".csv"), cv);
    save_svm(artifact_dir / ("svm_" + tag + ".json"), model);
  }

  StageResult r;
  r.stage = stage;
  r.dimension = schema.size();
  r.chosen = cv.best;
  r.cv_accuracy = cv.best_accuracy;
  r.predictions = model.predict(ste);
  const auto k = static_cast<Eigen::Index>(train.n_classes());
  r.confusion = Eigen::MatrixXi::Zero(k, k);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < r.predictions.size(); ++i) {
    ++r.confusion(test.labels[i], r.predictions[i]);
    if (r.predictions[i] == test.labels[i]) ++correct;
  }
  r.accuracy = r.predictions.empty() ? 0.0
                                     : static_cast<double>(correct) / static_cast<double>(r.predictions.size());
  if (persist) write_predictions(artifact_dir / ("predictions_" + tag + ".csv"), test, r.predictions);
  return r;
}

LabeledDataset extract_directory(const fs::path& root, const ExtractionConfig& cfg, std::size_t jobs,
                                 const ProgressFn& progress) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) fail(ErrorCode::Io, "dataset directory not found: " + root.string());
  struct Item {
    fs::path path;
    std::string label;
  };
  std::vector<Item> items;
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  for (const auto& dir : class_dirs) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
      if (entry.is_regular_file() && ext == ".wav") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (auto& f : files) items.push_back({std::move(f), dir.filename().string()});
  }
  if (items.empty()) fail(ErrorCode::Io, "no WAV files under " + root.string());

  const FramingConfig framing = cfg.framing();
  std::vector<FeatureVector> vectors(items.size());
  std::mutex progress_mutex;
  std::size_t done = 0;
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    try {
      AudioClip clip = load_wav(items[i].path);
      clip.label = items[i].label;
      clip.source_id = items[i].label + "/" + items[i].path.filename().string();
      vectors[i] = build_feature_vector(clip, framing, cfg.dsp, cfg.beat);
      vectors[i].track_id = clip.source_id;
      vectors[i].label = items[i].label;
    } catch (const Error& e) {
      throw Error(e.code(), items[i].path.string() + ": " + e.what());
    }
    if (progress) {
      std::lock_guard lock(progress_mutex);
      ++done;
      progress("extracted " + std::to_string(done) + "/" + std::to_string(items.size()) + " " +
               items[i].label + "/" + items[i].path.filename().string());
    }
  });
  return make_dataset(vectors, content_schema());
}

LabeledDataset load_dataset(const ExperimentConfig& cfg, const ProgressFn& progress) {
  switch (cfg.data.kind) {
    case SourceKind::Synthetic:
      return make_synthetic_features(cfg.data.synthetic).data;
    case SourceKind::FeatureCsv:
      if (cfg.data.path.empty()) fail(ErrorCode::Io, "no feature CSV configured");
      return read_feature_csv(cfg.data.path);
    case SourceKind::WavDirectory:
      if (cfg.data.path.empty()) fail(ErrorCode::Io, "no dataset directory configured");
      return extract_directory(cfg.data.path, cfg.extraction, cfg.jobs, progress);
  }
  fail(ErrorCode::Internal, "unknown data source");
}

std::vector<StageSummary> summarize(const std::vector<RepetitionResult>& reps, std::size_t n_classes) {
  std::vector<StageSummary> out;
  for (Stage st : all_stages()) {
    std::vector<double> acc;
    StageSummary s;
    s.stage = st;
    const auto k = static_cast<Eigen::Index>(n_classes);
    s.confusion = Eigen::MatrixXi::Zero(k, k);
    for (const auto& rep : reps) {
      for (const auto& r : rep.stages) {
        if (r.stage != st) continue;
        acc.push_back(r.accuracy);
        if (r.confusion.rows() == k) s.confusion += r.confusion;
      }
    }
    if (acc.empty()) continue;
    s.mean = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
    double ss = 0.0;
    for (double a : acc) ss += (a - s.mean) * (a - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(acc.size()));
    out.push_back(std::move(s));
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const LabeledDataset& data,
                                const fs::path& out_dir, const ProgressFn& progress) {
  cfg.validate();
  data.validate();
  if (cfg.train_size + cfg.test_size != data.n_samples()) {
    fail(ErrorCode::InvalidConfig, "train_size + test_size = " + std::to_string(cfg.train_size + cfg.test_size) +
                                       " but the dataset has " + std::to_string(data.n_samples()) + " tracks");
  }
  std::vector<Stage> stages;
  for (Stage st : all_stages()) {
    if (std::find(cfg.stages.begin(), cfg.stages.end(), st) != cfg.stages.end()) stages.push_back(st);
  }

  ExperimentReport report;
  report.config_json = config_to_json(cfg);
  report.class_names = data.class_names;
  const auto seeds = cfg.repetition_seeds();
  for (std::size_t rep = 0; rep < seeds.size(); ++rep) {
    RepetitionResult rr;
    rr.repetition = rep + 1;
    rr.seed = seeds[rep];
    char dir_name[32];
    std::snprintf(dir_name, sizeof dir_name, "rep_%02zu", rep + 1);
    const fs::path rep_dir = out_dir.empty() ? fs::path{} : out_dir / dir_name;
    RepetitionContext ctx;
    ctx.seed = seeds[rep];
    Stage current = stages.front();
    try {
      const TrainTestSplit split = stratified_split(data, cfg.train_size, seeds[rep]);
      const LabeledDataset train = data.subset(split.train);
      const LabeledDataset test = data.subset(split.test);
      if (!rep_dir.empty()) {
        fs::create_directories(rep_dir);
        write_split(rep_dir / "split.csv", data, split);
      }
      for (Stage st : stages) {
        current = st;
        rr.stages.push_back(run_stage(st, train, test, cfg, ctx, rep_dir));
        if (progress) {
          progress("repetition " + std::to_string(rep + 1) + "/" + std::to_string(seeds.size()) + " " +
                   std::string(to_string(st)) + " accuracy " + fixed(rr.stages.back().accuracy));
        }
      }
    } catch (const Error& e) {
      throw Error(e.code(), "repetition " + std::to_string(rep + 1) + " stage " +
                                std::string(to_string(current)) + ": " + e.what());
    }
    rr.retained_count = ctx.selection ? ctx.selection->retained_count : 0;
    report.repetitions.push_back(std::move(rr));
  }
  report.summaries = summarize(report.repetitions, data.n_classes());
  if (!out_dir.empty()) write_report(out_dir, report);
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir,
                                const ProgressFn& progress) {
  cfg.validate();
  return run_experiment(cfg, load_dataset(cfg, progress), out_dir, progress);
}

void write_report_csv(const fs::path& path, const ExperimentReport& report) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "repetition,seed,stage,accuracy,dimension,kernel,C,gamma,cv_accuracy\n";
  for (const auto& rep : report.repetitions) {
    for (const auto& r : rep.stages) {
      out << rep.repetition << ',' << rep.seed << ',' << to_string(r.stage) << ',' << format_double(r.accuracy)
          << ',' << r.dimension << ',' << to_string(r.chosen.kernel) << ',' << format_double(r.chosen.C) << ','
          << (r.chosen.kernel.kind == KernelKind::Rbf ? format_double(r.chosen.kernel.gamma) : std::string())
          << ',' << format_double(r.cv_accuracy) << '\n';
    }
  }
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

std::string format_summary(const ExperimentReport& report) {
  std::ostringstream s;
  s << "repetitions: " << report.repetitions.size() << '\n';
  s << "classes: " << report.class_names.size() << '\n';
  s << '\n' << "stage                      mean     sd       \n";
  for (const auto& sm : report.summaries) {
    std::string name(to_string(sm.stage));
    name.resize(26, ' ');
    s << name << ' ' << fixed(sm.mean) << "   " << fixed(sm.sd) << '\n';
  }
  bool any_selection = false;
  for (const auto& rep : report.repetitions) any_selection |= rep.retained_count > 0;
  if (any_selection) {
    s << "\nretained components:";
    for (const auto& rep : report.repetitions) s << ' ' << rep.retained_count;
    s << '\n';
  }
  std::size_t width = 9;
  for (const auto& c : report.class_names) width = std::max(width, c.size() + 1);
  const auto pad = [&](std::string v) {
    v.resize(std::max(v.size(), width), ' ');
    return v;
  };
  for (const auto& sm : report.summaries) {
    s << "\nconfusion " << to_string(sm.stage) << " (rows true, columns predicted, summed over repetitions)\n";
    s << pad("");
    for (const auto& c : report.class_names) s << pad(c);
    s << '\n';
    for (Eigen::Index r = 0; r < sm.confusion.rows(); ++r) {
      s << pad(report.class_names[static_cast<std::size_t>(r)]);
      for (Eigen::Index c = 0; c < sm.confusion.cols(); ++c) s << pad(std::to_string(sm.confusion(r, c)));
      s << '\n';
    }
  }
  return s.str();
}

void write_report(const fs::path& dir, const ExperimentReport& report) {
  fs::create_directories(dir);
  write_report_csv(dir / "report.csv", report);
  std::ofstream summary(dir / "summary.txt");
  summary << format_summary(report);
  std::ofstream config(dir / "config.json");
  config << report.config_json << '\n';
  if (!summary || !config) fail(ErrorCode::Io, "cannot write report files under " + dir.string());
}

std::string summarize_report_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("repetition,seed,stage,accuracy", 0) != 0) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": not a report CSV");
  }
  std::map<std::string, std::vector<double>> by_stage;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() < 4) fail(ErrorCode::SchemaMismatch, path.string() + ":" + std::to_string(line_no) + ": short row");
    try {
      by_stage[fields[2]].push_back(std::stod(fields[3]));
    } catch (const std::exception&) {
      fail(ErrorCode::SchemaMismatch, path.string() + ":" + std::to_string(line_no) + ": bad accuracy");
    }
  }
  std::ostringstream s;
  s << "stage                      n    mean     sd\n";
  for (Stage st : all_stages()) {
    const auto it = by_stage.find(std::string(to_string(st)));
    if (it == by_stage.end()) continue;
    const auto& v = it->second;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double a : v) ss += (a - mean) * (a - mean);
    std::string name(to_string(st));
    name.resize(26, ' ');
    char n_buf[8];
    std::snprintf(n_buf, sizeof n_buf, "%-4zu", v.size());
    s << name << ' ' << n_buf << ' ' << fixed(mean) << "   " << fixed(std::sqrt(ss / static_cast<double>(v.size()))) << '\n';
  }
  return s.str();
}

}  // namespace genreforge
