#pragma once

// Repeated stratified-split experiment over the three pipeline stages:
// content vectors, IG-selected vectors, and selected vectors plus bottleneck codes.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genreforge/autoencoder.hpp"
#include "genreforge/dataset.hpp"
#include "genreforge/dsp.hpp"
#include "genreforge/selection.hpp"
#include "genreforge/svm.hpp"
#include "genreforge/synthetic.hpp"

namespace genreforge {

enum class Stage { ContentOnly, Selected, SelectedPlusBottleneck };

std::string_view to_string(Stage s);
/// Accepts content_only, selected, selected_plus_bottleneck; throws InvalidConfig otherwise.
Stage parse_stage(std::string_view s);
inline const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages = {Stage::ContentOnly, Stage::Selected,
                                            Stage::SelectedPlusBottleneck};
  return stages;
}

enum class SourceKind { WavDirectory, FeatureCsv, Synthetic };

struct DataSource {
  SourceKind kind = SourceKind::WavDirectory;
  std::filesystem::path path;  // WAV root or feature CSV
  SyntheticFeatureConfig synthetic;
};

struct ExtractionConfig {
  double frame_ms = 50.0;
  double frame_overlap = 0.5;
  double window_s = 1.0;
  double window_overlap = 0.5;
  DspConfig dsp;
  BeatConfig beat;

  FramingConfig framing() const;
};

struct AutoencoderSettings {
  std::size_t hidden = 60;
  std::size_t code = 20;
  double dropout = 0.2;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  AdadeltaConfig optimizer;

  AutoencoderConfig for_input(std::size_t input_dim, std::uint64_t seed) const;
};

struct ExperimentConfig {
  DataSource data;
  std::size_t n_repetitions = 10;
  std::size_t train_size = 900;
  std::size_t test_size = 100;
  std::vector<std::uint64_t> seeds;  // empty: 1..n_repetitions
  std::vector<Stage> stages = all_stages();
  bool scale_whole_dataset = false;
  ExtractionConfig extraction;
  ForestConfig forest;
  AutoencoderSettings autoencoder;
  SvmGrid svm = SvmGrid::standard();
  std::size_t jobs = 1;

  std::vector<std::uint64_t> repetition_seeds() const;
  /// Throws InvalidConfig on inconsistent values.
  void validate() const;
};

// JSON config; every key is optional and falls back to the defaults above.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::string_view json_text);
std::string config_to_json(const ExperimentConfig& cfg);

struct TrainTestSplit {
  std::vector<std::size_t> train;  // row indices, ascending
  std::vector<std::size_t> test;
};

/// Per class, exactly train_size * class_count / n rows go to training.
/// Throws IndivisibleSplit when that share is not integral for some class.
TrainTestSplit stratified_split(const LabeledDataset& data, std::size_t train_size, std::uint64_t seed);

struct ScalingParams {
  Eigen::VectorXd min;
  Eigen::VectorXd max;
};

ScalingParams fit_minmax(const Eigen::MatrixXd& rows);
/// (v - min) / (max - min) clamped to [0, 1]; constant components map to 0.
Eigen::MatrixXd apply_minmax(const Eigen::MatrixXd& rows, const ScalingParams& params);
Eigen::VectorXd apply_minmax(const Eigen::VectorXd& v, const ScalingParams& params);
void write_scaling_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                       const ScalingParams& params);

/// Derived seed for a named sub-stream of a repetition.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Artifacts fitted on the training fold only; shared by the stages of one repetition.
struct RepetitionContext {
  std::uint64_t seed = 0;
  std::optional<SelectionReport> selection;
  std::optional<Autoencoder> autoencoder;
};

struct StageResult {
  Stage stage = Stage::ContentOnly;
  double accuracy = 0.0;
  std::size_t dimension = 0;
  SvmConfig chosen;
  double cv_accuracy = 0.0;
  Eigen::MatrixXi confusion;  // rows: true class, cols: predicted
  std::vector<int> predictions;
};

/// Fits every artifact of `stage` on `train` and scores it on `test`.
/// Artifacts are written under `artifact_dir` when it is non-empty.
StageResult run_stage(Stage stage, const LabeledDataset& train, const LabeledDataset& test,
                      const ExperimentConfig& cfg, RepetitionContext& ctx,
                      const std::filesystem::path& artifact_dir = {});

/// Feature vectors of `stage`: content schema, projected schema, or projected ++ bottleneck.
FeatureSchema stage_schema(Stage stage, const SelectionReport* selection, std::size_t code_dim);

struct RepetitionResult {
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  std::size_t retained_count = 0;  // 0 when no stage needed selection
  std::vector<StageResult> stages;
};

struct StageSummary {
  Stage stage = Stage::ContentOnly;
  double mean = 0.0;
  double sd = 0.0;  // population sd over repetitions
  Eigen::MatrixXi confusion;  // summed over repetitions
};

struct ExperimentReport {
  std::string config_json;
  std::vector<std::string> class_names;
  std::vector<RepetitionResult> repetitions;
  std::vector<StageSummary> summaries;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Loads the configured source: WAV class directories, a feature CSV, or synthetic vectors.
LabeledDataset load_dataset(const ExperimentConfig& cfg, const ProgressFn& progress = {});

/// Sorted `root/<class>/*.wav` into content vectors. Throws Io when nothing is found.
LabeledDataset extract_directory(const std::filesystem::path& root, const ExtractionConfig& cfg,
                                 std::size_t jobs, const ProgressFn& progress = {});

ExperimentReport run_experiment(const ExperimentConfig& cfg, const LabeledDataset& data,
                                const std::filesystem::path& out_dir = {},
                                const ProgressFn& progress = {});
ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir = {},
                                const ProgressFn& progress = {});

std::vector<StageSummary> summarize(const std::vector<RepetitionResult>& reps, std::size_t n_classes);

// report.csv: repetition,seed,stage,accuracy,dimension,kernel,C,gamma,cv_accuracy
void write_report_csv(const std::filesystem::path& path, const ExperimentReport& report);
std::string format_summary(const ExperimentReport& report);
void write_report(const std::filesystem::path& dir, const ExperimentReport& report);
/// Rebuilds the per-stage summary from a report.csv written by `write_report_csv`.
std::string summarize_report_csv(const std::filesystem::path& path);

}  // namespace genreforge
