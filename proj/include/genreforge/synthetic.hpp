#pragma once

// Seeded synthetic fixtures: labelled content-vector datasets and small WAV corpora.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "genreforge/dataset.hpp"

namespace genreforge {

struct SyntheticFeatureConfig {
  std::size_t n_classes = 3;
  std::size_t per_class = 100;
  std::size_t n_informative = 30;
  double separation = 1.0;  // sd of class-mean offsets on informative components
  std::uint64_t seed = 1;
};

struct SyntheticFeatures {
  LabeledDataset data;                // content schema, kContentDimension columns
  std::vector<std::size_t> informative;  // column indices, ascending
};

/// Informative components are Gaussian around per-class means; all others are
/// i.i.d. uniform noise independent of the label.
SyntheticFeatures make_synthetic_features(const SyntheticFeatureConfig& cfg);

struct SyntheticAudioConfig {
  std::size_t clips_per_class = 4;
  double duration_s = 3.0;
  std::uint64_t seed = 1;
};

/// Writes `root/<class>/<class>_NN.wav` for the classes "tones", "clicks" and "noise".
/// Returns the paths written, in sorted order.
std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& root,
                                                          const SyntheticAudioConfig& cfg);

/// Unit click every 60/bpm seconds, `duration_s` long at `sample_rate`.
std::vector<double> click_track(double bpm, double duration_s, int sample_rate);

/// Equal-amplitude sum of sines, peak-normalised to 0.9.
std::vector<double> sine_mix(const std::vector<double>& freqs_hz, double duration_s, int sample_rate);

}  // namespace genreforge
