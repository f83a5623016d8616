#pragma once

// Early temporal integration (MeanVar), FoLEW, beat histogram features and
// the per-track content feature vector.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genreforge/audio.hpp"
#include "genreforge/dsp.hpp"

namespace genreforge {

/// Per texture window (mean, population sd) of a short-time series.
struct MediumTimeMatrix {
  std::vector<double> means;
  std::vector<double> sds;

  std::size_t n_windows() const { return means.size(); }
};

struct IntegratedFeature {
  double mean_of_means = 0.0;
  double mean_of_sds = 0.0;
};

/// Mean, sd, and mean / sd of the first difference of a series.
struct SeriesStats {
  double mean = 0.0;
  double sd = 0.0;
  double delta_mean = 0.0;
  double delta_sd = 0.0;
};

/// d[i] = s[i+1] - s[i].
std::vector<double> derivative_series(std::span<const double> s);

/// Number of texture windows of `window` frames at stride `hop` over `n` frames.
std::size_t window_count(std::size_t n, std::size_t window, std::size_t hop);

MediumTimeMatrix meanvar_windows(std::span<const double> s, std::size_t window_frames,
                                 std::size_t window_hop);

IntegratedFeature integrate_feature(const MediumTimeMatrix& m);

/// Per texture window: share of frames whose RMS lies strictly below the window mean.
std::vector<double> folew(std::span<const double> rms, std::size_t window_frames,
                          std::size_t window_hop);

/// Statistics of a medium-time series (one value per texture window). Needs >= 2 values.
SeriesStats summarize_series(std::span<const double> series);

struct BeatConfig {
  double min_bpm = 40.0;
  double max_bpm = 200.0;
};

struct BeatHistogram {
  std::size_t min_lag = 0;
  std::vector<double> strength;  // strength[i] for lag min_lag + i frames
  double beat_sum = 0.0;
  double strongest_beat = 0.0;  // BPM, 0 when the histogram is empty
  double strength_of_strongest_beat = 0.0;
};

/// Autocorrelation beat histogram of an onset envelope sampled at `frame_rate` Hz.
BeatHistogram beat_histogram(std::span<const double> onset_envelope, double frame_rate,
                             const BeatConfig& cfg = {});

struct BeatFeatures {
  // Whole-clip histogram.
  double beat_sum = 0.0;
  double strongest_beat = 0.0;
  double strength_of_strongest_beat = 0.0;
  // One value per texture window.
  std::vector<double> window_beat_sum;
  std::vector<double> window_strongest_beat;
  std::vector<double> window_strength;
  SeriesStats beat_sum_stats;
  SeriesStats strongest_beat_stats;
  SeriesStats strength_stats;
};

std::vector<double> onset_envelope(const FrameSeries& series, int sample_rate);

BeatFeatures beat_features(std::span<const double> onset_envelope, const FramingConfig& cfg,
                           const BeatConfig& beat_cfg = {});
BeatFeatures beat_features(const AudioClip& clip, const FramingConfig& cfg,
                           const BeatConfig& beat_cfg = {});

// `Value` marks components that are not temporal statistics (learned codes).
enum class Statistic { Mean, Sd, DeltaMean, DeltaSd, Value };

Statistic parse_statistic(std::string_view s);

std::string_view to_string(Statistic s);

struct ComponentDescriptor {
  std::string family;
  Statistic statistic = Statistic::Mean;
  std::size_t index = 0;

  std::string name() const;
};

struct FeatureSchema {
  std::vector<ComponentDescriptor> components;

  std::size_t size() const { return components.size(); }
  std::vector<std::string> names() const;
  FeatureSchema project(std::span<const bool> keep) const;
  bool operator==(const FeatureSchema& other) const;
};

bool operator==(const ComponentDescriptor& a, const ComponentDescriptor& b);

/// The 224-component content schema in fixed family order.
const FeatureSchema& content_schema();

inline constexpr std::size_t kContentDimension = 224;

struct FeatureVector {
  std::vector<double> values;
  std::string track_id;
  std::string label;
};

/// Integrates an already extracted short-time matrix into the content vector.
std::vector<double> integrate_track(const ShortTimeMatrix& stm, const FramingConfig& cfg,
                                    const BeatConfig& beat_cfg = {});

FeatureVector build_feature_vector(const AudioClip& clip, const FramingConfig& cfg,
                                   const DspConfig& dsp_cfg = {}, const BeatConfig& beat_cfg = {});

/// Shortest clip (in samples) `build_feature_vector` accepts under `cfg`.
std::size_t min_clip_samples(const FramingConfig& cfg);

}  // namespace genreforge
