#pragma once

// Audio ingest: WAV loading, canonicalization and framing.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace genreforge {

inline constexpr int kCanonicalSampleRate = 22050;

struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kCanonicalSampleRate;
  std::optional<std::string> label;
  std::string source_id;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Analysis-frame and texture-window geometry, all counts in samples / frames.
struct FramingConfig {
  int sample_rate = kCanonicalSampleRate;
  std::size_t frame_len_samples = 0;
  std::size_t hop_samples = 0;
  std::size_t window_frames = 0;
  std::size_t window_hop_frames = 0;

  double frame_rate() const { return static_cast<double>(sample_rate) / hop_samples; }
};

struct FrameSeries {
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  std::vector<std::vector<double>> frames;

  std::size_t n_frames() const { return frames.size(); }
};

/// Reads a PCM WAV (8/16-bit, mono or stereo) and converts it to 22050 Hz mono.
AudioClip load_wav(const std::filesystem::path& path);

/// Writes a mono 16-bit PCM WAV. Samples are clamped to [-1, 1].
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate);

/// Linear-interpolation resampler; output covers the same duration.
std::vector<double> resample_linear(std::span<const double> in, int from_rate, int to_rate);

FramingConfig make_framing(int sample_rate, double frame_ms, double frame_overlap,
                           double window_s, double window_overlap);

/// Number of full frames of length `frame_len` at stride `hop` in `n` samples.
std::size_t frame_count(std::size_t n, std::size_t frame_len, std::size_t hop);

FrameSeries frame_signal(const AudioClip& clip, const FramingConfig& cfg);
FrameSeries frame_signal(std::span<const double> samples, const FramingConfig& cfg);

}  // namespace genreforge
