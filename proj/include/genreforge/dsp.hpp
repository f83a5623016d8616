#pragma once

// Short-time (per analysis frame) feature extractors.

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "genreforge/audio.hpp"

namespace genreforge {

struct Spectrum {
  std::vector<double> magnitudes;  // bins 0..fft_size/2
  double bin_hz = 0.0;
  std::size_t fft_size = 0;

  std::size_t size() const { return magnitudes.size(); }
  double frequency(std::size_t bin) const { return bin_hz * static_cast<double>(bin); }
  double nyquist() const { return bin_hz * static_cast<double>(fft_size) / 2.0; }
};

struct DspConfig {
  double rolloff_fraction = 0.85;
  std::size_t n_mfcc = 26;
  std::size_t n_mels = 40;
  double log_floor = 1e-10;
  std::size_t n_subframes = 10;
  std::size_t lpc_order = 10;
  double tuning_hz = 440.0;
};

std::size_t next_pow2(std::size_t n);

/// Hann-tapered magnitude spectrum, zero-padded to the next power of two.
Spectrum magnitude_spectrum(std::span<const double> frame, int sample_rate);

struct TimeDomainFeatures {
  double energy = 0.0;
  double rms = 0.0;
  double zero_crossing = 0.0;
  double entropy_of_energy = 0.0;
};

TimeDomainFeatures time_domain_features(std::span<const double> frame, std::size_t n_subframes);

struct SpectralShape {
  double centroid = 0.0;
  double spread = 0.0;
  double rolloff = 0.0;
  double variability = 0.0;
};

SpectralShape spectral_shape(const Spectrum& spec, double rolloff_fraction);

/// Euclidean distance between the two spectra after each is scaled to unit sum.
double spectral_flux(const Spectrum& prev, const Spectrum& cur);

double compactness(const Spectrum& spec);

/// Sum over bins of max(0, |cur| - |prev|).
double onset_strength(const Spectrum& prev, const Spectrum& cur);

/// Triangular mel filters spanning 0..Nyquist (mel = 2595 log10(1 + f/700)).
class MelFilterbank {
 public:
  MelFilterbank(std::size_t n_bins, double bin_hz, std::size_t n_mels);

  std::size_t n_filters() const { return centers_hz_.size(); }
  double center_hz(std::size_t m) const { return centers_hz_[m]; }
  double lower_hz(std::size_t m) const { return edges_hz_[m]; }
  double upper_hz(std::size_t m) const { return edges_hz_[m + 2]; }

  /// Power (|X|^2) summed through each filter.
  std::vector<double> energies(const Spectrum& spec) const;

  std::vector<double> mfcc(const Spectrum& spec, std::size_t n_coeffs, double log_floor) const;

 private:
  std::size_t n_bins_;
  std::vector<double> edges_hz_;
  std::vector<double> centers_hz_;
  // Sparse rows: first bin and weights for each filter.
  std::vector<std::size_t> first_bin_;
  std::vector<std::vector<double>> weights_;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Orthonormal DCT-II of `x`, first `n_out` coefficients.
std::vector<double> dct2(std::span<const double> x, std::size_t n_out);

std::vector<double> mfcc(const Spectrum& spec, std::size_t n_coeffs = 26, std::size_t n_mels = 40,
                         double log_floor = 1e-10);

struct Chroma {
  std::array<double, 12> chroma{};  // index 0 = C ... 11 = B
  double chroma_sd = 0.0;
};

Chroma chroma(const Spectrum& spec, double tuning_hz = 440.0);

/// Pitch class (0 = C) of frequency `hz` relative to an A tuned at `tuning_hz`.
int pitch_class(double hz, double tuning_hz = 440.0);

/// Linear prediction coefficients a1..a_order with x[n] ~ sum_k a_k x[n-k].
std::vector<double> lpc(std::span<const double> frame, std::size_t order = 10);

// Column layout of a ShortTimeMatrix.
namespace st {
inline constexpr std::size_t kCompactness = 0;
inline constexpr std::size_t kEnergy = 1;
inline constexpr std::size_t kEntropyOfEnergy = 2;
inline constexpr std::size_t kRms = 3;
inline constexpr std::size_t kZeroCrossing = 4;
inline constexpr std::size_t kMfcc = 5;            // 26 columns
inline constexpr std::size_t kChroma = 31;         // 12 columns
inline constexpr std::size_t kChromaSd = 43;
inline constexpr std::size_t kLpc = 44;            // 10 columns
inline constexpr std::size_t kSpectralCentroid = 54;
inline constexpr std::size_t kSpectralFlux = 55;
inline constexpr std::size_t kSpectralRolloff = 56;
inline constexpr std::size_t kSpectralSpread = 57;
inline constexpr std::size_t kSpectralVariability = 58;
inline constexpr std::size_t kColumns = 59;
}  // namespace st

struct ShortTimeMatrix {
  Eigen::MatrixXd values;  // n_frames x st::kColumns
  std::vector<std::string> component_names;
  // Half-wave rectified magnitude difference per frame (0 for the first frame).
  std::vector<double> onset_envelope;

  std::size_t n_frames() const { return static_cast<std::size_t>(values.rows()); }
};

std::vector<std::string> short_time_component_names();

/// Per-frame extraction with a cached mel filterbank. Stateless between calls.
class ShortTimeExtractor {
 public:
  ShortTimeExtractor(std::size_t frame_len, int sample_rate, DspConfig cfg = {});

  const DspConfig& config() const { return cfg_; }

  /// Fills `row` (length st::kColumns) from one frame and its spectrum;
  /// `prev` is the previous frame's spectrum or nullptr for the first frame.
  void extract_row(std::span<const double> frame, const Spectrum& spec, const Spectrum* prev,
                   std::span<double> row) const;

  ShortTimeMatrix extract(const FrameSeries& series) const;

 private:
  std::size_t frame_len_;
  int sample_rate_;
  DspConfig cfg_;
  MelFilterbank mel_;
};

ShortTimeMatrix extract_short_time(const FrameSeries& series, int sample_rate,
                                   const DspConfig& cfg = {});

}  // namespace genreforge
