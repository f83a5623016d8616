#include "genreforge/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include <unsupported/Eigen/FFT>

#include "genreforge/error.hpp"

namespace genreforge {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

Spectrum magnitude_spectrum(std::span<const double> frame, int sample_rate) {
  if (frame.size() < 2) fail(ErrorCode::TooShort, "frame must hold at least 2 samples");
  const std::size_t n = frame.size();
  const std::size_t n_fft = next_pow2(n);
  std::vector<double> buf(n_fft, 0.0);
  // Periodic Hann taper.
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / static_cast<double>(n));
    buf[i] = frame[i] * w;
  }
  thread_local Eigen::FFT<double> fft;
  std::vector<std::complex<double>> bins;
  fft.fwd(bins, buf);

  Spectrum spec;
  spec.fft_size = n_fft;
  spec.bin_hz = static_cast<double>(sample_rate) / static_cast<double>(n_fft);
  spec.magnitudes.resize(n_fft / 2 + 1);
  for (std::size_t k = 0; k < spec.magnitudes.size(); ++k) spec.magnitudes[k] = std::abs(bins[k]);
  return spec;
}

TimeDomainFeatures time_domain_features(std::span<const double> frame, std::size_t n_subframes) {
  TimeDomainFeatures out;
  if (frame.empty()) return out;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    out.energy += frame[i] * frame[i];
    if (i > 0 && std::signbit(frame[i - 1]) != std::signbit(frame[i])) out.zero_crossing += 1.0;
  }
  out.rms = std::sqrt(out.energy / static_cast<double>(frame.size()));

  if (n_subframes == 0) return out;
  const std::size_t sub_len = frame.size() / n_subframes;
  if (sub_len == 0) return out;
  std::vector<double> sub(n_subframes, 0.0);
  for (std::size_t j = 0; j < n_subframes; ++j) {
    for (std::size_t i = j * sub_len; i < (j + 1) * sub_len; ++i) sub[j] += frame[i] * frame[i];
  }
  const double total = std::accumulate(sub.begin(), sub.end(), 0.0);
  if (total > 0.0) {
    for (double e : sub) {
      const double p = e / total;
      if (p > 0.0) out.entropy_of_energy -= p * std::log2(p);
    }
  }
  return out;
}

SpectralShape spectral_shape(const Spectrum& spec, double rolloff_fraction) {
  SpectralShape out;
  const auto& m = spec.magnitudes;
  if (m.empty()) return out;

  const double n = static_cast<double>(m.size());
  const double mean_mag = std::accumulate(m.begin(), m.end(), 0.0) / n;
  double var = 0.0;
  for (double v : m) var += (v - mean_mag) * (v - mean_mag);
  out.variability = std::sqrt(var / n);

  const double total = std::accumulate(m.begin(), m.end(), 0.0);
  if (!(total > 0.0)) return out;

  double weighted = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) weighted += spec.frequency(k) * m[k];
  out.centroid = weighted / total;

  double spread = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    const double d = spec.frequency(k) - out.centroid;
    spread += d * d * m[k];
  }
  out.spread = std::sqrt(spread / total);

  const double target = rolloff_fraction * total;
  double cum = 0.0;
  out.rolloff = spec.frequency(m.size() - 1);
  for (std::size_t k = 0; k < m.size(); ++k) {
    cum += m[k];
    if (cum >= target) {
      out.rolloff = spec.frequency(k);
      break;
    }
  }
  return out;
}

double spectral_flux(const Spectrum& prev, const Spectrum& cur) {
  if (prev.size() != cur.size()) {
    fail(ErrorCode::LengthMismatch, "spectra of length " + std::to_string(prev.size()) + " and " +
                                        std::to_string(cur.size()));
  }
  const double sp = std::accumulate(prev.magnitudes.begin(), prev.magnitudes.end(), 0.0);
  const double sc = std::accumulate(cur.magnitudes.begin(), cur.magnitudes.end(), 0.0);
  const double ip = sp > 0.0 ? 1.0 / sp : 0.0;
  const double ic = sc > 0.0 ? 1.0 / sc : 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < cur.size(); ++k) {
    const double d = cur.magnitudes[k] * ic - prev.magnitudes[k] * ip;
    acc += d * d;
  }
  return std::sqrt(acc);
}

double compactness(const Spectrum& spec) {
  const auto& m = spec.magnitudes;
  double acc = 0.0;
  for (std::size_t k = 1; k + 1 < m.size(); ++k) {
    if (m[k - 1] <= 0.0 || m[k] <= 0.0 || m[k + 1] <= 0.0) continue;
    acc += std::abs(std::log(m[k]) - std::log((m[k - 1] + m[k] + m[k + 1]) / 3.0));
  }
  return acc;
}

double onset_strength(const Spectrum& prev, const Spectrum& cur) {
  if (prev.size() != cur.size()) fail(ErrorCode::LengthMismatch, "spectra differ in length");
  double acc = 0.0;
  for (std::size_t k = 0; k < cur.size(); ++k) {
    acc += std::max(0.0, cur.magnitudes[k] - prev.magnitudes[k]);
  }
  return acc;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(std::size_t n_bins, double bin_hz, std::size_t n_mels)
    : n_bins_(n_bins) {
  if (n_mels == 0 || n_bins < 2) fail(ErrorCode::DegenerateConfig, "empty mel filterbank");
  const double nyquist = bin_hz * static_cast<double>(n_bins - 1);
  const double mel_hi = hz_to_mel(nyquist);
  edges_hz_.resize(n_mels + 2);
  for (std::size_t i = 0; i < edges_hz_.size(); ++i) {
    edges_hz_[i] = mel_to_hz(mel_hi * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  centers_hz_.assign(edges_hz_.begin() + 1, edges_hz_.end() - 1);

  first_bin_.resize(n_mels);
  weights_.resize(n_mels);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges_hz_[m], c = edges_hz_[m + 1], hi = edges_hz_[m + 2];
    first_bin_[m] = n_bins;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = bin_hz * static_cast<double>(k);
      double w = 0.0;
      if (f > lo && f <= c) {
        w = (f - lo) / (c - lo);
      } else if (f > c && f < hi) {
        w = (hi - f) / (hi - c);
      }
      if (w <= 0.0) {
        if (first_bin_[m] != n_bins) break;
        continue;
      }
      if (first_bin_[m] == n_bins) first_bin_[m] = k;
      weights_[m].push_back(w);
    }
  }
}

std::vector<double> MelFilterbank::energies(const Spectrum& spec) const {
  if (spec.size() != n_bins_) {
    fail(ErrorCode::LengthMismatch, "spectrum has " + std::to_string(spec.size()) +
                                        " bins, filterbank expects " + std::to_string(n_bins_));
  }
  std::vector<double> e(weights_.size(), 0.0);
  for (std::size_t m = 0; m < weights_.size(); ++m) {
    for (std::size_t j = 0; j < weights_[m].size(); ++j) {
      const double mag = spec.magnitudes[first_bin_[m] + j];
      e[m] += weights_[m][j] * mag * mag;
    }
  }
  return e;
}

std::vector<double> MelFilterbank::mfcc(const Spectrum& spec, std::size_t n_coeffs,
                                        double log_floor) const {
  if (n_coeffs > n_filters()) {
    fail(ErrorCode::DegenerateConfig, "more cepstral coefficients than mel filters");
  }
  auto e = energies(spec);
  for (double& v : e) v = std::log(std::max(v, log_floor));
  return dct2(e, n_coeffs);
}

std::vector<double> dct2(std::span<const double> x, std::size_t n_out) {
  const std::size_t n = x.size();
  std::vector<double> out(n_out, 0.0);
  if (n == 0) return out;
  const double s0 = std::sqrt(1.0 / static_cast<double>(n));
  const double sk = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < n_out; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) *
                             (static_cast<double>(i) + 0.5) / static_cast<double>(n));
    }
    out[k] = (k == 0 ? s0 : sk) * acc;
  }
  return out;
}

std::vector<double> mfcc(const Spectrum& spec, std::size_t n_coeffs, std::size_t n_mels,
                         double log_floor) {
  const MelFilterbank bank(spec.size(), spec.bin_hz, n_mels);
  return bank.mfcc(spec, n_coeffs, log_floor);
}

int pitch_class(double hz, double tuning_hz) {
  const long semis = std::lround(12.0 * std::log2(hz / tuning_hz));
  // A sits at pitch class 9 when C is 0.
  return static_cast<int>(((semis + 9) % 12 + 12) % 12);
}

Chroma chroma(const Spectrum& spec, double tuning_hz) {
  Chroma out;
  for (std::size_t k = 1; k < spec.size(); ++k) {
    const double mag = spec.magnitudes[k];
    if (mag <= 0.0) continue;
    out.chroma[static_cast<std::size_t>(pitch_class(spec.frequency(k), tuning_hz))] += mag;
  }
  const double total = std::accumulate(out.chroma.begin(), out.chroma.end(), 0.0);
  if (!(total > 0.0)) return out;
  for (double& v : out.chroma) v /= total;
  const double mean = 1.0 / 12.0;
  double var = 0.0;
  for (double v : out.chroma) var += (v - mean) * (v - mean);
  out.chroma_sd = std::sqrt(var / 12.0);
  return out;
}

std::vector<double> lpc(std::span<const double> frame, std::size_t order) {
  std::vector<double> a(order, 0.0);
  if (frame.size() <= order) {
    fail(ErrorCode::TooShort, "LPC order " + std::to_string(order) + " needs a longer frame");
  }
  const double n = static_cast<double>(frame.size());
  std::vector<double> r(order + 1, 0.0);
  for (std::size_t lag = 0; lag <= order; ++lag) {
    double acc = 0.0;
    for (std::size_t i = lag; i < frame.size(); ++i) acc += frame[i] * frame[i - lag];
    r[lag] = acc / n;
  }
  if (!(r[0] > 0.0)) return a;

  // Levinson-Durbin; `a` holds the predictor of the current order.
  std::vector<double> prev(order, 0.0);
  double err = r[0];
  for (std::size_t m = 0; m < order; ++m) {
    double acc = r[m + 1];
    for (std::size_t k = 0; k < m; ++k) acc -= a[k] * r[m - k];
    const double kappa = acc / err;
    prev = a;
    a[m] = kappa;
    for (std::size_t k = 0; k < m; ++k) a[k] = prev[k] - kappa * prev[m - 1 - k];
    err *= (1.0 - kappa * kappa);
    if (!(err > 0.0)) {
      // Perfectly predictable at this order; higher coefficients stay zero.
      break;
    }
  }
  return a;
}

std::vector<std::string> short_time_component_names() {
  std::vector<std::string> names;
  names.reserve(st::kColumns);
  names.insert(names.end(), {"compactness", "energy", "entropy_of_energy", "rms",
                             "zero_crossing"});
  for (int i = 0; i < 26; ++i) names.push_back("mfcc." + std::to_string(i));
  for (int i = 0; i < 12; ++i) names.push_back("chroma." + std::to_string(i));
  names.push_back("chroma_sd");
  for (int i = 0; i < 10; ++i) names.push_back("lpc." + std::to_string(i));
  names.insert(names.end(), {"spectral_centroid", "spectral_flux", "spectral_rolloff",
                             "spectral_spread", "spectral_variability"});
  return names;
}

ShortTimeExtractor::ShortTimeExtractor(std::size_t frame_len, int sample_rate, DspConfig cfg)
    : frame_len_(frame_len),
      sample_rate_(sample_rate),
      cfg_(cfg),
      mel_(next_pow2(frame_len) / 2 + 1,
           static_cast<double>(sample_rate) / static_cast<double>(next_pow2(frame_len)),
           cfg.n_mels) {
  if (cfg_.n_mfcc != 26 || cfg_.lpc_order != 10) {
    fail(ErrorCode::DegenerateConfig, "column layout is fixed at 26 MFCC and 10 LPC");
  }
}

void ShortTimeExtractor::extract_row(std::span<const double> frame, const Spectrum& spec,
                                     const Spectrum* prev, std::span<double> row) const {
  const auto td = time_domain_features(frame, cfg_.n_subframes);
  row[st::kCompactness] = compactness(spec);
  row[st::kEnergy] = td.energy;
  row[st::kEntropyOfEnergy] = td.entropy_of_energy;
  row[st::kRms] = td.rms;
  row[st::kZeroCrossing] = td.zero_crossing;

  const auto cc = mel_.mfcc(spec, cfg_.n_mfcc, cfg_.log_floor);
  std::copy(cc.begin(), cc.end(), row.begin() + st::kMfcc);

  const auto ch = chroma(spec, cfg_.tuning_hz);
  std::copy(ch.chroma.begin(), ch.chroma.end(), row.begin() + st::kChroma);
  row[st::kChromaSd] = ch.chroma_sd;

  const auto lp = lpc(frame, cfg_.lpc_order);
  std::copy(lp.begin(), lp.end(), row.begin() + st::kLpc);

  const auto shape = spectral_shape(spec, cfg_.rolloff_fraction);
  row[st::kSpectralCentroid] = shape.centroid;
  row[st::kSpectralFlux] = prev ? spectral_flux(*prev, spec) : 0.0;
  row[st::kSpectralRolloff] = shape.rolloff;
  row[st::kSpectralSpread] = shape.spread;
  row[st::kSpectralVariability] = shape.variability;
}

ShortTimeMatrix ShortTimeExtractor::extract(const FrameSeries& series) const {
  if (series.frames.empty()) fail(ErrorCode::TooShort, "no analysis frames");
  ShortTimeMatrix out;
  out.component_names = short_time_component_names();
  const std::size_t n_f = series.n_frames();
  out.values.resize(static_cast<Eigen::Index>(n_f), st::kColumns);
  out.onset_envelope.assign(n_f, 0.0);

  std::vector<double> row(st::kColumns);
  Spectrum prev;
  for (std::size_t f = 0; f < n_f; ++f) {
    try {
      const auto& frame = series.frames[f];
      if (frame.size() != frame_len_) {
        fail(ErrorCode::LengthMismatch, "frame of length " + std::to_string(frame.size()));
      }
      Spectrum spec = magnitude_spectrum(frame, sample_rate_);
      extract_row(frame, spec, f == 0 ? nullptr : &prev, row);
      if (f > 0) out.onset_envelope[f] = onset_strength(prev, spec);
      for (std::size_t c = 0; c < st::kColumns; ++c) {
        out.values(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(c)) = row[c];
      }
      prev = std::move(spec);
    } catch (const Error& e) {
      fail(e.code(), "frame " + std::to_string(f) + ": " + e.what());
    }
  }
  return out;
}

ShortTimeMatrix extract_short_time(const FrameSeries& series, int sample_rate,
                                   const DspConfig& cfg) {
  return ShortTimeExtractor(series.frame_len, sample_rate, cfg).extract(series);
}

}  // namespace genreforge
