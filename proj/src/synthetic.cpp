#include "genreforge/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "genreforge/audio.hpp"
#include "genreforge/error.hpp"

namespace genreforge {

SyntheticFeatures make_synthetic_features(const SyntheticFeatureConfig& cfg) {
  const std::size_t dim = kContentDimension;
  if (cfg.n_classes < 2 || cfg.per_class < 2) fail(ErrorCode::InvalidConfig, "synthetic data needs 2 classes of 2");
  if (cfg.n_informative > dim) fail(ErrorCode::InvalidConfig, "more informative components than columns");

  std::mt19937_64 rng(cfg.seed);
  SyntheticFeatures out;
  // Informative columns spread evenly across the schema.
  for (std::size_t k = 0; k < cfg.n_informative; ++k) out.informative.push_back(k * dim / cfg.n_informative);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Eigen::MatrixXd means(static_cast<Eigen::Index>(cfg.n_classes), static_cast<Eigen::Index>(cfg.n_informative));
  for (Eigen::Index c = 0; c < means.rows(); ++c) {
    for (Eigen::Index k = 0; k < means.cols(); ++k) means(c, k) = cfg.separation * normal(rng);
  }

  LabeledDataset& d = out.data;
  d.schema = content_schema();
  const std::size_t n = cfg.n_classes * cfg.per_class;
  d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t c = 0; c < cfg.n_classes; ++c) d.class_names.push_back("class_" + std::to_string(c));
  std::size_t row = 0;
  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    for (std::size_t i = 0; i < cfg.per_class; ++i, ++row) {
      const auto r = static_cast<Eigen::Index>(row);
      std::size_t next = 0;
      for (std::size_t j = 0; j < dim; ++j) {
        if (next < out.informative.size() && out.informative[next] == j) {
          d.features(r, static_cast<Eigen::Index>(j)) =
              means(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(next)) + normal(rng);
          ++next;
        } else {
          d.features(r, static_cast<Eigen::Index>(j)) = uniform(rng);
        }
      }
      d.labels.push_back(static_cast<int>(c));
      d.track_ids.push_back(d.class_names[c] + "_" + std::to_string(i));
    }
  }
  d.validate();
  return out;
}

std::vector<double> click_track(double bpm, double duration_s, int sample_rate) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  std::vector<double> x(n, 0.0);
  const double period = 60.0 / bpm * sample_rate;
  const auto click_len = static_cast<std::size_t>(0.01 * sample_rate);
  for (double start = 0.0; start < static_cast<double>(n); start += period) {
    const auto s0 = static_cast<std::size_t>(std::llround(start));
    for (std::size_t k = 0; k < click_len && s0 + k < n; ++k) {
      const double t = static_cast<double>(k) / sample_rate;
      x[s0 + k] = std::exp(-t / 0.002) * std::sin(2.0 * std::numbers::pi * 1000.0 * t + 0.5 * std::numbers::pi);
    }
  }
  return x;
}

std::vector<double> sine_mix(const std::vector<double>& freqs_hz, double duration_s, int sample_rate) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  std::vector<double> x(n, 0.0);
  for (double f : freqs_hz) {
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / sample_rate);
    }
  }
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : x) v *= 0.9 / peak;
  }
  return x;
}

std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& root,
                                                          const SyntheticAudioConfig& cfg) {
  const int sr = kCanonicalSampleRate;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::filesystem::path> written;
  const char* classes[] = {"clicks", "noise", "tones"};
  for (const char* cls : classes) {
    std::filesystem::create_directories(root / cls);
    for (std::size_t i = 0; i < cfg.clips_per_class; ++i) {
      std::vector<double> x;
      const std::string name(cls);
      if (name == "tones") {
        const double base = 220.0 * std::pow(2.0, std::floor(unit(rng) * 12.0) / 12.0);
        x = sine_mix({base, base * 1.25992, base * 1.49831}, cfg.duration_s, sr);
      } else if (name == "clicks") {
        x = click_track(80.0 + 80.0 * unit(rng), cfg.duration_s, sr);
      } else {
        std::normal_distribution<double> normal(0.0, 0.2);
        x.resize(static_cast<std::size_t>(std::llround(cfg.duration_s * sr)));
        double lp = 0.0;
        const double a = 0.2 + 0.7 * unit(rng);
        for (double& v : x) {
          lp = a * lp + (1.0 - a) * normal(rng);
          v = std::clamp(lp, -0.99, 0.99);
        }
      }
      char file[64];
      std::snprintf(file, sizeof file, "%s_%02zu.wav", cls, i);
      const auto path = root / cls / file;
      write_wav(path, x, sr);
      written.push_back(path);
    }
  }
  std::sort(written.begin(), written.end());
  return written;
}

}  // namespace genreforge
