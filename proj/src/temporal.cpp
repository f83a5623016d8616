#include "genreforge/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "genreforge/error.hpp"

namespace genreforge {
namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_sd(std::span<const double> v, double mean) {
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

void check_windowing(std::size_t n, std::size_t window, std::size_t hop) {
  if (window == 0 || hop == 0 || hop > window) {
    fail(ErrorCode::DegenerateConfig, "texture window " + std::to_string(window) + " / hop " +
                                          std::to_string(hop));
  }
  if (n < window) {
    fail(ErrorCode::TooShort, "series of " + std::to_string(n) + " values < window of " +
                                  std::to_string(window));
  }
}

}  // namespace

std::vector<double> derivative_series(std::span<const double> s) {
  if (s.size() < 2) fail(ErrorCode::TooShort, "derivative needs at least two values");
  std::vector<double> d(s.size() - 1);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) d[i] = s[i + 1] - s[i];
  return d;
}

std::size_t window_count(std::size_t n, std::size_t window, std::size_t hop) {
  return frame_count(n, window, hop);
}

MediumTimeMatrix meanvar_windows(std::span<const double> s, std::size_t window_frames,
                                 std::size_t window_hop) {
  check_windowing(s.size(), window_frames, window_hop);
  const std::size_t n_w = window_count(s.size(), window_frames, window_hop);
  MediumTimeMatrix m;
  m.means.resize(n_w);
  m.sds.resize(n_w);
  for (std::size_t t = 0; t < n_w; ++t) {
    const auto win = s.subspan(t * window_hop, window_frames);
    m.means[t] = mean_of(win);
    m.sds[t] = population_sd(win, m.means[t]);
  }
  return m;
}

IntegratedFeature integrate_feature(const MediumTimeMatrix& m) {
  if (m.n_windows() == 0) fail(ErrorCode::TooShort, "no texture windows");
  return {mean_of(m.means), mean_of(m.sds)};
}

std::vector<double> folew(std::span<const double> rms, std::size_t window_frames,
                          std::size_t window_hop) {
  check_windowing(rms.size(), window_frames, window_hop);
  const std::size_t n_w = window_count(rms.size(), window_frames, window_hop);
  std::vector<double> out(n_w);
  for (std::size_t t = 0; t < n_w; ++t) {
    const auto win = rms.subspan(t * window_hop, window_frames);
    const auto [lo, hi] = std::minmax_element(win.begin(), win.end());
    if (*lo == *hi) continue;  // a rounded mean could otherwise sit above every frame
    const double mu = mean_of(win);
    const auto low = std::count_if(win.begin(), win.end(), [mu](double v) { return v < mu; });
    out[t] = static_cast<double>(low) / static_cast<double>(window_frames);
  }
  return out;
}

SeriesStats summarize_series(std::span<const double> series) {
  const auto d = derivative_series(series);
  SeriesStats st;
  st.mean = mean_of(series);
  st.sd = population_sd(series, st.mean);
  st.delta_mean = mean_of(d);
  st.delta_sd = population_sd(d, st.delta_mean);
  return st;
}

BeatHistogram beat_histogram(std::span<const double> env, double frame_rate,
                             const BeatConfig& cfg) {
  BeatHistogram h;
  const auto min_lag = static_cast<std::size_t>(std::ceil(60.0 * frame_rate / cfg.max_bpm));
  const auto max_lag = static_cast<std::size_t>(std::floor(60.0 * frame_rate / cfg.min_bpm));
  h.min_lag = std::max<std::size_t>(min_lag, 1);
  if (max_lag < h.min_lag) return h;
  h.strength.assign(max_lag - h.min_lag + 1, 0.0);
  if (env.size() < 2) return h;

  const double mu = mean_of(env);
  const double len = static_cast<double>(env.size());
  for (std::size_t lag = h.min_lag; lag <= max_lag && lag < env.size(); ++lag) {
    double acc = 0.0;
    for (std::size_t n = 0; n + lag < env.size(); ++n) acc += (env[n] - mu) * (env[n + lag] - mu);
    h.strength[lag - h.min_lag] = std::max(0.0, acc / len);
  }

  h.beat_sum = std::accumulate(h.strength.begin(), h.strength.end(), 0.0);
  if (!(h.beat_sum > 0.0)) {
    h.beat_sum = 0.0;
    return h;
  }
  const auto best = static_cast<std::size_t>(
      std::max_element(h.strength.begin(), h.strength.end()) - h.strength.begin());
  h.strength_of_strongest_beat = h.strength[best] / h.beat_sum;

  // Parabolic refinement of the peak lag.
  double offset = 0.0;
  if (best > 0 && best + 1 < h.strength.size()) {
    const double a = h.strength[best - 1], b = h.strength[best], c = h.strength[best + 1];
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) offset = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  }
  const double lag = static_cast<double>(h.min_lag + best) + offset;
  h.strongest_beat = std::clamp(60.0 * frame_rate / lag, cfg.min_bpm, cfg.max_bpm);
  return h;
}

std::vector<double> onset_envelope(const FrameSeries& series, int sample_rate) {
  std::vector<double> env(series.n_frames(), 0.0);
  Spectrum prev;
  for (std::size_t f = 0; f < series.n_frames(); ++f) {
    Spectrum cur = magnitude_spectrum(series.frames[f], sample_rate);
    if (f > 0) env[f] = onset_strength(prev, cur);
    prev = std::move(cur);
  }
  return env;
}

BeatFeatures beat_features(std::span<const double> env, const FramingConfig& cfg,
                           const BeatConfig& beat_cfg) {
  const double fr = cfg.frame_rate();
  BeatFeatures out;
  const auto whole = beat_histogram(env, fr, beat_cfg);
  out.beat_sum = whole.beat_sum;
  out.strongest_beat = whole.strongest_beat;
  out.strength_of_strongest_beat = whole.strength_of_strongest_beat;

  // Each texture window reads the envelope over a span long enough to hold two
  // periods of the slowest tempo, centred on the window and kept inside the clip.
  const std::size_t W = cfg.window_frames;
  const std::size_t hop = cfg.window_hop_frames;
  check_windowing(env.size(), W, hop);
  const auto max_lag = static_cast<std::size_t>(std::floor(60.0 * fr / beat_cfg.min_bpm));
  const std::size_t span = std::min(env.size(), std::max(W, 2 * max_lag));
  const std::size_t n_w = window_count(env.size(), W, hop);
  for (std::size_t t = 0; t < n_w; ++t) {
    const std::size_t centre = t * hop + W / 2;
    const std::size_t start =
        std::min(centre >= span / 2 ? centre - span / 2 : 0, env.size() - span);
    const auto h = beat_histogram(env.subspan(start, span), fr, beat_cfg);
    out.window_beat_sum.push_back(h.beat_sum);
    out.window_strongest_beat.push_back(h.strongest_beat);
    out.window_strength.push_back(h.strength_of_strongest_beat);
  }
  if (n_w >= 2) {
    out.beat_sum_stats = summarize_series(out.window_beat_sum);
    out.strongest_beat_stats = summarize_series(out.window_strongest_beat);
    out.strength_stats = summarize_series(out.window_strength);
  }
  return out;
}

BeatFeatures beat_features(const AudioClip& clip, const FramingConfig& cfg,
                           const BeatConfig& beat_cfg) {
  if (clip.samples.size() < 2 * static_cast<std::size_t>(cfg.sample_rate)) {
    fail(ErrorCode::ClipTooShort, "beat analysis needs at least 2 s of audio");
  }
  const auto frames = frame_signal(clip, cfg);
  return beat_features(onset_envelope(frames, cfg.sample_rate), cfg, beat_cfg);
}

std::string_view to_string(Statistic s) {
  switch (s) {
    case Statistic::Mean: return "M";
    case Statistic::Sd: return "SD";
    case Statistic::DeltaMean: return "dM";
    case Statistic::DeltaSd: return "dSD";
    case Statistic::Value: return "V";
  }
  return "?";
}

Statistic parse_statistic(std::string_view s) {
  if (s == "M") return Statistic::Mean;
  if (s == "SD") return Statistic::Sd;
  if (s == "dM") return Statistic::DeltaMean;
  if (s == "dSD") return Statistic::DeltaSd;
  if (s == "V") return Statistic::Value;
  fail(ErrorCode::SchemaMismatch, "unknown statistic '" + std::string(s) + "'");
}

std::string ComponentDescriptor::name() const {
  return family + "." + std::string(to_string(statistic)) + "." + std::to_string(index);
}

bool operator==(const ComponentDescriptor& a, const ComponentDescriptor& b) {
  return a.family == b.family && a.statistic == b.statistic && a.index == b.index;
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(components.size());
  for (const auto& c : components) out.push_back(c.name());
  return out;
}

FeatureSchema FeatureSchema::project(std::span<const bool> keep) const {
  if (keep.size() != components.size()) {
    fail(ErrorCode::SchemaMismatch, "mask of " + std::to_string(keep.size()) +
                                        " for schema of " + std::to_string(components.size()));
  }
  FeatureSchema out;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (keep[i]) out.components.push_back(components[i]);
  }
  return out;
}

bool FeatureSchema::operator==(const FeatureSchema& other) const {
  return components == other.components;
}

namespace {

struct Family {
  const char* name;
  std::size_t dim;
  bool has_delta;
};

// Feature inventory order. Families without derivative statistics carry M and SD only.
constexpr Family kFamilies[] = {
    {"compactness", 1, true},
    {"energy", 1, true},
    {"entropy_of_energy", 1, false},
    {"folew", 1, true},
    {"rms", 1, true},
    {"zero_crossing", 1, true},
    {"strongest_beat", 1, true},
    {"strength_of_strongest_beat", 1, true},
    {"beat_sum", 1, true},
    {"mfcc", 26, true},
    {"chroma", 12, false},
    {"chroma_sd", 1, false},
    {"lpc", 10, true},
    {"spectral_centroid", 1, true},
    {"spectral_flux", 1, true},
    {"spectral_rolloff", 1, true},
    {"spectral_spread", 1, true},
    {"spectral_variability", 1, true},
};

// Short-time column of each family; npos for medium-time families.
constexpr std::size_t kNoColumn = static_cast<std::size_t>(-1);

std::size_t short_time_column(std::string_view family) {
  if (family == "compactness") return st::kCompactness;
  if (family == "energy") return st::kEnergy;
  if (family == "entropy_of_energy") return st::kEntropyOfEnergy;
  if (family == "rms") return st::kRms;
  if (family == "zero_crossing") return st::kZeroCrossing;
  if (family == "mfcc") return st::kMfcc;
  if (family == "chroma") return st::kChroma;
  if (family == "chroma_sd") return st::kChromaSd;
  if (family == "lpc") return st::kLpc;
  if (family == "spectral_centroid") return st::kSpectralCentroid;
  if (family == "spectral_flux") return st::kSpectralFlux;
  if (family == "spectral_rolloff") return st::kSpectralRolloff;
  if (family == "spectral_spread") return st::kSpectralSpread;
  if (family == "spectral_variability") return st::kSpectralVariability;
  return kNoColumn;
}

}  // namespace

const FeatureSchema& content_schema() {
  static const FeatureSchema schema = [] {
    FeatureSchema s;
    for (const auto& fam : kFamilies) {
      const Statistic stats[] = {Statistic::Mean, Statistic::Sd, Statistic::DeltaMean,
                                 Statistic::DeltaSd};
      const std::size_t n_stats = fam.has_delta ? 4 : 2;
      for (std::size_t k = 0; k < n_stats; ++k) {
        for (std::size_t i = 0; i < fam.dim; ++i) s.components.push_back({fam.name, stats[k], i});
      }
    }
    return s;
  }();
  return schema;
}

std::size_t min_clip_samples(const FramingConfig& cfg) {
  const std::size_t n_frames = cfg.window_frames + cfg.window_hop_frames;
  const std::size_t by_windows = (n_frames - 1) * cfg.hop_samples + cfg.frame_len_samples;
  return std::max(by_windows, 2 * static_cast<std::size_t>(cfg.sample_rate));
}

std::vector<double> integrate_track(const ShortTimeMatrix& stm, const FramingConfig& cfg,
                                    const BeatConfig& beat_cfg) {
  const std::size_t n_f = stm.n_frames();
  const std::size_t W = cfg.window_frames, hop = cfg.window_hop_frames;
  if (n_f < W + hop) {
    fail(ErrorCode::ClipTooShort, std::to_string(n_f) + " frames give fewer than two texture windows");
  }

  std::vector<std::vector<double>> columns(st::kColumns);
  for (std::size_t c = 0; c < st::kColumns; ++c) {
    const auto col = stm.values.col(static_cast<Eigen::Index>(c));
    columns[c].assign(col.data(), col.data() + col.size());
  }

  const SeriesStats folew_stats = summarize_series(folew(columns[st::kRms], W, hop));
  const BeatFeatures beat = beat_features(stm.onset_envelope, cfg, beat_cfg);

  std::vector<double> out;
  out.reserve(kContentDimension);
  for (const auto& fam : kFamilies) {
    const std::string_view name = fam.name;
    const std::size_t col0 = short_time_column(name);
    if (col0 == kNoColumn) {
      const SeriesStats& s = name == "folew"            ? folew_stats
                             : name == "strongest_beat" ? beat.strongest_beat_stats
                             : name == "beat_sum"       ? beat.beat_sum_stats
                                                        : beat.strength_stats;
      out.insert(out.end(), {s.mean, s.sd, s.delta_mean, s.delta_sd});
      continue;
    }
    std::vector<IntegratedFeature> values(fam.dim), deltas(fam.dim);
    for (std::size_t i = 0; i < fam.dim; ++i) {
      const auto& series = columns[col0 + i];
      values[i] = integrate_feature(meanvar_windows(series, W, hop));
      if (fam.has_delta) {
        deltas[i] = integrate_feature(meanvar_windows(derivative_series(series), W, hop));
      }
    }
    for (const auto& v : values) out.push_back(v.mean_of_means);
    for (const auto& v : values) out.push_back(v.mean_of_sds);
    if (fam.has_delta) {
      for (const auto& v : deltas) out.push_back(v.mean_of_means);
      for (const auto& v : deltas) out.push_back(v.mean_of_sds);
    }
  }
  if (out.size() != kContentDimension) {
    fail(ErrorCode::Internal, "content vector has " + std::to_string(out.size()) + " components");
  }
  for (double v : out) {
    if (!std::isfinite(v)) fail(ErrorCode::Internal, "non-finite content feature");
  }
  return out;
}

FeatureVector build_feature_vector(const AudioClip& clip, const FramingConfig& cfg,
                                   const DspConfig& dsp_cfg, const BeatConfig& beat_cfg) {
  if (clip.samples.size() < min_clip_samples(cfg)) {
    fail(ErrorCode::ClipTooShort, clip.source_id + ": " + std::to_string(clip.samples.size()) +
                                      " samples, need " + std::to_string(min_clip_samples(cfg)));
  }
  const auto frames = frame_signal(clip, cfg);
  const ShortTimeExtractor extractor(cfg.frame_len_samples, cfg.sample_rate, dsp_cfg);
  const auto stm = extractor.extract(frames);

  FeatureVector fv;
  fv.values = integrate_track(stm, cfg, beat_cfg);
  fv.track_id = clip.source_id;
  fv.label = clip.label.value_or("");
  return fv;
}

}  // namespace genreforge
