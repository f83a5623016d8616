#include "genreforge/audio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "genreforge/error.hpp"

namespace genreforge {
namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                              char((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

void put_u16(std::ostream& os, std::uint16_t v) {
  const std::array<char, 2> b{char(v & 0xff), char((v >> 8) & 0xff)};
  os.write(b.data(), 2);
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::UnreadableFile, "cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail(ErrorCode::UnreadableFile, path.string() + " is not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t len = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(len, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) fail(ErrorCode::UnreadableFile, "truncated fmt chunk in " + path.string());
      format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      if (format == kFormatExtensible && avail >= 26) format = read_u16(chunk + 32);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = avail;
    }
    pos = body + len + (len & 1u);
  }

  if (!have_fmt || data == nullptr) {
    fail(ErrorCode::UnreadableFile, path.string() + " lacks fmt or data chunk");
  }
  if (format != kFormatPcm) {
    fail(ErrorCode::UnsupportedEncoding, path.string() + ": format tag " + std::to_string(format));
  }
  if ((bits != 8 && bits != 16) || channels < 1 || channels > 2 || rate == 0) {
    fail(ErrorCode::UnsupportedEncoding,
         path.string() + ": " + std::to_string(bits) + "-bit, " + std::to_string(channels) +
             " channel(s)");
  }

  const std::size_t frame_bytes = std::size_t(bits / 8) * channels;
  const std::size_t n = data_len / frame_bytes;
  if (n == 0) fail(ErrorCode::EmptyAudio, path.string() + " has no samples");

  std::vector<double> mono(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* s = data + i * frame_bytes + c * (bits / 8);
      if (bits == 16) {
        acc += static_cast<std::int16_t>(read_u16(s)) / 32768.0;
      } else {
        acc += (static_cast<int>(s[0]) - 128) / 128.0;
      }
    }
    mono[i] = acc / channels;
  }

  AudioClip clip;
  clip.source_id = path.stem().string();
  clip.sample_rate = kCanonicalSampleRate;
  clip.samples = (rate == kCanonicalSampleRate)
                     ? std::move(mono)
                     : resample_linear(mono, static_cast<int>(rate), kCanonicalSampleRate);
  if (clip.samples.empty()) fail(ErrorCode::EmptyAudio, path.string() + " resampled to nothing");
  return clip;
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  const auto data_len = static_cast<std::uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(out, 36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.write("data", 4);
  put_u32(out, data_len);
  for (double x : samples) {
    const double q = std::round(std::clamp(x, -1.0, 1.0) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

std::vector<double> resample_linear(std::span<const double> in, int from_rate, int to_rate) {
  if (in.empty() || from_rate <= 0 || to_rate <= 0) return {};
  if (from_rate == to_rate) return {in.begin(), in.end()};
  const double step = static_cast<double>(from_rate) / to_rate;
  const auto n_out =
      static_cast<std::size_t>(std::floor(static_cast<double>(in.size() - 1) / step)) + 1;
  std::vector<double> out(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double t = i * step;
    const auto k = static_cast<std::size_t>(t);
    const double frac = t - static_cast<double>(k);
    out[i] = (k + 1 < in.size()) ? in[k] + frac * (in[k + 1] - in[k]) : in[k];
  }
  return out;
}

FramingConfig make_framing(int sample_rate, double frame_ms, double frame_overlap,
                           double window_s, double window_overlap) {
  if (sample_rate <= 0 || !(frame_ms > 0.0) || !(window_s > 0.0)) {
    fail(ErrorCode::DegenerateConfig, "sample rate and durations must be positive");
  }
  if (frame_overlap < 0.0 || frame_overlap >= 1.0 || window_overlap < 0.0 ||
      window_overlap >= 1.0) {
    fail(ErrorCode::DegenerateConfig, "overlaps must lie in [0, 1)");
  }
  FramingConfig cfg;
  cfg.sample_rate = sample_rate;
  cfg.frame_len_samples = static_cast<std::size_t>(std::floor(frame_ms * sample_rate / 1000.0));
  cfg.hop_samples =
      static_cast<std::size_t>(std::floor(cfg.frame_len_samples * (1.0 - frame_overlap)));
  if (cfg.frame_len_samples == 0 || cfg.hop_samples == 0) {
    fail(ErrorCode::DegenerateConfig, "analysis frame shorter than one sample");
  }
  const double hop_seconds = static_cast<double>(cfg.hop_samples) / sample_rate;
  cfg.window_frames = static_cast<std::size_t>(std::llround(window_s / hop_seconds));
  cfg.window_hop_frames =
      static_cast<std::size_t>(std::floor(cfg.window_frames * (1.0 - window_overlap)));
  if (cfg.window_frames == 0 || cfg.window_hop_frames == 0) {
    fail(ErrorCode::DegenerateConfig, "texture window shorter than one frame");
  }
  return cfg;
}

std::size_t frame_count(std::size_t n, std::size_t frame_len, std::size_t hop) {
  if (frame_len == 0 || hop == 0 || n < frame_len) return 0;
  return (n - frame_len) / hop + 1;
}

FrameSeries frame_signal(std::span<const double> samples, const FramingConfig& cfg) {
  const std::size_t len = cfg.frame_len_samples;
  if (len == 0 || cfg.hop_samples == 0) fail(ErrorCode::DegenerateConfig, "empty framing");
  if (samples.size() < len) {
    fail(ErrorCode::SignalTooShort, std::to_string(samples.size()) + " samples < frame length " +
                                        std::to_string(len));
  }
  FrameSeries series;
  series.frame_len = len;
  series.hop = cfg.hop_samples;
  const std::size_t n_f = frame_count(samples.size(), len, cfg.hop_samples);
  series.frames.reserve(n_f);
  for (std::size_t f = 0; f < n_f; ++f) {
    const auto first = samples.begin() + static_cast<std::ptrdiff_t>(f * cfg.hop_samples);
    series.frames.emplace_back(first, first + static_cast<std::ptrdiff_t>(len));
  }
  return series;
}

FrameSeries frame_signal(const AudioClip& clip, const FramingConfig& cfg) {
  return frame_signal(std::span<const double>(clip.samples), cfg);
}

}  // namespace genreforge
