#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "genreforge/dsp.hpp"
#include "genreforge/error.hpp"
#include "oracles.hpp"

using namespace genreforge;

namespace {

constexpr int kSr = 22050;

std::vector<double> sine(double hz, std::size_t n, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / kSr);
  return x;
}

Spectrum make_spectrum(std::vector<double> mags, double bin_hz = 10.0) {
  Spectrum s;
  s.fft_size = 2 * (mags.size() - 1);
  s.bin_hz = bin_hz;
  s.magnitudes = std::move(mags);
  return s;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

TEST_CASE("magnitude spectrum") {
  SUBCASE("zero frame") {
    const auto s = magnitude_spectrum(std::vector<double>(1102, 0.0), kSr);
    CHECK(s.size() == 1025);
    CHECK(s.fft_size == 2048);
    for (double m : s.magnitudes) CHECK(m == 0.0);
  }
  SUBCASE("matches a naive DFT") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(200);
    for (double& v : x) v = u(rng);
    const auto s = magnitude_spectrum(x, kSr);
    const auto ref = oracle::dft_magnitudes(x, 256);
    REQUIRE(s.size() == ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) CHECK(s.magnitudes[k] == doctest::Approx(ref[k]).epsilon(1e-10));
  }
  SUBCASE("bin-centred sine has one dominant bin and 30 dB skirts") {
    const std::size_t n = 1024;
    const double hz = 40.0 * kSr / static_cast<double>(n);
    const auto s = magnitude_spectrum(sine(hz, n), kSr);
    const auto peak = std::max_element(s.magnitudes.begin(), s.magnitudes.end()) - s.magnitudes.begin();
    CHECK(peak == 40);
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (k + 3 < 40 || k > 43) CHECK(20.0 * std::log10(s.magnitudes[40] / std::max(s.magnitudes[k], 1e-300)) >= 30.0);
    }
  }
  SUBCASE("DC frame concentrates in bin 0") {
    const auto s = magnitude_spectrum(std::vector<double>(1102, 1.0), kSr);
    CHECK(std::max_element(s.magnitudes.begin(), s.magnitudes.end()) == s.magnitudes.begin());
  }
}

TEST_CASE("time-domain features") {
  const auto c = time_domain_features(std::vector<double>(100, 0.5), 10);
  CHECK(c.zero_crossing == 0.0);
  CHECK(c.rms == doctest::Approx(0.5));
  CHECK(c.entropy_of_energy == doctest::Approx(std::log2(10.0)));

  std::vector<double> alt(100);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? -1.0 : 1.0;
  const auto a = time_domain_features(alt, 10);
  CHECK(a.zero_crossing == 99.0);
  CHECK(a.rms == doctest::Approx(1.0));

  const auto x = sine(440.0, 1102);
  const auto s = time_domain_features(x, 10);
  CHECK(std::abs(s.zero_crossing - 2.0 * 440.0 * 1102.0 / kSr) <= 1.0);
  CHECK(s.zero_crossing == oracle::zero_crossings(x));
}

TEST_CASE("spectral shape") {
  std::vector<double> one(101, 0.0);
  one[30] = 2.0;
  const auto p = spectral_shape(make_spectrum(one), 0.85);
  CHECK(p.centroid == doctest::Approx(300.0));
  CHECK(p.spread == doctest::Approx(0.0));
  CHECK(p.rolloff == doctest::Approx(300.0));

  std::vector<double> two(101, 0.0);
  two[20] = two[60] = 1.0;
  const auto q = spectral_shape(make_spectrum(two), 0.85);
  CHECK(q.centroid == doctest::Approx(400.0));
  CHECK(q.spread == doctest::Approx(200.0));

  const auto flat = make_spectrum(std::vector<double>(1025, 1.0), kSr / 2048.0);
  const auto f = spectral_shape(flat, 0.85);
  // Cumulative-sum oracle: first bin where the running sum reaches 85 %.
  const auto k = static_cast<std::size_t>(std::ceil(0.85 * 1025.0)) - 1;
  CHECK(f.rolloff == doctest::Approx(flat.frequency(k)));
  CHECK(std::abs(f.rolloff - 0.85 * flat.nyquist()) < 2.0 * flat.bin_hz);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> m(65);
    for (double& v : m) v = u(rng);
    const auto s = make_spectrum(m, 7.5);
    double total = 0.0, w = 0.0;
    for (std::size_t b = 0; b < m.size(); ++b) {
      total += m[b];
      w += 7.5 * b * m[b];
    }
    const double centroid = w / total;
    double sp = 0.0, mean = total / m.size(), var = 0.0;
    for (std::size_t b = 0; b < m.size(); ++b) {
      sp += (7.5 * b - centroid) * (7.5 * b - centroid) * m[b];
      var += (m[b] - mean) * (m[b] - mean);
    }
    const auto r = spectral_shape(s, 0.85);
    CHECK(rel_err(r.centroid, centroid) <= 1e-12);
    CHECK(rel_err(r.spread, std::sqrt(sp / total)) <= 1e-12);
    CHECK(rel_err(r.variability, std::sqrt(var / m.size())) <= 1e-12);
  }
}

TEST_CASE("spectral flux") {
  std::vector<double> a(33, 0.0), b(33, 0.0);
  a[3] = 1.0;
  b[9] = 1.0;
  CHECK(spectral_flux(make_spectrum(a), make_spectrum(a)) == 0.0);
  CHECK(spectral_flux(make_spectrum(a), make_spectrum(b)) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(spectral_flux(make_spectrum(a), make_spectrum(std::vector<double>(17, 1.0))), Error);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(512), y(512);
    for (double& v : x) v = g(rng);
    for (double& v : y) v = g(rng);
    const auto sx = magnitude_spectrum(x, kSr), sy = magnitude_spectrum(y, kSr);
    double tx = 0.0, ty = 0.0;
    for (std::size_t k = 0; k < sx.size(); ++k) {
      tx += sx.magnitudes[k];
      ty += sy.magnitudes[k];
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < sx.size(); ++k) {
      const double d = sy.magnitudes[k] / ty - sx.magnitudes[k] / tx;
      acc += d * d;
    }
    CHECK(rel_err(spectral_flux(sx, sy), std::sqrt(acc)) <= 1e-12);
  }
}

TEST_CASE("compactness") {
  CHECK(compactness(make_spectrum(std::vector<double>(64, 3.0))) == 0.0);
  std::vector<double> alt(64);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? 1.0 : 4.0;
  CHECK(compactness(make_spectrum(alt)) > 0.0);
  CHECK(compactness(make_spectrum(std::vector<double>(64, 0.0))) == 0.0);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.01, 2.0);
  std::vector<double> m(129);
  for (double& v : m) v = u(rng);
  double ref = 0.0;
  for (std::size_t k = 1; k + 1 < m.size(); ++k) {
    ref += std::abs(std::log(m[k]) - std::log((m[k - 1] + m[k] + m[k + 1]) / 3.0));
  }
  CHECK(rel_err(compactness(make_spectrum(m)), ref) <= 1e-12);
}

TEST_CASE("mfcc") {
  const std::size_t n_bins = 1025;
  const double bin_hz = kSr / 2048.0;
  SUBCASE("silence gives floored energies and a constant log vector") {
    const auto silent = make_spectrum(std::vector<double>(n_bins, 0.0), bin_hz);
    const auto c = mfcc(silent, 26, 40, 1e-10);
    REQUIRE(c.size() == 26);
    CHECK(c[0] == doctest::Approx(std::log(1e-10) * std::sqrt(40.0)));
    for (std::size_t k = 1; k < c.size(); ++k) CHECK(std::abs(c[k]) < 1e-9);
  }
  SUBCASE("1 kHz energy peaks in the filter covering 1 kHz") {
    const auto s = magnitude_spectrum(sine(1000.0, 1102), kSr);
    const MelFilterbank fb(s.size(), s.bin_hz, 40);
    const auto e = fb.energies(s);
    const auto best = static_cast<std::size_t>(std::max_element(e.begin(), e.end()) - e.begin());
    CHECK(fb.lower_hz(best) < 1000.0);
    CHECK(fb.upper_hz(best) > 1000.0);
    std::size_t nearest = 0;
    for (std::size_t m = 0; m < fb.n_filters(); ++m) {
      if (std::abs(fb.center_hz(m) - 1000.0) < std::abs(fb.center_hz(nearest) - 1000.0)) nearest = m;
    }
    CHECK(best == nearest);
  }
  SUBCASE("flat spectrum puts the largest coefficient at index 0") {
    const auto c = mfcc(make_spectrum(std::vector<double>(n_bins, 1.0), bin_hz));
    for (std::size_t k = 1; k < c.size(); ++k) CHECK(std::abs(c[0]) >= std::abs(c[k]));
  }
  SUBCASE("orthonormal DCT-II") {
    const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
    const auto y = dct2(x, 4);
    for (std::size_t k = 0; k < 4; ++k) {
      double ref = 0.0;
      for (std::size_t n = 0; n < 4; ++n) ref += x[n] * std::cos(std::numbers::pi * (n + 0.5) * k / 4.0);
      ref *= k == 0 ? std::sqrt(0.25) : std::sqrt(0.5);
      CHECK(y[k] == doctest::Approx(ref).epsilon(1e-12));
    }
  }
  CHECK(hz_to_mel(mel_to_hz(1234.5)) == doctest::Approx(1234.5));
}

TEST_CASE("chroma") {
  const double bin_hz = 440.0 / 40.0;
  std::vector<double> m(201, 0.0);
  m[40] = 1.0;
  const auto a = chroma(make_spectrum(m, bin_hz));
  CHECK(a.chroma[9] == doctest::Approx(1.0));
  const double mu = 1.0 / 12.0;
  CHECK(a.chroma_sd == doctest::Approx(std::sqrt((std::pow(1.0 - mu, 2) + 11.0 * mu * mu) / 12.0)));

  m[80] = 1.0;
  const auto oct = chroma(make_spectrum(m, bin_hz));
  CHECK(oct.chroma[9] == doctest::Approx(1.0));

  std::vector<double> triad(1102, 0.0);
  for (double f : {261.63, 329.63, 392.00}) {
    const auto s = sine(f, 1102);
    for (std::size_t i = 0; i < triad.size(); ++i) triad[i] += s[i];
  }
  const auto c = chroma(magnitude_spectrum(triad, kSr));
  std::vector<int> order(12);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return c.chroma[x] > c.chroma[y]; });
  std::vector<int> top(order.begin(), order.begin() + 3);
  std::sort(top.begin(), top.end());
  CHECK(top == std::vector<int>{0, 4, 7});

  const auto silent = chroma(make_spectrum(std::vector<double>(201, 0.0), bin_hz));
  for (double v : silent.chroma) CHECK(v == 0.0);
  CHECK(silent.chroma_sd == 0.0);

  CHECK(pitch_class(440.0) == 9);
  CHECK(pitch_class(261.63) == 0);
  CHECK(pitch_class(880.0) == 9);
}

TEST_CASE("lpc") {
  const auto zero = lpc(std::vector<double>(1102, 0.0), 10);
  REQUIRE(zero.size() == 10);
  for (double v : zero) CHECK(v == 0.0);

  const auto x1 = oracle::ar_process({0.9}, 20000, 1);
  const auto a1 = lpc(x1, 10);
  CHECK(std::abs(a1[0] - 0.9) <= 0.05);
  for (std::size_t k = 1; k < a1.size(); ++k) CHECK(std::abs(a1[k]) <= 0.05);

  const auto x2 = oracle::ar_process({1.3, -0.6}, 20000, 2);
  const auto a2 = lpc(x2, 10);
  CHECK(std::abs(a2[0] - 1.3) <= 0.05);
  CHECK(std::abs(a2[1] + 0.6) <= 0.05);
}

TEST_CASE("short-time matrix") {
  const auto names = short_time_component_names();
  CHECK(names.size() == st::kColumns);
  CHECK(st::kColumns == 59);

  const auto framing = make_framing(kSr, 50.0, 0.5, 1.0, 0.5);
  SUBCASE("identical frames give identical rows and zero flux") {
    FrameSeries fs;
    fs.frame_len = 1102;
    fs.hop = 551;
    fs.frames.assign(3, sine(523.25, 1102, 0.3));
    const auto m = extract_short_time(fs, kSr);
    REQUIRE(m.n_frames() == 3);
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
      CHECK(m.values(1, c) == m.values(2, c));
    }
    for (Eigen::Index r = 0; r < 3; ++r) CHECK(m.values(r, st::kSpectralFlux) == 0.0);
  }
  SUBCASE("matches per-frame operators") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g(0.0, 0.1);
    std::vector<double> x(kSr);
    const auto tone = sine(330.0, x.size(), 0.4);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = tone[i] + g(rng);
    const auto fs = frame_signal(x, framing);
    const auto m = extract_short_time(fs, kSr);
    REQUIRE(m.n_frames() == fs.n_frames());
    for (std::size_t f = 1; f < fs.n_frames(); f += 7) {
      const auto r = static_cast<Eigen::Index>(f);
      const auto spec = magnitude_spectrum(fs.frames[f], kSr);
      const auto prev = magnitude_spectrum(fs.frames[f - 1], kSr);
      const auto td = time_domain_features(fs.frames[f], 10);
      const auto sh = spectral_shape(spec, 0.85);
      const auto mf = mfcc(spec);
      const auto ch = chroma(spec);
      const auto lp = lpc(fs.frames[f], 10);
      CHECK(m.values(r, st::kCompactness) == compactness(spec));
      CHECK(m.values(r, st::kEnergy) == td.energy);
      CHECK(m.values(r, st::kEntropyOfEnergy) == td.entropy_of_energy);
      CHECK(m.values(r, st::kRms) == td.rms);
      CHECK(m.values(r, st::kZeroCrossing) == td.zero_crossing);
      for (std::size_t k = 0; k < 26; ++k) CHECK(m.values(r, static_cast<Eigen::Index>(st::kMfcc + k)) == doctest::Approx(mf[k]).epsilon(1e-12));
      for (std::size_t k = 0; k < 12; ++k) CHECK(m.values(r, static_cast<Eigen::Index>(st::kChroma + k)) == ch.chroma[k]);
      CHECK(m.values(r, st::kChromaSd) == ch.chroma_sd);
      for (std::size_t k = 0; k < 10; ++k) CHECK(m.values(r, static_cast<Eigen::Index>(st::kLpc + k)) == doctest::Approx(lp[k]).epsilon(1e-12));
      CHECK(m.values(r, st::kSpectralCentroid) == sh.centroid);
      CHECK(m.values(r, st::kSpectralFlux) == spectral_flux(prev, spec));
      CHECK(m.values(r, st::kSpectralRolloff) == sh.rolloff);
      CHECK(m.values(r, st::kSpectralSpread) == sh.spread);
      CHECK(m.values(r, st::kSpectralVariability) == sh.variability);
      CHECK(m.onset_envelope[f] == doctest::Approx(onset_strength(prev, spec)));
    }
  }
  SUBCASE("amplitude scaling") {
    const auto x = sine(700.0, 1102, 0.2);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 3.0 * x[i];
    const auto tx = time_domain_features(x, 10), ty = time_domain_features(y, 10);
    CHECK(tx.zero_crossing == ty.zero_crossing);
    CHECK(ty.rms == doctest::Approx(3.0 * tx.rms));
    CHECK(ty.energy == doctest::Approx(9.0 * tx.energy));
    const auto sx = magnitude_spectrum(x, kSr), sy = magnitude_spectrum(y, kSr);
    CHECK(spectral_shape(sy, 0.85).centroid == doctest::Approx(spectral_shape(sx, 0.85).centroid));
    CHECK(spectral_shape(sy, 0.85).rolloff == doctest::Approx(spectral_shape(sx, 0.85).rolloff));
    const auto cx = chroma(sx), cy = chroma(sy);
    for (std::size_t k = 0; k < 12; ++k) CHECK(cy.chroma[k] == doctest::Approx(cx.chroma[k]));
  }
  SUBCASE("random signals stay finite") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> x(kSr / 2);
      for (double& v : x) v = u(rng) * (trial == 0 ? 0.0 : 1.0);
      const auto m = extract_short_time(frame_signal(x, framing), kSr);
      CHECK(m.values.allFinite());
    }
  }
}
