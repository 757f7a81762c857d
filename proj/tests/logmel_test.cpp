#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "amd/fft.hpp"
#include "amd/logmel.hpp"

using namespace amd;

namespace {

AudioFrame sine(double hz, double amplitude = 0.5) {
  AudioFrame f;
  f.samples.resize(kFrameSamples);
  for (std::size_t n = 0; n < kFrameSamples; ++n)
    f.samples[n] = static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(n) / 16000.0));
  return f;
}

const LogMelFrontend& frontend() {
  static const LogMelFrontend fe;
  return fe;
}

}  // namespace

TEST(Fft, MatchesNaiveDft) {
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  for (std::size_t n : {1u, 2u, 8u, 64u, 512u}) {
    std::vector<std::complex<double>> x(n);
    for (auto& v : x) v = {g(rng), g(rng)};
    auto y = x;
    dsp::Fft(n).forward(y);
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> ref;
      for (std::size_t j = 0; j < n; ++j)
        ref += x[j] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(j * k % n) / static_cast<double>(n));
      EXPECT_NEAR(std::abs(y[k] - ref), 0.0, 1e-9 * static_cast<double>(n)) << n << ' ' << k;
    }
  }
  EXPECT_THROW(dsp::Fft(12), std::invalid_argument);
}

TEST(LogMel, ZeroFrameIsLogOffsetEverywhere) {
  AudioFrame f;
  f.samples.assign(kFrameSamples, 0.0f);
  const auto p = frontend().compute(f);
  ASSERT_EQ(p.values.size(), 96u * 64u);
  for (float v : p.values) EXPECT_FLOAT_EQ(v, static_cast<float>(std::log(0.001)));
}

TEST(MelFilterbank, DcAndLowBinsAreEmpty) {
  const auto fb = build_filterbank();
  // bin 0 is DC, bin 2 is 62.5 Hz: both below the 125 Hz lower edge
  for (std::size_t band = 0; band < kMelBands; ++band) {
    EXPECT_EQ(fb.at(0, band), 0.0);
    EXPECT_EQ(fb.at(2, band), 0.0);
  }
}

TEST(MelFilterbank, InteriorBinsAreCovered) {
  const auto fb = build_filterbank();
  for (std::size_t bin = 0; bin < kSpectrumBins; ++bin) {
    const double hz = 8000.0 * static_cast<double>(bin) / 256.0;
    if (hz <= 170.0 || hz >= 7400.0) continue;  // clear of the outer half-triangles
    double sum = 0.0;
    for (std::size_t band = 0; band < kMelBands; ++band) sum += fb.at(bin, band);
    EXPECT_GT(sum, 0.0) << hz << " Hz";
  }
  for (double w : fb.weights) {
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, 1.0);
  }
}

TEST(LogMel, SinePeaksInNearestBand) {
  // mel centers are evenly spaced between the edges; pick the nearest one
  const double lo = hz_to_mel(125.0), hi = hz_to_mel(7500.0);
  for (double hz : {500.0, 1000.0, 3000.0}) {
    const double target = hz_to_mel(hz);
    std::size_t nearest = 0;
    double best = 1e9;
    for (std::size_t b = 0; b < 64; ++b) {
      const double c = lo + (hi - lo) * static_cast<double>(b + 1) / 65.0;
      if (std::abs(c - target) < best) best = std::abs(c - target), nearest = b;
    }
    const auto p = frontend().compute(sine(hz));
    const auto row = p.values.begin() + 48 * 64;
    const auto argmax = static_cast<std::size_t>(std::max_element(row, row + 64) - row);
    EXPECT_LE(std::abs(static_cast<long>(argmax) - static_cast<long>(nearest)), 1) << hz;
  }
}

TEST(LogMel, MonotoneInGain) {
  const auto base = sine(700.0, 0.1);
  auto louder = base;
  for (auto& s : louder.samples) s *= 3.0f;
  const auto a = frontend().compute(base), b = frontend().compute(louder);
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_GE(b.values[i], a.values[i]);
}

TEST(LogMel, DeterministicAndMatchesOneShot) {
  const auto f = sine(1234.0, 0.3);
  const auto a = frontend().compute(f);
  const auto b = compute_patch(f, build_filterbank());
  EXPECT_EQ(a.values, b.values);
}
