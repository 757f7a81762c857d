#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "amd/silence.hpp"

using namespace amd;

namespace {

AudioFrame constant(float v) {
  AudioFrame f;
  f.samples.assign(kFrameSamples, v);
  return f;
}

AudioFrame sine(double amplitude, double hz = 1000.0) {
  AudioFrame f;
  f.samples.resize(kFrameSamples);
  for (std::size_t n = 0; n < kFrameSamples; ++n)
    f.samples[n] = static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(n) / 16000.0));
  return f;
}

}  // namespace

TEST(FrameDbfs, FullScaleSquareIsZero) {
  AudioFrame f = constant(1.0f);
  for (std::size_t i = 0; i < f.samples.size(); i += 2) f.samples[i] = -1.0f;
  EXPECT_DOUBLE_EQ(frame_dbfs(f), 0.0);
}

TEST(FrameDbfs, ZeroFrameClampsToFloor) { EXPECT_EQ(frame_dbfs(constant(0.0f)), -120.0); }

TEST(FrameDbfs, FullScaleSineIsMinusThreeDb) {
  // RMS of a sine is 1/sqrt(2)
  EXPECT_NEAR(frame_dbfs(sine(1.0)), 20.0 * std::log10(1.0 / std::sqrt(2.0)), 0.01);
  EXPECT_NEAR(frame_dbfs(sine(1.0)), -3.0103, 0.01);
}

TEST(FrameDbfs, GainShiftsByTwentyLogG) {
  const auto base = sine(0.5, 440.0);
  for (double g : {0.5, 0.1, 0.01, 1.7}) {
    AudioFrame scaled = base;
    for (auto& s : scaled.samples) s = static_cast<float>(s * g);
    EXPECT_NEAR(frame_dbfs(scaled) - frame_dbfs(base), 20.0 * std::log10(g), 1e-5) << g;
  }
}

TEST(FrameDbfs, PaddingOnlyLowersLevel) {
  AudioFrame f = sine(0.3);
  const double before = frame_dbfs(f);
  std::fill(f.samples.begin() + 8000, f.samples.end(), 0.0f);
  EXPECT_LT(frame_dbfs(f), before);
  EXPECT_LE(before, 0.0);
}

TEST(IsSilent, Basics) {
  SilenceConfig cfg;
  EXPECT_TRUE(is_silent(constant(0.0f), cfg));
  EXPECT_FALSE(is_silent(sine(1.0), cfg));
}

TEST(IsSilent, BoundaryIsNotSilent) {
  // a constant frame at 10^(-50/20) sits at -50 dBFS up to float rounding;
  // compare against the measured level so the boundary is exact
  const AudioFrame f = constant(static_cast<float>(std::pow(10.0, -50.0 / 20.0)));
  SilenceConfig at;
  at.threshold_dbfs = frame_dbfs(f);
  EXPECT_FALSE(is_silent(f, at));
  EXPECT_NEAR(at.threshold_dbfs, -50.0, 1e-5);
}

TEST(IsSilent, MonotoneInThreshold) {
  const AudioFrame f = sine(0.001);  // about -63 dBFS
  bool was_silent = false;
  for (double t = -119.0; t < 0.0; t += 1.0) {
    SilenceConfig cfg;
    cfg.threshold_dbfs = t;
    const bool s = is_silent(f, cfg);
    if (was_silent) {
      EXPECT_TRUE(s) << t;
    }
    was_silent = s;
  }
  EXPECT_TRUE(was_silent);
}

TEST(SilenceConfig, Validates) {
  SilenceConfig bad;
  bad.threshold_dbfs = 3.0;
  EXPECT_THROW(bad.validate(), BadParams);
  bad.threshold_dbfs = -130.0;
  EXPECT_THROW(bad.validate(), BadParams);
  EXPECT_NO_THROW(SilenceConfig{}.validate());
}
