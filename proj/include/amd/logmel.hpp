#pragma once

// Stabilized log-mel patch: the fixed input representation of the embedding
// backbone. All constants are those of the upstream audio embedding model.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "amd/audio_frontend.hpp"
#include "amd/fft.hpp"

namespace amd {

inline constexpr std::size_t kPatchFrames = 96;
inline constexpr std::size_t kMelBands = 64;
inline constexpr std::size_t kStftWindow = 400;
inline constexpr std::size_t kStftHop = 160;
inline constexpr std::size_t kFftSize = 512;
inline constexpr std::size_t kSpectrumBins = kFftSize / 2 + 1;
inline constexpr std::size_t kPaddedFrameSamples = 15600;
inline constexpr double kMelLowHz = 125.0;
inline constexpr double kMelHighHz = 7500.0;
inline constexpr double kLogOffset = 0.001;

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

/// Row-major 96 x 64 (time x mel band).
struct LogMelPatch {
  std::vector<float> values = std::vector<float>(kPatchFrames * kMelBands);

  float at(std::size_t t, std::size_t band) const { return values[t * kMelBands + band]; }
  float& at(std::size_t t, std::size_t band) { return values[t * kMelBands + band]; }
};

/// 257 x 64 triangular filters on the HTK mel scale, row-major (bin x band).
struct MelFilterbank {
  std::vector<double> weights = std::vector<double>(kSpectrumBins * kMelBands, 0.0);

  double at(std::size_t bin, std::size_t band) const { return weights[bin * kMelBands + band]; }
};

inline MelFilterbank build_filterbank() {
  MelFilterbank fb;
  const double nyquist = kSampleRateHz / 2.0;
  const double lo = hz_to_mel(kMelLowHz);
  const double hi = hz_to_mel(kMelHighHz);
  std::array<double, kMelBands + 2> edges{};
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kMelBands + 1);
  // bin 0 (DC) stays zero
  for (std::size_t bin = 1; bin < kSpectrumBins; ++bin) {
    const double mel = hz_to_mel(nyquist * static_cast<double>(bin) / static_cast<double>(kSpectrumBins - 1));
    for (std::size_t band = 0; band < kMelBands; ++band) {
      const double l = edges[band], c = edges[band + 1], u = edges[band + 2];
      const double w = std::min((mel - l) / (c - l), (u - mel) / (u - c));
      fb.weights[bin * kMelBands + band] = std::max(0.0, w);
    }
  }
  return fb;
}

/// Precomputed window and FFT plan; reusable across frames and threads.
class LogMelFrontend {
 public:
  explicit LogMelFrontend(MelFilterbank fb = build_filterbank()) : fb_(std::move(fb)), fft_(kFftSize) {
    for (std::size_t band = 0; band < kMelBands; ++band) {
      std::size_t first = kSpectrumBins, last = 0;
      for (std::size_t bin = 0; bin < kSpectrumBins; ++bin) {
        if (fb_.at(bin, band) > 0.0) {
          first = std::min(first, bin);
          last = bin + 1;
        }
      }
      span_[band] = {first < last ? first : 0, last};
    }
    for (std::size_t n = 0; n < kStftWindow; ++n)
      window_[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                        static_cast<double>(kStftWindow));
  }

  const MelFilterbank& filterbank() const { return fb_; }

  LogMelPatch compute(std::span<const float> frame) const {
    LogMelPatch patch;
    std::array<double, kStftWindow> seg{};
    std::array<double, kSpectrumBins> mag{};
    std::vector<std::complex<double>> scratch;
    for (std::size_t t = 0; t < kPatchFrames; ++t) {
      const std::size_t off = t * kStftHop;
      for (std::size_t n = 0; n < kStftWindow; ++n) {
        const std::size_t i = off + n;
        // samples past the frame are the 240-sample zero pad
        const double s = i < frame.size() ? static_cast<double>(frame[i]) : 0.0;
        seg[n] = s * window_[n];
      }
      fft_.magnitude(seg, mag, scratch);
      for (std::size_t band = 0; band < kMelBands; ++band) {
        double acc = 0.0;
        for (std::size_t bin = span_[band].first; bin < span_[band].second; ++bin)
          acc += mag[bin] * fb_.at(bin, band);
        patch.at(t, band) = static_cast<float>(std::log(acc + kLogOffset));
      }
    }
    return patch;
  }

  LogMelPatch compute(const AudioFrame& frame) const { return compute(std::span<const float>(frame.samples)); }

 private:
  MelFilterbank fb_;
  dsp::Fft fft_;
  std::array<double, kStftWindow> window_{};
  std::array<std::pair<std::size_t, std::size_t>, kMelBands> span_{};
};

/// One-shot form; prefer a long-lived LogMelFrontend on hot paths.
inline LogMelPatch compute_patch(const AudioFrame& frame, const MelFilterbank& fb) {
  return LogMelFrontend(fb).compute(frame);
}

}  // namespace amd
