#pragma once

#include <cmath>
#include <span>

#include "amd/audio_frontend.hpp"
#include "amd/errors.hpp"

namespace amd {

struct SilenceConfig {
  double threshold_dbfs = -50.0;
  double floor_dbfs = -120.0;

  void validate() const {
    if (!(floor_dbfs < threshold_dbfs && threshold_dbfs < 0.0))
      throw BadParams("silence config requires floor_dbfs < threshold_dbfs < 0");
  }
};

/// 20*log10(RMS) over every sample, clamped below at floor_dbfs.
inline double frame_dbfs(std::span<const float> samples, double floor_dbfs = -120.0) {
  if (samples.empty()) return floor_dbfs;
  double sum = 0.0;
  for (float s : samples) sum += static_cast<double>(s) * s;
  const double rms = std::sqrt(sum / static_cast<double>(samples.size()));
  if (rms <= 0.0) return floor_dbfs;
  return std::max(20.0 * std::log10(rms), floor_dbfs);
}

inline double frame_dbfs(const AudioFrame& frame, double floor_dbfs = -120.0) {
  return frame_dbfs(std::span<const float>(frame.samples), floor_dbfs);
}

inline bool is_silent(const AudioFrame& frame, const SilenceConfig& config) {
  return frame_dbfs(frame, config.floor_dbfs) < config.threshold_dbfs;
}

}  // namespace amd
