#pragma once

// Loads the end-to-end fixture and rebuilds each case's input signal.

#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include <json.hpp>

#include "amd/amd.hpp"

namespace amd::testing {

inline std::string fixture(const std::string& name) { return std::string(AMD_FIXTURE_DIR) + "/" + name; }

inline nlohmann::json read_json(const std::string& name) {
  std::ifstream in(fixture(name));
  return nlohmann::json::parse(in);
}

/// Test backend + the e2e classifier head.
inline std::shared_ptr<const DetectionModel> e2e_model(std::uint64_t backend_seed = 1234) {
  auto bundle = synthetic::test_backend(backend_seed);
  bundle.merge(WeightBundle::read_file(fixture("e2e_classifier.amdw")));
  return DetectionModel::from_bundle(bundle);
}

inline PcmChunk make_signal(const nlohmann::json& spec) {
  const std::string kind = spec["kind"];
  const int sr = spec.value("sample_rate_hz", kSampleRateHz);
  const auto n = static_cast<std::size_t>(spec["duration_ms"].get<std::int64_t>() * sr / 1000);
  std::vector<double> x(n, 0.0);
  auto tone = [&](double f, double a, std::size_t from) {
    for (std::size_t i = from; i < n; ++i)
      x[i] += a * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / sr);
  };
  if (kind == "tones") {
    for (const auto& t : spec["tones"]) tone(t[0], t[1], 0);
  } else if (kind == "gap_then_tone") {
    tone(spec["tone"][0], spec["tone"][1], static_cast<std::size_t>(spec["gap_ms"].get<std::int64_t>() * sr / 1000));
  } else if (kind == "noise") {
    const auto v = synthetic::uniform(spec["seed"], n, spec["amplitude"]);
    for (std::size_t i = 0; i < n; ++i) x[i] = v[i];
  }
  if (spec.value("encoding", "") == "s16") {
    std::vector<std::int16_t> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<std::int16_t>(std::floor(x[i] + 0.5));
    return PcmChunk::from_s16(std::move(s), sr);
  }
  std::vector<float> f(x.begin(), x.end());
  return PcmChunk::from_float(std::move(f), sr);
}

inline SessionParams make_params(const nlohmann::json& p) {
  SessionParams out;
  out.timeout_ms = p["timeout_ms"];
  out.confidence_threshold = p["confidence_threshold"];
  out.min_detection_time_ms = p["min_detection_time_ms"];
  out.silence.threshold_dbfs = p["silence_db"];
  return out;
}

/// Streams chunk_ms pieces through a session and then ends it.
inline SessionOutput run_chunked(DetectionSession& session, const PcmChunk& audio, int chunk_ms = 20) {
  SessionOutput all;
  auto take = [&](SessionOutput o) {
    all.frames.insert(all.frames.end(), o.frames.begin(), o.frames.end());
    if (o.verdict) all.verdict = o.verdict;
  };
  const auto step = static_cast<std::size_t>(audio.sample_rate_hz * chunk_ms / 1000);
  std::visit(
      [&](const auto& s) {
        using Vec = std::decay_t<decltype(s)>;
        for (std::size_t i = 0; i < s.size() && !session.finalized(); i += step) {
          Vec part(s.begin() + static_cast<std::ptrdiff_t>(i),
                   s.begin() + static_cast<std::ptrdiff_t>(std::min(s.size(), i + step)));
          take(session.push_audio(PcmChunk{std::move(part), audio.sample_rate_hz, 1}));
        }
      },
      audio.samples);
  take(session.end_stream());
  return all;
}

}  // namespace amd::testing
