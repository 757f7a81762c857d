#pragma once

// Chunked PCM ingestion and 960 ms / 480 ms frame assembly.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "amd/errors.hpp"

namespace amd {

inline constexpr int kSampleRateHz = 16000;
inline constexpr std::size_t kFrameSamples = 15360;  // 960 ms
inline constexpr std::size_t kHopSamples = 7680;     // 480 ms
inline constexpr std::int64_t kFrameMs = 960;
inline constexpr std::int64_t kHopMs = 480;

/// A slice of decoded mono PCM as delivered by the media stream. Samples are
/// either 16-bit integers or unit-scale reals.
struct PcmChunk {
  std::variant<std::vector<std::int16_t>, std::vector<float>> samples;
  int sample_rate_hz = kSampleRateHz;
  int channel_count = 1;

  static PcmChunk from_s16(std::vector<std::int16_t> s, int rate = kSampleRateHz) {
    return PcmChunk{std::move(s), rate, 1};
  }
  static PcmChunk from_float(std::vector<float> s, int rate = kSampleRateHz) {
    return PcmChunk{std::move(s), rate, 1};
  }

  std::size_t size() const {
    return std::visit([](const auto& v) { return v.size(); }, samples);
  }
};

inline void validate_format(int sample_rate_hz, int channel_count) {
  if (channel_count != 1)
    throw UnsupportedFormat("only mono audio is supported, got " +
                            std::to_string(channel_count) + " channels");
  if (sample_rate_hz != 8000 && sample_rate_hz != 16000)
    throw UnsupportedFormat("unsupported sample rate " + std::to_string(sample_rate_hz));
}

namespace detail {

inline std::vector<double> to_unit(const PcmChunk& chunk) {
  std::vector<double> out;
  out.reserve(chunk.size());
  if (const auto* s16 = std::get_if<std::vector<std::int16_t>>(&chunk.samples)) {
    for (auto s : *s16) out.push_back(static_cast<double>(s) / 32768.0);
  } else {
    for (auto s : std::get<std::vector<float>>(chunk.samples)) {
      double v = s;
      out.push_back(v > 1.0 ? 1.0 : (v < -1.0 ? -1.0 : v));
    }
  }
  return out;
}

}  // namespace detail

/// Maps a chunk onto unit-scale 16 kHz samples. 8 kHz input is doubled by
/// linear interpolation; the final sample is held.
inline std::vector<float> normalize_chunk(const PcmChunk& chunk) {
  validate_format(chunk.sample_rate_hz, chunk.channel_count);
  auto x = detail::to_unit(chunk);
  std::vector<float> out;
  if (chunk.sample_rate_hz == kSampleRateHz) {
    out.assign(x.begin(), x.end());
    return out;
  }
  out.reserve(2 * x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double next = i + 1 < x.size() ? x[i + 1] : x[i];
    out.push_back(static_cast<float>(x[i]));
    out.push_back(static_cast<float>((x[i] + next) / 2.0));
  }
  return out;
}

/// Streaming form of normalize_chunk. For 8 kHz input the last sample of each
/// chunk is held back until its successor arrives, so the concatenated output
/// equals normalize_chunk applied to the whole stream.
class StreamNormalizer {
 public:
  explicit StreamNormalizer(int sample_rate_hz = kSampleRateHz, int channel_count = 1)
      : rate_(sample_rate_hz) {
    validate_format(sample_rate_hz, channel_count);
  }

  int sample_rate_hz() const { return rate_; }

  std::vector<float> push(const PcmChunk& chunk) {
    validate_format(chunk.sample_rate_hz, chunk.channel_count);
    if (chunk.sample_rate_hz != rate_)
      throw UnsupportedFormat("sample rate changed mid-stream");
    auto x = detail::to_unit(chunk);
    std::vector<float> out;
    if (rate_ == kSampleRateHz) {
      out.assign(x.begin(), x.end());
      return out;
    }
    out.reserve(2 * x.size());
    for (double v : x) {
      if (held_) {
        out.push_back(static_cast<float>(*held_));
        out.push_back(static_cast<float>((*held_ + v) / 2.0));
      }
      held_ = v;
    }
    return out;
  }

  std::vector<float> finish() {
    std::vector<float> out;
    if (held_) {
      out.push_back(static_cast<float>(*held_));
      out.push_back(static_cast<float>(*held_));
      held_.reset();
    }
    return out;
  }

 private:
  int rate_;
  std::optional<double> held_;
};

struct AudioFrame {
  std::vector<float> samples;  // always kFrameSamples long
  std::int64_t start_ms = 0;
  std::size_t index = 0;
  std::int64_t padded_tail_ms = 0;

  std::int64_t end_ms() const { return start_ms + kFrameMs; }
};

/// Turns a 16 kHz sample stream into overlapping 960 ms frames, one every
/// 480 ms. Output is independent of how the stream is chunked.
class FrameAssembler {
 public:
  std::vector<AudioFrame> ingest(std::span<const float> samples) {
    if (flushed_) return {};
    buffer_.insert(buffer_.end(), samples.begin(), samples.end());
    total_samples_ += samples.size();
    std::vector<AudioFrame> out;
    while (buffer_.size() - consumed_ >= kFrameSamples) out.push_back(take(0));
    compact();
    return out;
  }

  /// Zero-pads the tail onto the 480 ms grid and emits what remains. A stream
  /// shorter than one frame pads to exactly one frame; an empty stream emits
  /// nothing.
  std::vector<AudioFrame> flush() {
    std::vector<AudioFrame> out;
    if (flushed_) return out;
    flushed_ = true;
    if (total_samples_ == 0) return out;
    const std::size_t wanted = frame_count_for(total_samples_);
    while (next_index_ < wanted) {
      const std::size_t have = buffer_.size() - consumed_;
      const std::size_t pad = have >= kFrameSamples ? 0 : kFrameSamples - have;
      buffer_.insert(buffer_.end(), pad, 0.0f);
      out.push_back(take(pad));
    }
    buffer_.clear();
    consumed_ = 0;
    return out;
  }

  std::size_t next_frame_index() const { return next_index_; }
  std::size_t total_samples() const { return total_samples_; }
  std::int64_t total_ingested_ms() const {
    return static_cast<std::int64_t>(total_samples_ * 1000 / kSampleRateHz);
  }
  bool flushed() const { return flushed_; }

  /// Frames a stream of n samples produces once flushed.
  static std::size_t frame_count_for(std::size_t n) {
    if (n == 0) return 0;
    if (n <= kFrameSamples) return 1;
    return 1 + (n - kFrameSamples + kHopSamples - 1) / kHopSamples;
  }

 private:
  AudioFrame take(std::size_t pad_samples) {
    AudioFrame f;
    f.index = next_index_++;
    f.start_ms = static_cast<std::int64_t>(f.index) * kHopMs;
    f.padded_tail_ms = static_cast<std::int64_t>(pad_samples * 1000 / kSampleRateHz);
    auto first = buffer_.begin() + static_cast<std::ptrdiff_t>(consumed_);
    f.samples.assign(first, first + kFrameSamples);
    consumed_ += kHopSamples;
    return f;
  }

  void compact() {
    if (consumed_ > 4 * kFrameSamples) {
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(consumed_));
      consumed_ = 0;
    }
  }

  std::vector<float> buffer_;
  std::size_t consumed_ = 0;
  std::size_t next_index_ = 0;
  std::size_t total_samples_ = 0;
  bool flushed_ = false;
};

}  // namespace amd
