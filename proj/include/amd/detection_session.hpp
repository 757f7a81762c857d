#pragma once

// Per-call orchestration: frames -> silence gate -> embedding -> classifier
// step, with timeout / confidence threshold / minimum detection time
// termination. All times are stream time (audio consumed).

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amd/audio_frontend.hpp"
#include "amd/backbone.hpp"
#include "amd/errors.hpp"
#include "amd/gru_classifier.hpp"
#include "amd/logmel.hpp"
#include "amd/silence.hpp"

namespace amd {

enum class Label { Human, Machine };
enum class VerdictReason { ThresholdMet, Timeout, StreamEnded };
enum class InferenceMode { Stateful, Cached };

inline const char* to_string(Label l) { return l == Label::Machine ? "MACHINE" : "HUMAN"; }

inline const char* to_string(VerdictReason r) {
  switch (r) {
    case VerdictReason::ThresholdMet: return "THRESHOLD_MET";
    case VerdictReason::Timeout: return "TIMEOUT";
    case VerdictReason::StreamEnded: return "STREAM_ENDED";
  }
  return "?";
}

inline const char* to_string(InferenceMode m) { return m == InferenceMode::Stateful ? "stateful" : "cached"; }

inline Label label_for(double probability) { return probability >= 0.5 ? Label::Machine : Label::Human; }
inline double confidence_for(double probability) { return probability >= 0.5 ? probability : 1.0 - probability; }

struct SessionParams {
  std::int64_t timeout_ms = 10000;
  double confidence_threshold = 0.9;
  std::int64_t min_detection_time_ms = 1920;
  SilenceConfig silence;

  void validate() const {
    if (timeout_ms <= 0) throw BadParams("timeout_ms must be positive");
    if (!(confidence_threshold >= 0.5 && confidence_threshold <= 1.0))
      throw BadParams("confidence_threshold must lie in [0.5, 1.0]");
    if (min_detection_time_ms < 0) throw BadParams("min_detection_time_ms must be nonnegative");
    if (min_detection_time_ms > timeout_ms) throw BadParams("min_detection_time_ms exceeds timeout_ms");
    silence.validate();
  }
};

struct FrameResult {
  std::size_t frame_index = 0;
  std::int64_t end_ms = 0;
  double probability = 0.5;
  double confidence = 0.5;
  Label label = Label::Machine;
  bool silent = false;

  static FrameResult make(std::size_t index, double probability, bool silent) {
    return {index, kFrameMs + kHopMs * static_cast<std::int64_t>(index), probability, confidence_for(probability),
            label_for(probability), silent};
  }
};

struct Verdict {
  Label label = Label::Human;
  double confidence = 0.5;
  std::int64_t elapsed_ms = 0;
  VerdictReason reason = VerdictReason::StreamEnded;
  std::size_t frames_processed = 0;
  std::size_t frames_skipped_silent = 0;
};

/// The termination rules, separated from inference so they can be driven by
/// arbitrary probability trajectories.
class TerminationTracker {
 public:
  explicit TerminationTracker(SessionParams params) : params_(params) { params_.validate(); }

  const SessionParams& params() const { return params_; }
  bool done() const { return verdict_.has_value(); }
  const std::optional<Verdict>& verdict() const { return verdict_; }
  std::size_t frames_processed() const { return processed_; }
  std::size_t frames_skipped() const { return skipped_; }

  /// Last probability from an inferred frame; 0.5 before any.
  double carried_probability() const { return last_probability_; }

  /// Records one frame and returns the verdict if this frame terminates the
  /// session. Frames after the verdict are ignored.
  std::optional<Verdict> observe(const FrameResult& r) {
    if (verdict_) return std::nullopt;
    if (r.silent) {
      ++skipped_;
    } else {
      ++processed_;
      last_probability_ = r.probability;
    }
    if (r.confidence >= params_.confidence_threshold && r.end_ms >= params_.min_detection_time_ms) {
      verdict_ = make(r.probability, r.end_ms, VerdictReason::ThresholdMet);
    } else if (r.end_ms >= params_.timeout_ms) {
      verdict_ = make(r.probability, params_.timeout_ms, VerdictReason::Timeout);
    }
    return verdict_;
  }

  /// Called when the stream stops without a verdict.
  std::optional<Verdict> stream_ended(std::int64_t stream_ms) {
    if (verdict_) return std::nullopt;
    if (processed_ == 0) {
      // nothing was inferred: HUMAN at even odds, not the p >= 0.5 tie rule
      verdict_ = Verdict{Label::Human, 0.5, stream_ms, VerdictReason::StreamEnded, 0, skipped_};
      return verdict_;
    }
    verdict_ = make(last_probability_, stream_ms, VerdictReason::StreamEnded);
    return verdict_;
  }

 private:
  Verdict make(double p, std::int64_t elapsed, VerdictReason reason) const {
    return {label_for(p), confidence_for(p), elapsed, reason, processed_, skipped_};
  }

  SessionParams params_;
  std::optional<Verdict> verdict_;
  double last_probability_ = 0.5;
  std::size_t processed_ = 0;
  std::size_t skipped_ = 0;
};

/// Immutable model parts shared by every session.
struct DetectionModel {
  LogMelFrontend frontend;
  BackboneGraph backbone;
  ClassifierWeights classifier;

  DetectionModel(BackboneGraph b, ClassifierWeights c) : backbone(std::move(b)), classifier(std::move(c)) {
    classifier.validate();
  }

  /// Loads backbone and classifier sections from one bundle.
  static std::shared_ptr<const DetectionModel> from_bundle(const WeightBundle& bundle) {
    return std::make_shared<const DetectionModel>(load_backbone(bundle), load_classifier(bundle));
  }

  Embedding embed(const AudioFrame& frame) const { return backbone.embed(frontend.compute(frame)); }
};

struct SessionOutput {
  std::vector<FrameResult> frames;
  std::optional<Verdict> verdict;
};

class DetectionSession {
 public:
  DetectionSession(std::shared_ptr<const DetectionModel> model, SessionParams params,
                   InferenceMode mode = InferenceMode::Cached, int sample_rate_hz = kSampleRateHz)
      : model_(std::move(model)),
        mode_(mode),
        normalizer_(sample_rate_hz),
        tracker_(params),
        state_(ClassifierState::fresh(model_->classifier.dims)) {}

  SessionOutput push_audio(const PcmChunk& chunk) {
    if (finalized()) throw SessionFinalized("session already produced its verdict");
    const auto samples = normalizer_.push(chunk);
    return process(assembler_.ingest(samples));
  }

  /// Feeds already assembled frames, bypassing the assembler.
  SessionOutput push_frames(std::span<const AudioFrame> frames) {
    if (finalized()) throw SessionFinalized("session already produced its verdict");
    return process(frames);
  }

  /// Flushes the tail and guarantees a verdict. Idempotent: once a verdict
  /// exists, later calls return nothing.
  SessionOutput end_stream() {
    if (ended_ || tracker_.done()) {
      ended_ = true;
      return {};
    }
    ended_ = true;
    const auto tail = normalizer_.finish();
    auto frames = assembler_.ingest(tail);
    auto flushed = assembler_.flush();
    frames.insert(frames.end(), std::make_move_iterator(flushed.begin()), std::make_move_iterator(flushed.end()));
    auto out = process(frames);
    if (!out.verdict) out.verdict = tracker_.stream_ended(assembler_.total_ingested_ms());
    return out;
  }

  bool finalized() const { return ended_ || tracker_.done(); }
  const std::optional<Verdict>& verdict() const { return tracker_.verdict(); }
  const SessionParams& params() const { return tracker_.params(); }
  InferenceMode mode() const { return mode_; }
  const ClassifierState& state() const { return state_; }
  const std::vector<Embedding>& cache() const { return cache_; }
  int sample_rate_hz() const { return normalizer_.sample_rate_hz(); }

 private:
  SessionOutput process(std::span<const AudioFrame> frames) {
    SessionOutput out;
    for (const auto& frame : frames) {
      if (tracker_.done()) break;
      const bool silent = is_silent(frame, tracker_.params().silence);
      double p = tracker_.carried_probability();
      if (!silent) p = infer(frame);
      const auto r = FrameResult::make(frame.index, p, silent);
      out.frames.push_back(r);
      if (auto v = tracker_.observe(r)) out.verdict = v;
    }
    return out;
  }

  double infer(const AudioFrame& frame) {
    auto e = model_->embed(frame);
    if (mode_ == InferenceMode::Stateful) return step(model_->classifier, state_, e);
    cache_.push_back(std::move(e));
    return run_sequence(model_->classifier, cache_);
  }

  std::shared_ptr<const DetectionModel> model_;
  InferenceMode mode_;
  StreamNormalizer normalizer_;
  FrameAssembler assembler_;
  TerminationTracker tracker_;
  ClassifierState state_;
  std::vector<Embedding> cache_;
  bool ended_ = false;
};

}  // namespace amd
