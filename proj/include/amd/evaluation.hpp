#pragma once

// Offline evaluation: dataset preparation, per-frame confusion matrices and
// the per-component latency benchmark.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "amd/audio_frontend.hpp"
#include "amd/detection_session.hpp"
#include "amd/silence.hpp"
#include "amd/synthetic_bundles.hpp"
#include "amd/wav.hpp"

namespace amd::eval {

/// Clips or zero-pads at the end to exactly target_ms of 16 kHz audio.
template <typename Sample>
std::vector<Sample> pad_or_trim(std::span<const Sample> audio, std::int64_t target_ms = 4000) {
  const auto n = static_cast<std::size_t>(target_ms * kSampleRateHz / 1000);
  std::vector<Sample> out(audio.begin(), audio.begin() + static_cast<std::ptrdiff_t>(std::min(n, audio.size())));
  out.resize(n, Sample{});
  return out;
}

struct Ratio {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;

  /// 0 when the denominator is empty.
  double value() const {
    return denominator == 0 ? 0.0 : static_cast<double>(numerator) / static_cast<double>(denominator);
  }
};

/// MACHINE is the positive class.
struct ConfusionMatrix {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  void add(Label actual, Label predicted) {
    if (actual == Label::Machine) (predicted == Label::Machine ? tp : fn)++;
    else (predicted == Label::Machine ? fp : tn)++;
  }

  std::uint64_t total() const { return tp + fp + fn + tn; }

  Ratio accuracy() const { return {tp + tn, total()}; }
  Ratio precision() const { return {tp, tp + fp}; }
  Ratio sensitivity() const { return {tp, tp + fn}; }
  Ratio specificity() const { return {tn, tn + fp}; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  bool operator==(const ConfusionMatrix&) const = default;
};

enum class SilencePolicy {
  Off,          // every frame is scored
  Exclude,      // silent frames are left out of the matrix
  CountAsLast,  // silent frames take the last inferred label
};

/// Scores the frames of one file in order. reset() starts a new file.
class FrameScorer {
 public:
  virtual ~FrameScorer() = default;
  virtual void reset() = 0;
  virtual double score(const AudioFrame& frame) = 0;
};

class ModelScorer : public FrameScorer {
 public:
  explicit ModelScorer(std::shared_ptr<const DetectionModel> model)
      : model_(std::move(model)), state_(ClassifierState::fresh(model_->classifier.dims)) {}

  void reset() override { state_ = ClassifierState::fresh(model_->classifier.dims); }
  double score(const AudioFrame& frame) override { return step(model_->classifier, state_, model_->embed(frame)); }

 private:
  std::shared_ptr<const DetectionModel> model_;
  ClassifierState state_;
};

struct LabeledStream {
  std::string name;
  Label label = Label::Human;
  std::vector<float> samples;  // unit-scale 16 kHz
};

struct EvalReport {
  ConfusionMatrix matrix;
  std::size_t files = 0;
  std::size_t frames = 0;
  std::size_t frames_silent = 0;
};

/// Every frame of every stream is an independent instance; the classifier
/// state runs through each file and silent frames never advance it.
inline EvalReport evaluate_streams(std::span<const LabeledStream> streams, FrameScorer& scorer,
                                   SilencePolicy policy = SilencePolicy::Off, SilenceConfig silence = {}) {
  EvalReport report;
  for (const auto& s : streams) {
    scorer.reset();
    FrameAssembler assembler;
    auto frames = assembler.ingest(s.samples);
    auto tail = assembler.flush();
    frames.insert(frames.end(), tail.begin(), tail.end());
    double last = 0.5;
    for (const auto& f : frames) {
      ++report.frames;
      if (policy != SilencePolicy::Off && is_silent(f, silence)) {
        ++report.frames_silent;
        if (policy == SilencePolicy::CountAsLast) report.matrix.add(s.label, label_for(last));
        continue;
      }
      last = scorer.score(f);
      report.matrix.add(s.label, label_for(last));
    }
    ++report.files;
  }
  return report;
}

inline Label parse_label(const std::string& text) {
  std::string t;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (t == "HUMAN" || t == "0") return Label::Human;
  if (t == "MACHINE" || t == "1") return Label::Machine;
  throw MissingLabel("unrecognized label '" + text + "'");
}

/// CSV rows "path,label"; an optional "path,label" header row is skipped.
inline std::map<std::string, Label> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UnreadableFile("cannot open manifest '" + path + "'");
  std::map<std::string, Label> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw MissingLabel("manifest row without a label: '" + line + "'");
    const auto file = line.substr(0, comma);
    const auto label = line.substr(comma + 1);
    if (first && file == "path") {
      first = false;
      continue;
    }
    first = false;
    out[file] = parse_label(label);
  }
  return out;
}

inline std::vector<float> load_unit_16k(const std::string& path) {
  auto chunk = wav::read(path);
  StreamNormalizer norm(chunk.sample_rate_hz, chunk.channel_count);
  auto s = norm.push(chunk);
  auto tail = norm.finish();
  s.insert(s.end(), tail.begin(), tail.end());
  return s;
}

/// Scores every WAV file under dataset_dir. Each file needs a manifest label
/// (MissingLabel otherwise) and every manifest entry must be readable.
inline EvalReport evaluate(const std::string& dataset_dir, const std::string& manifest_path, FrameScorer& scorer,
                           SilencePolicy policy = SilencePolicy::Off, SilenceConfig silence = {}) {
  namespace fs = std::filesystem;
  const auto labels = read_manifest(manifest_path);
  std::vector<std::string> on_disk;
  for (const auto& e : fs::recursive_directory_iterator(dataset_dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") on_disk.push_back(fs::relative(e.path(), dataset_dir).generic_string());
  }
  std::sort(on_disk.begin(), on_disk.end());
  for (const auto& f : on_disk)
    if (!labels.count(f)) throw MissingLabel("no manifest label for '" + f + "'");

  EvalReport report;
  for (const auto& [file, label] : labels) {
    LabeledStream s{file, label, {}};
    try {
      s.samples = load_unit_16k((fs::path(dataset_dir) / file).string());
    } catch (const UnsupportedFormat& e) {
      throw UnreadableFile("'" + file + "': " + e.what());
    }
    const auto one = evaluate_streams(std::span(&s, 1), scorer, policy, silence);
    report.matrix += one.matrix;
    report.files += one.files;
    report.frames += one.frames;
    report.frames_silent += one.frames_silent;
  }
  return report;
}

// ---------------------------------------------------------------- benchmark

enum class Component { Backbone, Classifier, ClassifierCached, Silence };

inline const char* to_string(Component c) {
  switch (c) {
    case Component::Backbone: return "LOGMEL+BACKBONE";
    case Component::Classifier: return "CLASSIFIER";
    case Component::ClassifierCached: return "CLASSIFIER_CACHED";
    case Component::Silence: return "SILENCE";
  }
  return "?";
}

struct LatencySample {
  Component component = Component::Backbone;
  std::size_t frame_index = 0;
  double duration_us = 0.0;
};

/// Mean after dropping floor(n * fraction) samples from each end.
inline double trimmed_mean(std::vector<double> values, double fraction = 0.02) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(values.size()) * fraction));
  const auto first = values.begin() + static_cast<std::ptrdiff_t>(k);
  const auto last = values.end() - static_cast<std::ptrdiff_t>(k);
  if (first >= last) return 0.0;
  double sum = 0.0;
  for (auto it = first; it != last; ++it) sum += *it;
  return sum / static_cast<double>(last - first);
}

struct BenchReport {
  std::vector<LatencySample> samples;
  std::map<Component, double> trimmed_mean_us;

  std::string csv() const {
    std::ostringstream out;
    out << "component,frame_index,duration_us\n";
    for (const auto& s : samples) out << to_string(s.component) << ',' << s.frame_index << ',' << s.duration_us << '\n';
    return out.str();
  }
};

/// Times each pipeline component on n_frames synthetic frames. The cached
/// classifier re-runs the sequence over a cache that restarts every
/// cache_window frames, mimicking one call's worth of history.
inline BenchReport bench(const DetectionModel& model, std::size_t n_frames, std::size_t cache_window = 21,
                         std::uint64_t seed = 7) {
  using clock = std::chrono::steady_clock;
  auto us = [](clock::duration d) { return std::chrono::duration<double, std::micro>(d).count(); };
  BenchReport report;
  auto state = ClassifierState::fresh(model.classifier.dims);
  std::vector<Embedding> cache;
  SilenceConfig silence;
  AudioFrame frame;
  volatile double sink = 0.0;
  for (std::size_t i = 0; i < n_frames; ++i) {
    frame.index = i;
    frame.samples = synthetic::uniform(seed + i, kFrameSamples, 0.3);

    auto t0 = clock::now();
    sink = sink + (is_silent(frame, silence) ? 1.0 : 0.0);
    auto t1 = clock::now();
    auto e = model.embed(frame);
    auto t2 = clock::now();
    sink = sink + step(model.classifier, state, e);
    auto t3 = clock::now();
    if (cache.size() == cache_window) cache.clear();
    cache.push_back(std::move(e));
    sink = sink + run_sequence(model.classifier, cache);
    auto t4 = clock::now();

    report.samples.push_back({Component::Silence, i, us(t1 - t0)});
    report.samples.push_back({Component::Backbone, i, us(t2 - t1)});
    report.samples.push_back({Component::Classifier, i, us(t3 - t2)});
    report.samples.push_back({Component::ClassifierCached, i, us(t4 - t3)});
  }
  std::map<Component, std::vector<double>> by;
  for (const auto& s : report.samples) by[s.component].push_back(s.duration_us);
  for (auto& [c, v] : by) report.trimmed_mean_us[c] = trimmed_mean(std::move(v));
  return report;
}

}  // namespace amd::eval
