#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <unistd.h>

#include "amd/evaluation.hpp"

using namespace amd;
using namespace amd::eval;
namespace fs = std::filesystem;

namespace {

// MACHINE when the frame mean is positive; keeps a running count so a
// missing reset() would show up as a changed matrix
class SignScorer : public FrameScorer {
 public:
  void reset() override { seen_ = 0; }
  double score(const AudioFrame& f) override {
    ++seen_;
    const double mean = std::accumulate(f.samples.begin(), f.samples.end(), 0.0) / static_cast<double>(f.samples.size());
    return seen_ > 100 ? 0.5 : (mean > 0.0 ? 0.9 : 0.1);
  }

 private:
  std::size_t seen_ = 0;
};

class OracleScorer : public FrameScorer {
 public:
  explicit OracleScorer(Label l) : label_(l) {}
  void reset() override {}
  double score(const AudioFrame&) override { return label_ == Label::Machine ? 1.0 : 0.0; }
  Label label_;
};

std::vector<float> level(std::size_t ms, float v) { return std::vector<float>(ms * 16, v); }

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("amd_eval_" + std::to_string(::getpid()));
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

void write_manifest(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(PadOrTrim, Examples) {
  std::vector<float> five(5 * 16000);
  std::iota(five.begin(), five.end(), 1.0f);
  const auto clipped = pad_or_trim<float>(five);
  ASSERT_EQ(clipped.size(), 64000u);
  EXPECT_TRUE(std::equal(clipped.begin(), clipped.end(), five.begin()));

  const std::vector<std::int16_t> three(48000, 7);
  const auto padded = pad_or_trim<std::int16_t>(three);
  ASSERT_EQ(padded.size(), 64000u);
  EXPECT_EQ(padded[47999], 7);
  EXPECT_TRUE(std::all_of(padded.begin() + 48000, padded.end(), [](auto s) { return s == 0; }));

  const std::vector<float> four(five.begin(), five.begin() + 64000);
  EXPECT_EQ(pad_or_trim<float>(four), four);
}

TEST(ConfusionMatrix, PaperTableMetrics) {
  const ConfusionMatrix m{1653, 67, 45, 1635};
  EXPECT_EQ(m.total(), 3400u);
  EXPECT_EQ(m.accuracy().numerator, 3288u);
  EXPECT_EQ(std::round(m.accuracy().value() * 10000.0), 9671.0);
  EXPECT_NEAR(m.precision().value() * 100.0, 96.15, 0.3);
  EXPECT_NEAR(m.sensitivity().value() * 100.0, 97.38, 0.3);
  EXPECT_NEAR(m.specificity().value() * 100.0, 96.01, 0.3);
}

TEST(ConfusionMatrix, AddAndEmpty) {
  ConfusionMatrix m;
  EXPECT_EQ(m.accuracy().value(), 0.0);
  m.add(Label::Machine, Label::Machine);
  m.add(Label::Machine, Label::Human);
  m.add(Label::Human, Label::Machine);
  m.add(Label::Human, Label::Human);
  EXPECT_EQ(m, (ConfusionMatrix{1, 1, 1, 1}));
  m += m;
  EXPECT_EQ(m.total(), 8u);
}

TEST(Evaluate, FourSecondFilesGiveEightFramesEach) {
  SignScorer scorer;
  ConfusionMatrix total;
  std::size_t frames = 0;
  for (int i = 0; i < 425; ++i) {
    const LabeledStream s{"f" + std::to_string(i), i % 2 ? Label::Machine : Label::Human,
                          level(4000, i % 3 ? 0.1f : -0.1f)};
    const auto r = evaluate_streams(std::span(&s, 1), scorer);
    total += r.matrix;
    frames += r.frames;
  }
  EXPECT_EQ(frames, 3400u);
  EXPECT_EQ(total.total(), 3400u);
}

TEST(Evaluate, PerfectPredictorScoresOne) {
  std::vector<LabeledStream> streams{{"m", Label::Machine, level(4000, 0.2f)}, {"h", Label::Human, level(4000, 0.2f)}};
  ConfusionMatrix m;
  for (const auto& s : streams) {
    OracleScorer oracle(s.label);
    m += evaluate_streams(std::span(&s, 1), oracle).matrix;
  }
  EXPECT_EQ(m.accuracy().value(), 1.0);
  EXPECT_EQ(m.precision().value(), 1.0);
  EXPECT_EQ(m.sensitivity().value(), 1.0);
  EXPECT_EQ(m.specificity().value(), 1.0);
}

TEST(Evaluate, OrderIndependent) {
  std::vector<LabeledStream> streams;
  std::mt19937 rng(9);
  std::uniform_int_distribution<int> dur(300, 5000);
  for (int i = 0; i < 20; ++i)
    streams.push_back({"s" + std::to_string(i), i % 3 ? Label::Machine : Label::Human,
                       level(static_cast<std::size_t>(dur(rng)), i % 2 ? 0.3f : -0.3f)});
  SignScorer scorer;
  const auto a = evaluate_streams(streams, scorer).matrix;
  std::shuffle(streams.begin(), streams.end(), rng);
  EXPECT_EQ(evaluate_streams(streams, scorer).matrix, a);
}

TEST(Evaluate, SilencePolicies) {
  auto samples = level(960, 0.0f);
  const auto loud = level(1440, 0.3f);
  samples.insert(samples.end(), loud.begin(), loud.end());  // 2.4 s: frames 0 silent, 1..3 loud
  const std::vector<LabeledStream> s{{"x", Label::Machine, samples}};
  SignScorer scorer;
  const auto off = evaluate_streams(s, scorer, SilencePolicy::Off);
  const auto excl = evaluate_streams(s, scorer, SilencePolicy::Exclude);
  const auto last = evaluate_streams(s, scorer, SilencePolicy::CountAsLast);
  EXPECT_EQ(off.matrix.total(), 4u);
  EXPECT_EQ(excl.matrix.total(), 3u);
  EXPECT_EQ(excl.frames_silent, 1u);
  EXPECT_EQ(last.matrix.total(), 4u);
}

TEST(Evaluate, DatasetWithManifest) {
  TempDir dir;
  auto tone = [](float v) { return PcmChunk::from_s16(std::vector<std::int16_t>(4000 * 16, static_cast<std::int16_t>(v))); };
  wav::write((dir.path / "a.wav").string(), tone(3000));
  fs::create_directories(dir.path / "sub");
  wav::write((dir.path / "sub" / "b.wav").string(), tone(-3000));
  const auto manifest = dir.path / "labels.csv";
  write_manifest(manifest, "path,label\na.wav,MACHINE\nsub/b.wav,human\n");

  SignScorer scorer;
  const auto r = evaluate(dir.path.string(), manifest.string(), scorer);
  EXPECT_EQ(r.files, 2u);
  EXPECT_EQ(r.matrix, (ConfusionMatrix{8, 0, 0, 8}));

  write_manifest(manifest, "a.wav,MACHINE\n");
  EXPECT_THROW(evaluate(dir.path.string(), manifest.string(), scorer), MissingLabel);

  write_manifest(manifest, "a.wav,MACHINE\nsub/b.wav,HUMAN\nmissing.wav,HUMAN\n");
  EXPECT_THROW(evaluate(dir.path.string(), manifest.string(), scorer), UnreadableFile);

  std::ofstream(dir.path / "junk.wav") << "not a wav";
  write_manifest(manifest, "a.wav,1\nsub/b.wav,0\njunk.wav,0\n");
  EXPECT_THROW(evaluate(dir.path.string(), manifest.string(), scorer), UnreadableFile);

  write_manifest(manifest, "a.wav,MAYBE\n");
  EXPECT_THROW(read_manifest(manifest.string()), MissingLabel);
}

TEST(Bench, TrimmedMean) {
  std::vector<double> ranks(100);
  std::iota(ranks.begin(), ranks.end(), 1.0);
  EXPECT_DOUBLE_EQ(trimmed_mean(ranks), 50.5);
  std::shuffle(ranks.begin(), ranks.end(), std::mt19937(1));
  EXPECT_DOUBLE_EQ(trimmed_mean(ranks), 50.5);
  EXPECT_DOUBLE_EQ(trimmed_mean(std::vector<double>(250, 10.0)), 10.0);
  ranks[0] = 1e9;  // an outlier in the top 2% is dropped
  EXPECT_LT(trimmed_mean(ranks), 100.0);
}

TEST(Bench, ReportsEveryComponent) {
  auto bundle = synthetic::test_backend();
  bundle.merge(synthetic::random_classifier(42).to_bundle());
  const auto model = DetectionModel::from_bundle(bundle);
  const auto r = bench(*model, 100);
  EXPECT_EQ(r.samples.size(), 400u);
  EXPECT_EQ(r.trimmed_mean_us.size(), 4u);
  for (const auto& s : r.samples) EXPECT_GE(s.duration_us, 0.0);
  const auto csv = r.csv();
  EXPECT_EQ(csv.rfind("component,frame_index,duration_us\n", 0), 0u);
  EXPECT_NE(csv.find("LOGMEL+BACKBONE,99,"), std::string::npos);
  EXPECT_NE(csv.find("SILENCE,0,"), std::string::npos);
}
