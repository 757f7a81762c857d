// amd: offline classification, evaluation, benchmarking, dataset prep and
// the serving gateway.

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "amd/amd.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ModelOptions {
  std::string weights;
  std::string backbone;
};

void add_model_options(CLI::App* cmd, ModelOptions& o) {
  cmd->add_option("--weights", o.weights, "weight bundle (classifier, optionally backbone)")->required();
  cmd->add_option("--backbone", o.backbone, "separate bundle holding the backbone");
}

std::shared_ptr<const amd::DetectionModel> load_model(const ModelOptions& o) {
  auto bundle = amd::WeightBundle::read_file(o.weights);
  if (!o.backbone.empty()) bundle.merge(amd::WeightBundle::read_file(o.backbone));
  return amd::DetectionModel::from_bundle(bundle);
}

void add_param_options(CLI::App* cmd, amd::SessionParams& p) {
  cmd->add_option("--timeout-ms", p.timeout_ms, "give up after this much audio")->capture_default_str();
  cmd->add_option("--confidence", p.confidence_threshold, "stop once confidence reaches this")->capture_default_str();
  cmd->add_option("--min-detection-ms", p.min_detection_time_ms, "never stop before this much audio")
      ->capture_default_str();
  cmd->add_option("--silence-db", p.silence.threshold_dbfs, "frames below this dBFS skip inference")
      ->capture_default_str();
}

amd::InferenceMode parse_mode(const std::string& s) {
  return s == "stateful" ? amd::InferenceMode::Stateful : amd::InferenceMode::Cached;
}

int run_classify(const ModelOptions& mo, const std::string& input, const amd::SessionParams& params,
                 const std::string& mode, int chunk_ms) {
  auto model = load_model(mo);
  const auto audio = amd::wav::read(input);
  amd::DetectionSession session(model, params, parse_mode(mode), audio.sample_rate_hz);
  const std::size_t step = static_cast<std::size_t>(audio.sample_rate_hz) * static_cast<std::size_t>(chunk_ms) / 1000;

  auto print = [](const amd::SessionOutput& out) {
    for (const auto& r : out.frames) std::cout << json{{"type", "frame"}, {"result", amd::to_json(r)}}.dump() << '\n';
    if (out.verdict) std::cout << json{{"type", "verdict"}, {"verdict", amd::to_json(*out.verdict)}}.dump() << '\n';
  };
  std::visit(
      [&](const auto& samples) {
        using Vec = std::decay_t<decltype(samples)>;
        for (std::size_t i = 0; i < samples.size() && !session.finalized(); i += step) {
          Vec part(samples.begin() + static_cast<std::ptrdiff_t>(i),
                   samples.begin() + static_cast<std::ptrdiff_t>(std::min(samples.size(), i + step)));
          print(session.push_audio(amd::PcmChunk{std::move(part), audio.sample_rate_hz, 1}));
        }
      },
      audio.samples);
  print(session.end_stream());
  return 0;
}

int run_eval(const ModelOptions& mo, const std::string& dataset, const std::string& manifest, bool silence,
             bool count_silent, double silence_db) {
  amd::eval::ModelScorer scorer(load_model(mo));
  amd::SilenceConfig cfg;
  cfg.threshold_dbfs = silence_db;
  cfg.validate();
  auto policy = amd::eval::SilencePolicy::Off;
  if (silence) policy = count_silent ? amd::eval::SilencePolicy::CountAsLast : amd::eval::SilencePolicy::Exclude;
  const auto r = amd::eval::evaluate(dataset, manifest, scorer, policy, cfg);
  const auto& m = r.matrix;
  json out{{"files", r.files},
           {"frames", r.frames},
           {"frames_silent", r.frames_silent},
           {"confusion", {{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}, {"total", m.total()}}},
           {"accuracy", m.accuracy().value()},
           {"precision", m.precision().value()},
           {"sensitivity", m.sensitivity().value()},
           {"specificity", m.specificity().value()}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int run_bench(const ModelOptions& mo, std::size_t frames, const std::string& out_path) {
  if (frames < 100) throw amd::BadParams("bench needs at least 100 frames");
  auto model = load_model(mo);
  const auto report = amd::eval::bench(*model, frames);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw amd::UnreadableFile("cannot write '" + out_path + "'");
    out << report.csv();
  }
  json means;
  for (const auto& [c, v] : report.trimmed_mean_us) means[amd::eval::to_string(c)] = v / 1000.0;
  std::cout << json{{"frames", frames}, {"trimmed_mean_ms", means}}.dump(2) << '\n';
  return 0;
}

int run_prep(const std::string& in_dir, const std::string& out_dir, std::int64_t target_ms) {
  std::size_t count = 0;
  for (const auto& e : fs::recursive_directory_iterator(in_dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".wav") continue;
    auto chunk = amd::wav::read(e.path().string());
    amd::PcmChunk out;
    out.sample_rate_hz = amd::kSampleRateHz;
    if (chunk.sample_rate_hz == amd::kSampleRateHz) {
      std::visit(
          [&](const auto& s) {
            using T = typename std::decay_t<decltype(s)>::value_type;
            out.samples = amd::eval::pad_or_trim<T>(s, target_ms);
          },
          chunk.samples);
    } else {
      const auto unit = amd::eval::load_unit_16k(e.path().string());
      out.samples = amd::eval::pad_or_trim<float>(unit, target_ms);
    }
    const auto dest = fs::path(out_dir) / fs::relative(e.path(), in_dir);
    fs::create_directories(dest.parent_path());
    amd::wav::write(dest.string(), out);
    ++count;
  }
  std::cout << json{{"files", count}, {"target_ms", target_ms}}.dump() << '\n';
  return 0;
}

std::atomic<bool> g_stop{false};

int run_serve(const ModelOptions& mo, const std::string& listen, const std::string& mode) {
  auto model = load_model(mo);
  amd::Gateway gateway(model, parse_mode(mode));
  amd::GatewayServer server(gateway);
  const auto port = server.start(listen);
  std::cerr << "amd gateway listening on port " << port << " (" << mode << " mode)\n";
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

int run_make_bundle(const std::string& out, std::uint64_t seed, std::uint64_t classifier_seed, bool mobilenet) {
  auto bundle = mobilenet ? amd::synthetic::mobilenet_backbone(seed) : amd::synthetic::test_backend(seed);
  bundle.merge(amd::synthetic::random_classifier(classifier_seed).to_bundle());
  bundle.write_file(out);
  std::cout << json{{"out", out}, {"tensors", bundle.names().size()}}.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Real-time answering machine detection"};
  app.require_subcommand(1);

  ModelOptions model;
  amd::SessionParams params;

  std::string input, mode = "cached";
  int chunk_ms = 20;
  auto* classify = app.add_subcommand("classify", "classify one WAV file as a streamed call");
  classify->add_option("--input", input, "WAV file (mono, 8 or 16 kHz)")->required()->check(CLI::ExistingFile);
  add_model_options(classify, model);
  add_param_options(classify, params);
  classify->add_option("--mode", mode, "stateful|cached")->check(CLI::IsMember({"stateful", "cached"}));
  classify->add_option("--chunk-ms", chunk_ms, "streaming chunk size")->check(CLI::PositiveNumber);

  std::string dataset, manifest;
  bool silence = false, count_silent = false;
  double silence_db = -50.0;
  auto* evaluate = app.add_subcommand("eval", "per-frame confusion matrix over a labelled dataset");
  evaluate->add_option("--dataset", dataset, "directory of WAV files")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--manifest", manifest, "CSV path,label")->required()->check(CLI::ExistingFile);
  add_model_options(evaluate, model);
  evaluate->add_flag("--silence", silence, "exclude silent frames");
  evaluate->add_flag("--count-silent", count_silent, "with --silence, score silent frames as the last label");
  evaluate->add_option("--silence-db", silence_db, "silence threshold in dBFS")->capture_default_str();

  std::size_t frames = 1000;
  std::string out_csv;
  auto* bench = app.add_subcommand("bench", "per-component latency benchmark");
  add_model_options(bench, model);
  bench->add_option("--frames", frames, "frames to time (>= 100)")->capture_default_str();
  bench->add_option("--out", out_csv, "CSV of raw samples");

  std::string in_dir, out_dir;
  std::int64_t target_ms = 4000;
  auto* prep = app.add_subcommand("prep", "clip or zero-pad WAV files to equal duration");
  prep->add_option("--in", in_dir, "source directory")->required()->check(CLI::ExistingDirectory);
  prep->add_option("--out", out_dir, "destination directory")->required();
  prep->add_option("--target-ms", target_ms, "output duration")->capture_default_str();

  std::string listen = "127.0.0.1:7070";
  auto* serve = app.add_subcommand("serve", "run the multi-session gateway");
  serve->add_option("--listen", listen, "host:port")->capture_default_str();
  add_model_options(serve, model);
  serve->add_option("--mode", mode, "stateful|cached")->check(CLI::IsMember({"stateful", "cached"}));

  std::string bundle_out;
  std::uint64_t seed = 1234, classifier_seed = 42;
  bool mobilenet = false;
  auto* make = app.add_subcommand("make-test-bundle", "write a deterministic synthetic weight bundle");
  make->add_option("--out", bundle_out, "output path")->required();
  make->add_option("--seed", seed, "backbone seed")->capture_default_str();
  make->add_option("--classifier-seed", classifier_seed, "classifier seed")->capture_default_str();
  make->add_flag("--mobilenet", mobilenet, "full-size depthwise-separable backbone instead of the dense test one");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*classify) return run_classify(model, input, params, mode, chunk_ms);
    if (*evaluate) return run_eval(model, dataset, manifest, silence, count_silent, silence_db);
    if (*bench) return run_bench(model, frames, out_csv);
    if (*prep) return run_prep(in_dir, out_dir, target_ms);
    if (*serve) return run_serve(model, listen, mode);
    if (*make) return run_make_bundle(bundle_out, seed, classifier_seed, mobilenet);
  } catch (const amd::Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
