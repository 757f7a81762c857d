#pragma once

// Deterministic weight bundles built from a seed: the single-dense test
// backend used in CI, a full-size depthwise-separable backbone for latency
// measurements, and random classifier heads.
//
// Values come from counter-form splitmix64 so any implementation can
// regenerate them bit for bit:
//   z_i = seed + (i + 1) * 0x9E3779B97F4A7C15  (mod 2^64), then the splitmix64
//   finalizer; u_i = (z_i >> 11) * 2^-53; value_i = float((2 u_i - 1) * scale).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "amd/gru_classifier.hpp"
#include "amd/weight_bundle.hpp"

namespace amd::synthetic {

inline std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::vector<float> uniform(std::uint64_t seed, std::size_t count, double scale) {
  std::vector<float> v(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = static_cast<double>(splitmix64(seed, i) >> 11) * 0x1.0p-53;
    v[i] = static_cast<float>((2.0 * u - 1.0) * scale);
  }
  return v;
}

inline Tensor uniform_tensor(std::vector<std::size_t> shape, std::uint64_t seed, double scale) {
  Tensor t{std::move(shape), {}};
  t.data = uniform(seed, t.element_count(), scale);
  return t;
}

/// One dense layer 6144 -> 1024 with tanh over the flattened patch.
inline WeightBundle test_backend(std::uint64_t seed = 1234) {
  WeightBundle b;
  b.add("backend.kernel", uniform_tensor({6144, 1024}, seed, 0.01));
  b.add("backend.bias", uniform_tensor({1024}, seed + 1, 0.1));
  b.set_backbone({{"input_shape", {96, 64, 1}},
                  {"layers", {{{"type", "dense"},
                               {"activation", "tanh"},
                               {"kernel", "backend.kernel"},
                               {"bias", "backend.bias"}}}}});
  return b;
}

/// Random weights in the layout of a MobileNet-v1 style audio backbone
/// (3x3 stem, 13 depthwise-separable blocks, global average pool to 1024).
/// Only the shapes are meaningful; used for latency measurement.
inline WeightBundle mobilenet_backbone(std::uint64_t seed = 99) {
  struct Block {
    std::size_t stride, out;
  };
  const Block blocks[] = {{1, 64},  {2, 128}, {1, 128}, {2, 256}, {1, 256}, {2, 512},  {1, 512},
                          {1, 512}, {1, 512}, {1, 512}, {1, 512}, {2, 1024}, {1, 1024}};
  WeightBundle b;
  nlohmann::json layers = nlohmann::json::array();
  std::uint64_t s = seed;
  auto add = [&](const std::string& name, std::vector<std::size_t> shape, std::size_t fan_in) {
    b.add(name + ".kernel", uniform_tensor(shape, s++, std::sqrt(6.0 / static_cast<double>(fan_in))));
    b.add(name + ".bias", uniform_tensor({shape.back() == 1 ? shape[2] : shape.back()}, s++, 0.01));
  };
  add("stem", {3, 3, 1, 32}, 9);
  layers.push_back({{"type", "conv2d"}, {"stride", 2}, {"activation", "relu"}, {"kernel", "stem.kernel"}, {"bias", "stem.bias"}});
  std::size_t c = 32;
  for (std::size_t i = 0; i < std::size(blocks); ++i) {
    const auto dw = "block" + std::to_string(i) + ".dw";
    const auto pw = "block" + std::to_string(i) + ".pw";
    add(dw, {3, 3, c, 1}, 9);
    add(pw, {1, 1, c, blocks[i].out}, c);
    layers.push_back({{"type", "depthwise_conv2d"}, {"stride", blocks[i].stride}, {"activation", "relu"},
                      {"kernel", dw + ".kernel"}, {"bias", dw + ".bias"}});
    layers.push_back({{"type", "conv2d"}, {"stride", 1}, {"activation", "relu"},
                      {"kernel", pw + ".kernel"}, {"bias", pw + ".bias"}});
    c = blocks[i].out;
  }
  layers.push_back({{"type", "global_avg_pool"}});
  b.set_backbone({{"input_shape", {96, 64, 1}}, {"layers", layers}});
  return b;
}

inline ClassifierWeights random_classifier(std::uint64_t seed, double scale = 0.25, const ClassifierDims& d = {}) {
  auto w = ClassifierWeights::zeros(d);
  w.dense1_kernel = uniform(seed, w.dense1_kernel.size(), scale);
  w.dense1_bias = uniform(seed + 1, w.dense1_bias.size(), scale);
  w.gru_input_kernel = uniform(seed + 2, w.gru_input_kernel.size(), scale);
  w.gru_recurrent_kernel = uniform(seed + 3, w.gru_recurrent_kernel.size(), scale);
  w.gru_input_bias = uniform(seed + 4, w.gru_input_bias.size(), scale);
  w.gru_recurrent_bias = uniform(seed + 5, w.gru_recurrent_bias.size(), scale);
  w.dense2_kernel = uniform(seed + 6, w.dense2_kernel.size(), scale);
  w.dense2_bias = uniform(seed + 7, w.dense2_bias.size(), scale);
  return w;
}

}  // namespace amd::synthetic
