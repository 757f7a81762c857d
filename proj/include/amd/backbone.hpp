#pragma once

// Embedding backbone: a small interpreter for depthwise-separable conv nets
// whose batch norms were folded into the conv weights at export time.

#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "amd/errors.hpp"
#include "amd/logmel.hpp"
#include "amd/nn_kernels.hpp"
#include "amd/weight_bundle.hpp"

namespace amd {

inline constexpr std::size_t kEmbeddingWidth = 1024;

struct Embedding {
  std::vector<float> values = std::vector<float>(kEmbeddingWidth, 0.0f);

  bool all_finite() const {
    for (float v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

struct Conv2DLayer {
  Tensor kernel;  // [kh, kw, cin, cout]
  Tensor bias;
  std::size_t stride = 1;
  nn::Activation activation = nn::Activation::Relu;
};

struct DepthwiseConv2DLayer {
  Tensor kernel;  // [kh, kw, c, 1]
  Tensor bias;
  std::size_t stride = 1;
  nn::Activation activation = nn::Activation::Relu;
};

struct GlobalAvgPoolLayer {};

struct DenseLayer {
  Tensor kernel;  // [in, out]
  Tensor bias;
  nn::Activation activation = nn::Activation::None;
};

using BackboneLayer = std::variant<Conv2DLayer, DepthwiseConv2DLayer, GlobalAvgPoolLayer, DenseLayer>;

class BackboneGraph {
 public:
  BackboneGraph(std::vector<BackboneLayer> layers) : layers_(std::move(layers)) {}

  const std::vector<BackboneLayer>& layers() const { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) {
      std::visit(
          [&](const auto& layer) {
            if constexpr (!std::is_same_v<std::decay_t<decltype(layer)>, GlobalAvgPoolLayer>)
              n += layer.kernel.data.size() + layer.bias.data.size();
          },
          l);
    }
    return n;
  }

  Embedding embed(const LogMelPatch& patch) const {
    nn::Feature<float> x;
    x.height = kPatchFrames;
    x.width = kMelBands;
    x.channels = 1;
    x.data = std::vector<float>(patch.values.begin(), patch.values.end());
    for (const auto& l : layers_) x = std::visit([&](const auto& layer) { return apply(layer, x); }, l);
    Embedding e;
    e.values = std::move(x.data);
    return e;
  }

 private:
  static nn::Feature<float> apply(const Conv2DLayer& l, const nn::Feature<float>& x) {
    const auto& s = l.kernel.shape;
    return nn::conv2d_same<float>(x, l.kernel.data, l.bias.data, s[0], s[1], s[3], l.stride, l.activation);
  }
  static nn::Feature<float> apply(const DepthwiseConv2DLayer& l, const nn::Feature<float>& x) {
    const auto& s = l.kernel.shape;
    return nn::depthwise_conv2d_same<float>(x, l.kernel.data, l.bias.data, s[0], s[1], l.stride, l.activation);
  }
  static nn::Feature<float> apply(const GlobalAvgPoolLayer&, const nn::Feature<float>& x) {
    return nn::global_avg_pool(x);
  }
  static nn::Feature<float> apply(const DenseLayer& l, const nn::Feature<float>& x) {
    nn::Feature<float> y(1, 1, l.bias.data.size());
    y.data = nn::dense<float>(x.data, l.kernel.data, l.bias.data, l.activation);
    return y;
  }

  std::vector<BackboneLayer> layers_;
};

namespace detail {

inline nn::Activation parse_activation(const nlohmann::json& layer, nn::Activation fallback) {
  if (!layer.contains("activation")) return fallback;
  const auto a = layer["activation"].get<std::string>();
  if (a == "none" || a == "linear") return nn::Activation::None;
  if (a == "relu") return nn::Activation::Relu;
  if (a == "tanh") return nn::Activation::Tanh;
  throw FormatError("unknown activation '" + a + "'");
}

inline std::size_t parse_stride(const nlohmann::json& layer) {
  const auto s = layer.value("stride", 1);
  if (s != 1 && s != 2) throw ShapeError("stride must be 1 or 2");
  return static_cast<std::size_t>(s);
}

}  // namespace detail

/// Builds a shape-checked graph from the bundle's backbone description.
inline BackboneGraph load_backbone(const WeightBundle& bundle) {
  if (!bundle.backbone()) throw FormatError("bundle does not describe a backbone");
  const auto& spec = *bundle.backbone();
  std::vector<BackboneLayer> layers;
  std::size_t h = kPatchFrames, w = kMelBands, c = 1;
  try {
    if (spec.contains("input_shape")) {
      const auto in = spec["input_shape"].get<std::vector<std::size_t>>();
      if (in != std::vector<std::size_t>{kPatchFrames, kMelBands, 1})
        throw ShapeError("backbone input shape must be 96 x 64 x 1");
    }
    const auto& list = spec.at("layers");
    if (!list.is_array() || list.empty()) throw ShapeError("backbone has no layers");
    for (const auto& layer : list) {
      const auto type = layer.at("type").get<std::string>();
      if (type == "global_avg_pool") {
        layers.emplace_back(GlobalAvgPoolLayer{});
        h = w = 1;
        continue;
      }
      const Tensor& kernel = bundle.get(layer.at("kernel").get<std::string>());
      const Tensor& bias = bundle.get(layer.at("bias").get<std::string>());
      const auto& ks = kernel.shape;
      if (type == "conv2d") {
        if (ks.size() != 4 || ks[2] != c || bias.shape != std::vector<std::size_t>{ks[3]})
          throw ShapeError("conv2d kernel incompatible with " + std::to_string(c) + " input channels");
        Conv2DLayer l{kernel, bias, detail::parse_stride(layer), detail::parse_activation(layer, nn::Activation::Relu)};
        h = (h + l.stride - 1) / l.stride;
        w = (w + l.stride - 1) / l.stride;
        c = ks[3];
        layers.emplace_back(std::move(l));
      } else if (type == "depthwise_conv2d") {
        if (ks.size() != 4 || ks[2] != c || ks[3] != 1 || bias.shape != std::vector<std::size_t>{c})
          throw ShapeError("depthwise kernel incompatible with " + std::to_string(c) + " channels");
        DepthwiseConv2DLayer l{kernel, bias, detail::parse_stride(layer),
                               detail::parse_activation(layer, nn::Activation::Relu)};
        h = (h + l.stride - 1) / l.stride;
        w = (w + l.stride - 1) / l.stride;
        layers.emplace_back(std::move(l));
      } else if (type == "dense") {
        if (ks.size() != 2 || ks[0] != h * w * c || bias.shape != std::vector<std::size_t>{ks[1]})
          throw ShapeError("dense kernel expects " + std::to_string(h * w * c) + " inputs");
        layers.emplace_back(DenseLayer{kernel, bias, detail::parse_activation(layer, nn::Activation::None)});
        h = w = 1;
        c = ks[1];
      } else {
        throw FormatError("unknown backbone layer type '" + type + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed backbone description: ") + e.what());
  }
  if (h * w * c != kEmbeddingWidth)
    throw ShapeError("backbone output width " + std::to_string(h * w * c) + ", expected 1024");
  return BackboneGraph(std::move(layers));
}

}  // namespace amd
