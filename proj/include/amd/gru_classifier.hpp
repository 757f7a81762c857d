#pragma once

// Classifier head: Dense(tanh) -> GRU(reset-after) -> Dense(sigmoid).
//
// Gate blocks in the GRU kernels are ordered z, r, h. The reset gate is
// applied after the recurrent product, so each gate has an input bias and a
// recurrent bias:
//   z  = sigmoid(W_z x + b_z + U_z h + c_z)
//   r  = sigmoid(W_r x + b_r + U_r h + c_r)
//   h~ = tanh(W_h x + b_h + r * (U_h h + c_h))
//   h' = z * h + (1 - z) * h~
// Output 0 means HUMAN, 1 means MACHINE.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "amd/backbone.hpp"
#include "amd/errors.hpp"
#include "amd/weight_bundle.hpp"

namespace amd {

struct ClassifierDims {
  std::size_t input = kEmbeddingWidth;
  std::size_t dense = 32;
  std::size_t gru = 48;
  std::size_t output = 1;
};

inline constexpr std::size_t kClassifierParameters = 44657;

inline std::size_t parameter_count(const ClassifierDims& d) {
  return (d.input * d.dense + d.dense) + 3 * (d.dense * d.gru + d.gru * d.gru + 2 * d.gru) +
         (d.gru * d.output + d.output);
}

struct ClassifierWeights {
  ClassifierDims dims;
  std::vector<float> dense1_kernel;         // [input, dense]
  std::vector<float> dense1_bias;           // [dense]
  std::vector<float> gru_input_kernel;      // [dense, 3*gru]
  std::vector<float> gru_recurrent_kernel;  // [gru, 3*gru]
  std::vector<float> gru_input_bias;        // [3*gru]
  std::vector<float> gru_recurrent_bias;    // [3*gru]
  std::vector<float> dense2_kernel;         // [gru, output]
  std::vector<float> dense2_bias;           // [output]

  /// All-zero weights of the given dimensions.
  static ClassifierWeights zeros(const ClassifierDims& d = {}) {
    ClassifierWeights w;
    w.dims = d;
    w.dense1_kernel.assign(d.input * d.dense, 0.0f);
    w.dense1_bias.assign(d.dense, 0.0f);
    w.gru_input_kernel.assign(d.dense * 3 * d.gru, 0.0f);
    w.gru_recurrent_kernel.assign(d.gru * 3 * d.gru, 0.0f);
    w.gru_input_bias.assign(3 * d.gru, 0.0f);
    w.gru_recurrent_bias.assign(3 * d.gru, 0.0f);
    w.dense2_kernel.assign(d.gru * d.output, 0.0f);
    w.dense2_bias.assign(d.output, 0.0f);
    return w;
  }

  std::size_t size() const {
    return dense1_kernel.size() + dense1_bias.size() + gru_input_kernel.size() + gru_recurrent_kernel.size() +
           gru_input_bias.size() + gru_recurrent_bias.size() + dense2_kernel.size() + dense2_bias.size();
  }

  /// Checks every tensor against dims; throws ShapeError.
  void validate() const {
    const auto& d = dims;
    auto check = [](const std::vector<float>& v, std::size_t n, const char* name) {
      if (v.size() != n)
        throw ShapeError(std::string(name) + " has " + std::to_string(v.size()) + " values, expected " +
                         std::to_string(n));
      for (float x : v)
        if (!std::isfinite(x)) throw ShapeError(std::string(name) + " contains non-finite values");
    };
    check(dense1_kernel, d.input * d.dense, "dense1.kernel");
    check(dense1_bias, d.dense, "dense1.bias");
    check(gru_input_kernel, d.dense * 3 * d.gru, "gru.kernel");
    check(gru_recurrent_kernel, d.gru * 3 * d.gru, "gru.recurrent_kernel");
    check(gru_input_bias, 3 * d.gru, "gru.input_bias");
    check(gru_recurrent_bias, 3 * d.gru, "gru.recurrent_bias");
    check(dense2_kernel, d.gru * d.output, "dense2.kernel");
    check(dense2_bias, d.output, "dense2.bias");
    if (size() != parameter_count(d)) throw ShapeError("classifier parameter count mismatch");
  }

  WeightBundle to_bundle() const {
    WeightBundle b;
    const auto& d = dims;
    b.add("dense1.kernel", {{d.input, d.dense}, dense1_kernel});
    b.add("dense1.bias", {{d.dense}, dense1_bias});
    b.add("gru.kernel", {{d.dense, 3 * d.gru}, gru_input_kernel});
    b.add("gru.recurrent_kernel", {{d.gru, 3 * d.gru}, gru_recurrent_kernel});
    b.add("gru.input_bias", {{3 * d.gru}, gru_input_bias});
    b.add("gru.recurrent_bias", {{3 * d.gru}, gru_recurrent_bias});
    b.add("dense2.kernel", {{d.gru, d.output}, dense2_kernel});
    b.add("dense2.bias", {{d.output}, dense2_bias});
    return b;
  }
};

struct ClassifierState {
  std::vector<float> hidden;
  std::uint64_t frames_seen = 0;

  static ClassifierState fresh(const ClassifierDims& d = {}) { return {std::vector<float>(d.gru, 0.0f), 0}; }

  bool operator==(const ClassifierState&) const = default;
};

/// Loads the full-size head (1024, 32, 48, 1) from a bundle.
inline ClassifierWeights load_classifier(const WeightBundle& bundle) {
  const ClassifierDims d{};
  auto take = [&](const char* name, std::vector<std::size_t> shape) {
    const Tensor& t = bundle.get(name);
    if (t.shape != shape) {
      std::string got;
      for (auto s : t.shape) got += (got.empty() ? "" : "x") + std::to_string(s);
      throw ShapeError(std::string(name) + " has shape " + got);
    }
    return t.data;
  };
  ClassifierWeights w;
  w.dims = d;
  w.dense1_kernel = take("dense1.kernel", {d.input, d.dense});
  w.dense1_bias = take("dense1.bias", {d.dense});
  w.gru_input_kernel = take("gru.kernel", {d.dense, 3 * d.gru});
  w.gru_recurrent_kernel = take("gru.recurrent_kernel", {d.gru, 3 * d.gru});
  w.gru_input_bias = take("gru.input_bias", {3 * d.gru});
  w.gru_recurrent_bias = take("gru.recurrent_bias", {3 * d.gru});
  w.dense2_kernel = take("dense2.kernel", {d.gru, d.output});
  w.dense2_bias = take("dense2.bias", {d.output});
  w.validate();
  if (w.size() != kClassifierParameters) throw ShapeError("classifier must have 44657 parameters");
  return w;
}

namespace detail {

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// y[j] = b[j] + sum_i x[i] * K[i][j], K row-major [x.size(), y.size()]
inline void affine(std::span<const float> x, const std::vector<float>& kernel, const std::vector<float>& bias,
                   std::span<double> y) {
  const std::size_t n = bias.size();
  for (std::size_t j = 0; j < n; ++j) y[j] = bias[j];
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    const float* row = kernel.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) y[j] += v * static_cast<double>(row[j]);
  }
}

}  // namespace detail

/// One recurrent step. Returns the MACHINE probability and advances state.
inline double step(const ClassifierWeights& w, ClassifierState& state, std::span<const float> embedding) {
  const auto& d = w.dims;
  if (embedding.size() != d.input) throw ShapeError("embedding width mismatch");
  for (float v : embedding)
    if (!std::isfinite(v)) throw NonFiniteInput("embedding contains non-finite values");
  if (state.hidden.size() != d.gru) throw ShapeError("classifier state width mismatch");

  std::vector<double> acc(3 * d.gru);
  std::vector<float> x(d.dense);
  detail::affine(embedding, w.dense1_kernel, w.dense1_bias, std::span(acc).first(d.dense));
  for (std::size_t i = 0; i < d.dense; ++i) x[i] = static_cast<float>(std::tanh(acc[i]));

  std::vector<double> gx(3 * d.gru), gh(3 * d.gru);
  detail::affine(x, w.gru_input_kernel, w.gru_input_bias, gx);
  detail::affine(state.hidden, w.gru_recurrent_kernel, w.gru_recurrent_bias, gh);

  std::vector<float> next(d.gru);
  for (std::size_t j = 0; j < d.gru; ++j) {
    const double z = detail::sigmoid(gx[j] + gh[j]);
    const double r = detail::sigmoid(gx[d.gru + j] + gh[d.gru + j]);
    const double cand = std::tanh(gx[2 * d.gru + j] + r * gh[2 * d.gru + j]);
    next[j] = static_cast<float>(z * state.hidden[j] + (1.0 - z) * cand);
  }
  state.hidden = std::move(next);
  ++state.frames_seen;

  std::vector<double> out(d.output);
  detail::affine(state.hidden, w.dense2_kernel, w.dense2_bias, out);
  return detail::sigmoid(out[0]);
}

inline double step(const ClassifierWeights& w, ClassifierState& state, const Embedding& e) {
  return step(w, state, std::span<const float>(e.values));
}

/// Stateless re-inference over a cached embedding sequence.
inline double run_sequence(const ClassifierWeights& w, std::span<const Embedding> embeddings) {
  if (embeddings.empty()) throw EmptySequence("run_sequence needs at least one embedding");
  auto state = ClassifierState::fresh(w.dims);
  double p = 0.5;
  for (const auto& e : embeddings) p = step(w, state, e);
  return p;
}

}  // namespace amd
