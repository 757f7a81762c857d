#pragma once

// Dense, convolution and pooling kernels over HWC tensors. Templated on the
// storage scalar; dot products always accumulate in double.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace amd::nn {

enum class Activation { None, Relu, Tanh };

template <typename T>
struct Feature {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<T> data;  // row-major H x W x C

  Feature() = default;
  Feature(std::size_t h, std::size_t w, std::size_t c) : height(h), width(w), channels(c), data(h * w * c) {}

  std::size_t size() const { return data.size(); }
  T& at(std::size_t y, std::size_t x, std::size_t ch) { return data[(y * width + x) * channels + ch]; }
  const T& at(std::size_t y, std::size_t x, std::size_t ch) const { return data[(y * width + x) * channels + ch]; }
};

/// SAME padding: output = ceil(input / stride), extra padding goes after.
struct SamePadding {
  std::size_t out = 0;
  std::size_t before = 0;

  static SamePadding compute(std::size_t in, std::size_t kernel, std::size_t stride) {
    SamePadding p;
    p.out = (in + stride - 1) / stride;
    const std::size_t span = (p.out - 1) * stride + kernel;
    p.before = span > in ? (span - in) / 2 : 0;
    return p;
  }
};

inline double activate(double v, Activation a) {
  switch (a) {
    case Activation::Relu: return v > 0.0 ? v : 0.0;
    case Activation::Tanh: return std::tanh(v);
    case Activation::None: break;
  }
  return v;
}

/// kernel layout [kh, kw, cin, cout]
template <typename T>
Feature<T> conv2d_same(const Feature<T>& in, std::span<const T> kernel, std::span<const T> bias, std::size_t kh,
                       std::size_t kw, std::size_t cout, std::size_t stride, Activation act) {
  const std::size_t cin = in.channels;
  if (kernel.size() != kh * kw * cin * cout || bias.size() != cout)
    throw std::invalid_argument("conv2d weight size mismatch");
  const auto py = SamePadding::compute(in.height, kh, stride);
  const auto px = SamePadding::compute(in.width, kw, stride);
  Feature<T> out(py.out, px.out, cout);
  std::vector<double> acc(cout);
  for (std::size_t oy = 0; oy < py.out; ++oy) {
    for (std::size_t ox = 0; ox < px.out; ++ox) {
      for (std::size_t co = 0; co < cout; ++co) acc[co] = static_cast<double>(bias[co]);
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(py.before);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in.height)) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const std::ptrdiff_t ix =
              static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(px.before);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in.width)) continue;
          const T* src = &in.data[(static_cast<std::size_t>(iy) * in.width + static_cast<std::size_t>(ix)) * cin];
          const T* w = kernel.data() + (ky * kw + kx) * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const double v = static_cast<double>(src[ci]);
            const T* wr = w + ci * cout;
            for (std::size_t co = 0; co < cout; ++co) acc[co] += v * static_cast<double>(wr[co]);
          }
        }
      }
      T* dst = &out.data[(oy * out.width + ox) * cout];
      for (std::size_t co = 0; co < cout; ++co) dst[co] = static_cast<T>(activate(acc[co], act));
    }
  }
  return out;
}

/// kernel layout [kh, kw, channels, 1]: one 2-D filter per channel
template <typename T>
Feature<T> depthwise_conv2d_same(const Feature<T>& in, std::span<const T> kernel, std::span<const T> bias,
                                 std::size_t kh, std::size_t kw, std::size_t stride, Activation act) {
  const std::size_t c = in.channels;
  if (kernel.size() != kh * kw * c || bias.size() != c)
    throw std::invalid_argument("depthwise weight size mismatch");
  const auto py = SamePadding::compute(in.height, kh, stride);
  const auto px = SamePadding::compute(in.width, kw, stride);
  Feature<T> out(py.out, px.out, c);
  std::vector<double> acc(c);
  for (std::size_t oy = 0; oy < py.out; ++oy) {
    for (std::size_t ox = 0; ox < px.out; ++ox) {
      for (std::size_t ch = 0; ch < c; ++ch) acc[ch] = static_cast<double>(bias[ch]);
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(py.before);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in.height)) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const std::ptrdiff_t ix =
              static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(px.before);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in.width)) continue;
          const T* src = &in.data[(static_cast<std::size_t>(iy) * in.width + static_cast<std::size_t>(ix)) * c];
          const T* w = kernel.data() + (ky * kw + kx) * c;
          for (std::size_t ch = 0; ch < c; ++ch) acc[ch] += static_cast<double>(src[ch]) * static_cast<double>(w[ch]);
        }
      }
      T* dst = &out.data[(oy * out.width + ox) * c];
      for (std::size_t ch = 0; ch < c; ++ch) dst[ch] = static_cast<T>(activate(acc[ch], act));
    }
  }
  return out;
}

template <typename T>
Feature<T> global_avg_pool(const Feature<T>& in) {
  Feature<T> out(1, 1, in.channels);
  std::vector<double> acc(in.channels, 0.0);
  const std::size_t pixels = in.height * in.width;
  for (std::size_t p = 0; p < pixels; ++p)
    for (std::size_t ch = 0; ch < in.channels; ++ch) acc[ch] += static_cast<double>(in.data[p * in.channels + ch]);
  for (std::size_t ch = 0; ch < in.channels; ++ch)
    out.data[ch] = static_cast<T>(acc[ch] / static_cast<double>(pixels));
  return out;
}

/// y = act(x K + b) with K laid out [in, out]; x is the flattened input.
template <typename T>
std::vector<T> dense(std::span<const T> x, std::span<const T> kernel, std::span<const T> bias, Activation act) {
  const std::size_t n_out = bias.size();
  if (kernel.size() != x.size() * n_out) throw std::invalid_argument("dense weight size mismatch");
  std::vector<double> acc(bias.begin(), bias.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = static_cast<double>(x[i]);
    if (v == 0.0) continue;
    const T* row = kernel.data() + i * n_out;
    for (std::size_t j = 0; j < n_out; ++j) acc[j] += v * static_cast<double>(row[j]);
  }
  std::vector<T> y(n_out);
  for (std::size_t j = 0; j < n_out; ++j) y[j] = static_cast<T>(activate(acc[j], act));
  return y;
}

}  // namespace amd::nn
