#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace amd::dsp {

/// In-place iterative radix-2 FFT. Twiddles are precomputed per size.
class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n), twiddle_(n / 2), rev_(n) {
    if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("FFT size must be a power of two");
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[k] = {std::cos(a), std::sin(a)};
    }
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      rev_[i] = r;
    }
  }

  std::size_t size() const { return n_; }

  void forward(std::span<std::complex<double>> data) const {
    if (data.size() != n_) throw std::invalid_argument("FFT input size mismatch");
    for (std::size_t i = 0; i < n_; ++i)
      if (i < rev_[i]) std::swap(data[i], data[rev_[i]]);
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t step = n_ / len;
      for (std::size_t i = 0; i < n_; i += len) {
        for (std::size_t j = 0; j < half; ++j) {
          const auto t = twiddle_[j * step] * data[i + j + half];
          data[i + j + half] = data[i + j] - t;
          data[i + j] += t;
        }
      }
    }
  }

  /// Magnitudes of the n/2+1 non-redundant bins of a real signal, which is
  /// zero-padded to n.
  void magnitude(std::span<const double> real, std::span<double> out,
                 std::vector<std::complex<double>>& scratch) const {
    scratch.assign(n_, {0.0, 0.0});
    for (std::size_t i = 0; i < real.size() && i < n_; ++i) scratch[i] = {real[i], 0.0};
    forward(scratch);
    for (std::size_t k = 0; k <= n_ / 2 && k < out.size(); ++k) out[k] = std::abs(scratch[k]);
  }

 private:
  std::size_t n_;
  std::vector<std::complex<double>> twiddle_;
  std::vector<std::size_t> rev_;
};

}  // namespace amd::dsp
