#pragma once
/** @file kernels.hpp
 *  Numerical kernels: trapezoidal reductions, finite differences and linear
 *  convolution. Production kernels are OpenMP-parallel (direct sums) or
 *  FFT-based; `reference::` holds the serial versions used as test oracles.
 *
 *  Parallel reductions are bit-reproducible: the index range is cut into
 *  fixed-size blocks independent of the thread count, each block is summed
 *  serially, and block sums are combined serially in order.
 */

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace heatflow::kernels {

inline constexpr std::size_t kBlock = 2048;

/// Sum of f(i) for i in [0, n), deterministic across thread counts.
template <class F>
double block_sum(std::size_t n, F&& f) {
  const std::size_t n_blocks = (n + kBlock - 1) / kBlock;
  if (n_blocks <= 1) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += f(i);
    return acc;
  }
  std::vector<double> partial(n_blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(n_blocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = lo + kBlock < n ? lo + kBlock : n;
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += f(i);
    partial[static_cast<std::size_t>(b)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

/// Trapezoidal integral of f(i) sampled at spacing dx.
template <class F>
double trapezoid(std::size_t n, double dx, F&& f) {
  if (n == 0) return 0.0;
  if (n == 1) return 0.0;
  const double inner = block_sum(n, f);
  return dx * (inner - 0.5 * f(0) - 0.5 * f(n - 1));
}

inline double trapezoid(std::span<const double> v, double dx) {
  return trapezoid(v.size(), dx, [&](std::size_t i) { return v[i]; });
}

/// Central differences, one-sided at the ends and next to masked nodes.
/// Masked nodes get derivative 0. `mask` may be empty.
std::vector<double> derivative(std::span<const double> v, double dx,
                               std::span<const std::uint8_t> mask = {});

/// Full linear convolution (length na + nb - 1), chooses FFT or direct.
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);
/// Direct O(na*nb) convolution, OpenMP over output index.
std::vector<double> convolve_direct(std::span<const double> a,
                                    std::span<const double> b);
/// Zero-padded FFT convolution (FFTW).
std::vector<double> convolve_fft(std::span<const double> a, std::span<const double> b);

/// Smallest 2^a 3^b 5^c >= n.
std::size_t fft_size(std::size_t n);

/// Repeated convolution against a fixed kernel for signals of a fixed length.
class FixedKernelConvolver {
 public:
  FixedKernelConvolver(std::span<const double> kernel, std::size_t signal_len);
  std::size_t signal_len() const { return n_sig_; }
  std::size_t output_len() const { return n_sig_ + n_ker_ - 1; }
  std::vector<double> operator()(std::span<const double> signal) const;

 private:
  std::size_t n_sig_, n_ker_, n_fft_;
  bool direct_;
  std::vector<double> kernel_;
  std::vector<std::complex<double>> kernel_hat_;
};

namespace reference {

double trapezoid(std::span<const double> v, double dx);
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);
std::vector<double> derivative(std::span<const double> v, double dx,
                               std::span<const std::uint8_t> mask = {});

}  // namespace reference

}  // namespace heatflow::kernels
