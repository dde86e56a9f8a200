// Serial reference kernels against the OpenMP and FFT production paths.
#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "heatflow/densities.hpp"
#include "heatflow/kernels.hpp"

namespace {

std::vector<double> signal(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = -10.0 + 20.0 * static_cast<double>(i) / static_cast<double>(n);
    v[i] = std::exp(-0.5 * x * x) * (1.0 + 0.3 * std::sin(3.0 * x));
  }
  return v;
}

std::vector<double> kernel(std::size_t n_signal) {
  return heatflow::heat_kernel_weights(1.0, 20.0 / static_cast<double>(n_signal));
}

void BM_ConvolveSerial(benchmark::State& st) {
  const auto a = signal(st.range(0));
  const auto b = kernel(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(heatflow::kernels::reference::convolve(a, b));
}

void BM_ConvolveDirect(benchmark::State& st) {
  const auto a = signal(st.range(0));
  const auto b = kernel(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(heatflow::kernels::convolve_direct(a, b));
}

void BM_ConvolveFft(benchmark::State& st) {
  const auto a = signal(st.range(0));
  const auto b = kernel(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(heatflow::kernels::convolve_fft(a, b));
}

void BM_TrapezoidSerial(benchmark::State& st) {
  const auto a = signal(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(heatflow::kernels::reference::trapezoid(a, 1e-3));
}

void BM_TrapezoidBlocked(benchmark::State& st) {
  const auto a = signal(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(heatflow::kernels::trapezoid(std::span<const double>(a), 1e-3));
}

void BM_DerivativeSerial(benchmark::State& st) {
  const auto a = signal(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(heatflow::kernels::reference::derivative(a, 1e-3));
}

void BM_DerivativeParallel(benchmark::State& st) {
  const auto a = signal(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(heatflow::kernels::derivative(a, 1e-3));
}

}  // namespace

BENCHMARK(BM_ConvolveSerial)->RangeMultiplier(4)->Range(1 << 10, 1 << 14);
BENCHMARK(BM_ConvolveDirect)->RangeMultiplier(4)->Range(1 << 10, 1 << 14);
BENCHMARK(BM_ConvolveFft)->RangeMultiplier(4)->Range(1 << 10, 1 << 14);
BENCHMARK(BM_TrapezoidSerial)->Range(1 << 12, 1 << 20);
BENCHMARK(BM_TrapezoidBlocked)->Range(1 << 12, 1 << 20);
BENCHMARK(BM_DerivativeSerial)->Range(1 << 12, 1 << 20);
BENCHMARK(BM_DerivativeParallel)->Range(1 << 12, 1 << 20);

BENCHMARK_MAIN();
