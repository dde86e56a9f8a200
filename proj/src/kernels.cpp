#include "heatflow/kernels.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>

#include "heatflow/error.hpp"

namespace heatflow::kernels {

namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// FFTW planning is not thread-safe; plans are created once per size and then
// executed through the new-array interface, which is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

const PlanPair& plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> real(n);
  std::vector<std::complex<double>> spec(n / 2 + 1);
  auto* r = real.data();
  auto* c = reinterpret_cast<fftw_complex*>(spec.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p;
  p.forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), r, c, flags);
  p.inverse = fftw_plan_dft_c2r_1d(static_cast<int>(n), c, r, flags);
  if (!p.forward || !p.inverse) fail(ErrorKind::numeric, "FFT planning failed");
  return cache.emplace(n, p).first->second;
}

std::vector<std::complex<double>> forward(const PlanPair& p, std::span<const double> x,
                                          std::size_t n) {
  std::vector<double> buf(n, 0.0);
  std::copy(x.begin(), x.end(), buf.begin());
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_execute_dft_r2c(p.forward, buf.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> inverse(const PlanPair& p, std::vector<std::complex<double>>& spec,
                            std::size_t n, std::size_t keep) {
  std::vector<double> buf(n);
  fftw_execute_dft_c2r(p.inverse, reinterpret_cast<fftw_complex*>(spec.data()), buf.data());
  const double scale = 1.0 / static_cast<double>(n);
  buf.resize(keep);
  for (double& v : buf) v *= scale;
  return buf;
}

bool prefer_direct(std::size_t na, std::size_t nb) {
  const std::size_t m = std::min(na, nb);
  return m <= 48 || static_cast<double>(na) * static_cast<double>(nb) < 4e5;
}

}  // namespace

std::size_t fft_size(std::size_t n) {
  std::size_t best = 1;
  while (best < n) best *= 2;
  for (std::size_t p5 = 1; p5 < best; p5 *= 5)
    for (std::size_t p3 = p5; p3 < best; p3 *= 3) {
      std::size_t v = p3;
      while (v < n) v *= 2;
      best = std::min(best, v);
    }
  return best;
}

std::vector<double> derivative(std::span<const double> v, double dx,
                               std::span<const std::uint8_t> mask) {
  const std::size_t n = v.size();
  std::vector<double> d(n, 0.0);
  const bool masked = !mask.empty();
  const double inv2 = 0.5 / dx, inv = 1.0 / dx;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    if (masked && mask[i]) continue;
    const bool left = i > 0 && !(masked && mask[i - 1]);
    const bool right = i + 1 < n && !(masked && mask[i + 1]);
    if (left && right)
      d[i] = (v[i + 1] - v[i - 1]) * inv2;
    else if (right)
      d[i] = (v[i + 1] - v[i]) * inv;
    else if (left)
      d[i] = (v[i] - v[i - 1]) * inv;
  }
  return d;
}

std::vector<double> convolve_direct(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t na = a.size(), nb = b.size(), n = na + nb - 1;
  std::vector<double> out(n, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(n); ++kk) {
    const std::size_t k = static_cast<std::size_t>(kk);
    const std::size_t lo = k + 1 > nb ? k + 1 - nb : 0;
    const std::size_t hi = std::min(k, na - 1);
    double acc = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) acc += a[i] * b[k - i];
    out[k] = acc;
  }
  return out;
}

std::vector<double> convolve_fft(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t keep = a.size() + b.size() - 1;
  const std::size_t n = fft_size(keep);
  const PlanPair& p = plans_for(n);
  auto fa = forward(p, a, n);
  const auto fb = forward(p, b, n);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  return inverse(p, fa, n, keep);
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
  return prefer_direct(a.size(), b.size()) ? convolve_direct(a, b) : convolve_fft(a, b);
}

FixedKernelConvolver::FixedKernelConvolver(std::span<const double> kernel,
                                           std::size_t signal_len)
    : n_sig_(signal_len),
      n_ker_(kernel.size()),
      n_fft_(fft_size(signal_len + kernel.size() - 1)),
      direct_(prefer_direct(signal_len, kernel.size())),
      kernel_(kernel.begin(), kernel.end()) {
  if (!direct_) kernel_hat_ = forward(plans_for(n_fft_), kernel, n_fft_);
}

std::vector<double> FixedKernelConvolver::operator()(std::span<const double> signal) const {
  if (signal.size() != n_sig_) fail(ErrorKind::parameter, "convolver: signal length mismatch");
  if (direct_) return convolve_direct(signal, kernel_);
  const PlanPair& p = plans_for(n_fft_);
  auto fs = forward(p, signal, n_fft_);
  for (std::size_t k = 0; k < fs.size(); ++k) fs[k] *= kernel_hat_[k];
  return inverse(p, fs, n_fft_, output_len());
}

namespace reference {

double trapezoid(std::span<const double> v, double dx) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) acc += 0.5 * (v[i] + v[i + 1]);
  return acc * dx;
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

std::vector<double> derivative(std::span<const double> v, double dx,
                               std::span<const std::uint8_t> mask) {
  const std::size_t n = v.size();
  std::vector<double> d(n, 0.0);
  auto ok = [&](std::size_t j) { return mask.empty() || !mask[j]; };
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok(i)) continue;
    const bool left = i > 0 && ok(i - 1);
    const bool right = i + 1 < n && ok(i + 1);
    if (left && right)
      d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dx);
    else if (right)
      d[i] = (v[i + 1] - v[i]) / dx;
    else if (left)
      d[i] = (v[i] - v[i - 1]) / dx;
  }
  return d;
}

}  // namespace reference

}  // namespace heatflow::kernels
