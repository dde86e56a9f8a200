#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "heatflow/kernels.hpp"

using namespace heatflow;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("convolution paths agree with the serial reference") {
  std::mt19937_64 rng(20241015);
  for (auto [na, nb] : {std::pair<std::size_t, std::size_t>{1, 1}, {7, 3}, {100, 49}, {1000, 777},
                        {4096, 161}, {3000, 3000}}) {
    const auto a = random_vector(rng, na);
    const auto b = random_vector(rng, nb);
    const auto ref = kernels::reference::convolve(a, b);
    CHECK(ref.size() == na + nb - 1);
    CHECK(max_abs_diff(kernels::convolve_direct(a, b), ref) < 1e-12 * static_cast<double>(nb));
    CHECK(max_abs_diff(kernels::convolve_fft(a, b), ref) < 1e-11 * std::sqrt(static_cast<double>(na + nb)));
    CHECK(max_abs_diff(kernels::convolve(a, b), ref) < 1e-11 * std::sqrt(static_cast<double>(na + nb)));
  }
}

TEST_CASE("fixed-kernel convolver matches one-shot convolution") {
  std::mt19937_64 rng(7);
  for (std::size_t nk : {5, 301}) {
    const auto k = random_vector(rng, nk);
    kernels::FixedKernelConvolver conv(k, 2000);
    CHECK(conv.output_len() == 2000 + nk - 1);
    for (int rep = 0; rep < 3; ++rep) {
      const auto s = random_vector(rng, 2000);
      CHECK(max_abs_diff(conv(s), kernels::reference::convolve(s, k)) < 1e-10);
    }
  }
}

TEST_CASE("fft_size returns the smallest 5-smooth size") {
  CHECK(kernels::fft_size(1) == 1);
  CHECK(kernels::fft_size(7) == 8);
  CHECK(kernels::fft_size(11) == 12);
  CHECK(kernels::fft_size(4097) == 4320);
  for (std::size_t n = 1; n < 2000; ++n) {
    std::size_t m = kernels::fft_size(n);
    CHECK(m >= n);
    for (std::size_t p : {2, 3, 5})
      while (m % p == 0) m /= p;
    CHECK(m == 1);
  }
}

TEST_CASE("blocked trapezoid equals the serial sum") {
  std::mt19937_64 rng(3);
  for (std::size_t n : {2, 3, 2047, 2048, 2049, 100000}) {
    const auto v = random_vector(rng, n);
    const double ref = kernels::reference::trapezoid(v, 0.01);
    CHECK(kernels::trapezoid(std::span<const double>(v), 0.01) == doctest::Approx(ref).epsilon(1e-12));
  }
  // exact for linear integrands
  std::vector<double> lin(101);
  for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = 2.0 + 3.0 * 0.01 * static_cast<double>(i);
  CHECK(kernels::trapezoid(std::span<const double>(lin), 0.01) == doctest::Approx(2.0 + 1.5).epsilon(1e-14));
}

TEST_CASE("derivative: central in the bulk, one-sided at ends and masks") {
  const double dx = 0.01;
  std::vector<double> q(200);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double x = static_cast<double>(i) * dx;
    q[i] = x * x;
  }
  const auto d = kernels::derivative(q, dx);
  for (std::size_t i = 1; i + 1 < q.size(); ++i)
    CHECK(d[i] == doctest::Approx(2.0 * static_cast<double>(i) * dx).epsilon(1e-10));
  CHECK(std::isfinite(d.front()));
  CHECK(std::isfinite(d.back()));
  const auto dr = kernels::reference::derivative(q, dx);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(dr[i] == doctest::Approx(d[i]).epsilon(1e-12));

  std::vector<std::uint8_t> mask(q.size(), 0);
  mask[100] = 1;
  const auto dm = kernels::derivative(q, dx, mask);
  CHECK(dm[100] == 0.0);
  CHECK(std::isfinite(dm[99]));
  CHECK(std::isfinite(dm[101]));
  const auto drm = kernels::reference::derivative(q, dx, mask);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(drm[i] == doctest::Approx(dm[i]).epsilon(1e-12));
}
