#include <doctest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "heatflow/densities.hpp"
#include "heatflow/error.hpp"
#include "heatflow/kernels.hpp"
#include "oracles.hpp"

using namespace heatflow;

namespace {

double mass(const GridDensity& r) { return kernels::trapezoid(r.values(), r.grid().dx); }

double max_error_vs(const GridDensity& r, double m, double v) {
  double e = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    e = std::max(e, std::abs(r[i] - oracle::gaussian_pdf(r.grid().x(i), m, v)));
  return e;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::usage;
}

}  // namespace

TEST_CASE("grid construction and alignment") {
  CHECK(kind_of([] { Grid::make(0.0, 0.0, 16); }) == ErrorKind::parameter);
  CHECK(kind_of([] { Grid::make(0.0, 0.1, 7); }) == ErrorKind::parameter);
  const Grid g = Grid::make(-1.0, 0.25, 9);
  CHECK(g.x_max() == doctest::Approx(1.0));
  const Grid h = Grid::make(0.5, 0.25, 12);
  CHECK(g.aligned_with(h));
  CHECK(h.offset_in(g) == 6);
  const Grid u = g.union_with(h);
  CHECK(u.x_min == doctest::Approx(-1.0));
  CHECK(u.x_max() == doctest::Approx(h.x_max()));
  CHECK_FALSE(g.aligned_with(Grid::make(0.1, 0.25, 9)));
}

TEST_CASE("GridDensity validates and renormalizes") {
  const Grid g = Grid::make(0.0, 0.1, 11);
  CHECK(kind_of([&] { GridDensity(g, std::vector<double>(11, -1.0)); }) == ErrorKind::parameter);
  CHECK(kind_of([&] { GridDensity(g, std::vector<double>(11, 0.0)); }) == ErrorKind::parameter);
  CHECK(kind_of([&] { GridDensity(g, std::vector<double>(3, 1.0)); }) == ErrorKind::parameter);
  GridDensity d(g, std::vector<double>(11, 5.0));
  CHECK(mass(d) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spec constraints") {
  CHECK(kind_of([] { DistributionSpec::gaussian(0, 0); }) == ErrorKind::parameter);
  CHECK(kind_of([] { DistributionSpec::laplace(0, -1); }) == ErrorKind::parameter);
  try {
    DistributionSpec::uniform(1, 0);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("b must exceed a") != std::string::npos);
  }
  CHECK(kind_of([] {
          DistributionSpec::mixture({{0.5, DistributionSpec::gaussian(0, 1)},
                                     {0.6, DistributionSpec::gaussian(1, 1)}});
        }) == ErrorKind::parameter);
  CHECK(DistributionSpec::gaussian(0, 1).log_concave() == LogConcavity::yes);
  CHECK(DistributionSpec::uniform(0, 1).log_concave() == LogConcavity::yes);
  CHECK(DistributionSpec::laplace(0, 1).log_concave() == LogConcavity::yes);
  const auto mix = DistributionSpec::mixture(
      {{0.5, DistributionSpec::gaussian(-2, 1)}, {0.5, DistributionSpec::gaussian(2, 1)}});
  CHECK(mix.log_concave() == LogConcavity::unknown);
  CHECK(DistributionSpec::mixture({{1.0, DistributionSpec::gaussian(0, 1)}}).log_concave() ==
        LogConcavity::yes);
}

TEST_CASE("discretize examples") {
  const GridDensity g = discretize(DistributionSpec::gaussian(0, 1));
  CHECK(std::abs(mass(g) - 1.0) <= 1e-10);
  std::size_t imax = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] > g[imax]) imax = i;
  CHECK(std::abs(g.grid().x(imax)) <= g.grid().dx);
  CHECK(g.grid().x_min == doctest::Approx(-10.0));
  CHECK(g.grid().x_max() == doctest::Approx(10.0));

  const Moments u = moments(discretize(DistributionSpec::uniform(0, 1)));
  CHECK(std::abs(u.mean - 0.5) <= 1e-10);
  CHECK(std::abs(u.variance - 1.0 / 12.0) <= 1e-6);

  const Moments m = moments(discretize(DistributionSpec::mixture(
      {{0.5, DistributionSpec::gaussian(-2, 1)}, {0.5, DistributionSpec::gaussian(2, 1)}})));
  CHECK(std::abs(m.mean) <= 1e-8);
  CHECK(std::abs(m.variance - 5.0) <= 1e-6);

  const Moments g34 = moments(discretize(DistributionSpec::gaussian(3, 4)));
  CHECK(std::abs(g34.mean - 3.0) <= 1e-8);
  CHECK(std::abs(g34.variance - 4.0) <= 1e-6);
  CHECK(g34.P == g34.variance);

  const Moments lap = moments(discretize(DistributionSpec::laplace(0, 1)));
  CHECK(std::abs(lap.mean) <= 1e-10);
}

TEST_CASE("discretize rejects bad resolution arguments") {
  CHECK(kind_of([] { discretize(DistributionSpec::gaussian(0, 1), 10, 1000); }) == ErrorKind::parameter);
  CHECK(kind_of([] { discretize(DistributionSpec::gaussian(0, 1), 3, 4096); }) == ErrorKind::parameter);
  // narrow component on a wide mixture support: fewer than 16 nodes per sigma
  const auto narrow = DistributionSpec::mixture(
      {{0.5, DistributionSpec::gaussian(-100, 1)}, {0.5, DistributionSpec::gaussian(100, 1e-4)}});
  CHECK(kind_of([&] { discretize(narrow, 10, 1024); }) == ErrorKind::resolution);
}

TEST_CASE("heat_evolve examples") {
  const GridDensity g = discretize(DistributionSpec::gaussian(0, 1));
  const GridDensity g1 = heat_evolve(g, 1.0);
  CHECK(max_error_vs(g1, 0.0, 2.0) <= 1e-6);
  CHECK(g1.grid().x_min <= g.grid().x_min - 8.0);
  CHECK(std::abs(mass(g1) - 1.0) <= 1e-8);

  const GridDensity same = heat_evolve(g, 0.0);
  CHECK(same.grid() == g.grid());
  CHECK(same.vector() == g.vector());

  const GridDensity u = heat_evolve(discretize(DistributionSpec::uniform(0, 1)), 0.25);
  CHECK(std::abs(moments(u).variance - (1.0 / 12.0 + 0.25)) <= 1e-6);
  CHECK(std::abs(moments(u).mean - 0.5) <= 1e-8);

  CHECK(kind_of([&] { heat_evolve(g, -1.0); }) == ErrorKind::domain);
}

TEST_CASE("heat kernel weights") {
  const auto w = heat_kernel_weights(1.0, 0.01);
  CHECK(w.size() % 2 == 1);
  double sum = 0.0, var = 0.0;
  const std::size_t m = w.size() / 2;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double x = (static_cast<double>(i) - static_cast<double>(m)) * 0.01;
    sum += w[i];
    var += w[i] * x * x;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(var == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(static_cast<double>(m) * 0.01 >= 8.0);
  const auto tiny = heat_kernel_weights(1e-6, 0.01);
  CHECK(tiny.size() == 3);
  CHECK(tiny[0] * 2.0 * 1e-4 == doctest::Approx(1e-6));
}

TEST_CASE("density_ratio examples") {
  const auto n01 = DistributionSpec::gaussian(0, 1);
  const auto n11 = DistributionSpec::gaussian(1, 1);
  const GridDensity mu = discretize(n01);
  const RatioField self = density_ratio(mu, mu);
  for (std::size_t i = 0; i < self.f.size(); ++i)
    if (!self.f.is_excluded(i)) CHECK(self.f.values[i] == doctest::Approx(1.0).epsilon(1e-14));

  const DistributionSpec both[] = {n11, n01};
  const Grid lattice = common_grid(both);
  const RatioField r = density_ratio(discretize_on(n11, lattice), discretize_on(n01, lattice));
  double worst = 0.0;
  std::size_t included = 0;
  for (std::size_t i = 0; i < r.f.size(); ++i) {
    if (r.f.is_excluded(i)) continue;
    ++included;
    const double x = r.f.grid.x(i);
    worst = std::max(worst, std::abs(r.f.values[i] / std::exp(x - 0.5) - 1.0));
  }
  CHECK(included > 1000);
  CHECK(worst <= 1e-8);

  const DistributionSpec uni_gauss[] = {DistributionSpec::uniform(0, 1), n01};
  const Grid lg = common_grid(uni_gauss);
  const RatioField ug = density_ratio(discretize_on(uni_gauss[0], lg), discretize_on(n01, lg));
  for (std::size_t i = 0; i < ug.f.size(); ++i) {
    if (lg.x(i) > -7.0 && lg.x(i) < 7.0) CHECK_FALSE(ug.f.is_excluded(i));
  }
  // reversed direction is not absolutely continuous
  CHECK(kind_of([&] { density_ratio(discretize_on(n01, lg), discretize_on(uni_gauss[0], lg)); }) ==
        ErrorKind::absolute_continuity);
}

TEST_CASE("convolve_independent examples") {
  const GridDensity g = discretize(DistributionSpec::gaussian(0, 1));
  const GridDensity g2 = convolve_independent(g, g);
  CHECK(max_error_vs(g2, 0.0, 2.0) <= 1e-6);

  const GridDensity u = discretize(DistributionSpec::uniform(0, 1), 10, 4096);
  const GridDensity tri = convolve_independent(u, u);
  double worst = 0.0;
  for (std::size_t i = 0; i < tri.size(); ++i) {
    const double x = tri.grid().x(i);
    const double exact = x <= 0 || x >= 2 ? 0.0 : (x < 1 ? x : 2.0 - x);
    worst = std::max(worst, std::abs(tri[i] - exact));
  }
  // the one-cell boundary ramp gives an O(dx) error near the corners
  CHECK(worst <= 2.0 * u.grid().dx);
  const Moments mt = moments(tri);
  CHECK(std::abs(mt.mean - 1.0) <= 1e-6);
  CHECK(std::abs(mt.variance - 1.0 / 6.0) <= 1e-6 * (1.0 / 6.0) * 10);

  const GridDensity narrow = discretize(DistributionSpec::gaussian(0.5, 1e-6));
  const GridDensity shifted = convolve_independent(g, narrow);
  const Moments ms = moments(shifted);
  CHECK(std::abs(ms.mean - 0.5) <= 1e-6);
  CHECK(std::abs(ms.variance - 1.0) <= 2e-6);

  const GridDensity mix = discretize(DistributionSpec::mixture(
      {{0.3, DistributionSpec::gaussian(-1, 0.5)}, {0.7, DistributionSpec::laplace(2, 0.5)}}));
  const GridDensity sum = convolve_independent(mix, discretize(DistributionSpec::uniform(-1, 3)));
  const Moments a = moments(mix), b = moments(discretize(DistributionSpec::uniform(-1, 3))), c = moments(sum);
  CHECK(c.mean == doctest::Approx(a.mean + b.mean).epsilon(1e-6));
  // grids of different spacing: the deposit keeps the mean, the variance to O(dx^2)
  CHECK(c.variance == doctest::Approx(a.variance + b.variance).epsilon(1e-5));
}

TEST_CASE("density csv export") {
  const GridDensity g = discretize(DistributionSpec::gaussian(0, 1), 10, 512);
  std::ostringstream os;
  write_density_csv(os, g);
  const std::string s = os.str();
  CHECK(s.rfind("x,rho\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) == g.size() + 1);
}
