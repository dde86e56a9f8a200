#include <doctest.h>

#include <cmath>
#include <sstream>

#include "heatflow/estimation.hpp"

using namespace heatflow;

TEST_CASE("conditional_mean examples") {
  const GridDensity g = discretize(DistributionSpec::gaussian(0, 1));
  const FieldOnGrid m = conditional_mean(g, 1.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (std::abs(m.grid.x(i)) <= 5.0) CHECK(std::abs(m.values[i] - m.grid.x(i) / 2.0) <= 1e-6);

  const GridDensity mix = discretize(DistributionSpec::mixture(
      {{0.5, DistributionSpec::gaussian(-2, 1)}, {0.5, DistributionSpec::gaussian(2, 1)}}));
  const FieldOnGrid mm = conditional_mean(mix, 0.7);
  const std::size_t n = mm.size();
  // odd in y wherever mu_s is well above FFT round-off (|y| <= 8 covers 1 - 1e-9 of the mass)
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(mm.grid.x(i)) <= 8.0) CHECK(std::abs(mm.values[i] + mm.values[n - 1 - i]) <= 1e-8);

  const GridDensity shifted = discretize(DistributionSpec::laplace(1.5, 1));
  // large s: E[X | Y = y] -> mean + Var (y - mean) / (Var + s)
  const double s_far = 1e4;
  const FieldOnGrid far = conditional_mean(shifted, s_far);
  for (std::size_t i = 0; i < far.size(); ++i) {
    const double y = far.grid.x(i);
    if (std::abs(y - 1.5) < 100.0 && !far.is_excluded(i))
      CHECK(std::abs(far.values[i] - (1.5 + 2.0 * (y - 1.5) / (2.0 + s_far))) <= 1e-3);
    if (std::abs(y - 1.5) <= 25.0) CHECK(std::abs(far.values[i] - 1.5) <= 1e-2);
  }
}

TEST_CASE("mmse and mutual information examples") {
  const GridDensity g = discretize(DistributionSpec::gaussian(0, 1));
  CHECK(std::abs(mmse(g, 1.0) - 0.5) <= 1e-4);
  for (double s : {0.1, 2.0, 5.0}) CHECK(std::abs(mmse(g, s) - s / (1 + s)) <= 1e-4);
  CHECK(mmse(g, 1e-6) <= 1e-3);
  CHECK(std::abs(mutual_information(g, 1.0) - 0.5 * std::log(2.0)) <= 1e-4);
  CHECK(mutual_information(g, 1e3) <= 1e-3);
  CHECK(mutual_information(g, 1e3) >= -1e-4);

  const GridDensity u = discretize(DistributionSpec::uniform(0, 1));
  const ConstantEstimate cp = poincare_spectral(u);
  const double m = mmse(u, 10.0);
  const NormalizedConstants nc = normalized_constants(u, cp);
  CHECK(m >= mmse_lb_poincare(nc.P, nc.cp_bar, 10.0));
  CHECK(m <= 1.0 / 12.0 + 1e-12);
}

TEST_CASE("bound_table examples") {
  const GridDensity g = discretize(DistributionSpec::gaussian(0, 1));
  for (const BoundRow& r : bound_table(g, {0.1, 0.5, 1, 2, 5, 10}, poincare_spectral(g))) {
    CAPTURE(r.s);
    CHECK(std::abs(r.mmse_lb_poincare - r.mmse) <= 1e-3);
    REQUIRE(r.mmse_lb_crlb);
    CHECK(std::abs(*r.mmse_lb_crlb - r.mmse) <= 1e-3);
    CHECK(std::abs(r.mi_lb_poincare - r.mi) <= 1e-3);
    CHECK(std::abs(r.mi_lb_epi - r.mi) <= 1e-3);
  }
  const GridDensity u = discretize(DistributionSpec::uniform(0, 1));
  const auto rows = bound_table(u, {0.5, 2.0}, poincare_spectral(u));
  for (const BoundRow& r : rows) {
    CHECK(r.crlb_unavailable);
    CHECK_FALSE(r.mmse_lb_crlb);
    CHECK(std::isfinite(r.mmse_lb_poincare));
  }
  std::ostringstream os;
  write_bound_table_csv(os, rows);
  const std::string csv = os.str();
  CHECK(csv.rfind("s,mmse,mmse_lb_poincare,mmse_lb_crlb,mi,mi_lb_poincare,mi_lb_epi,flags\n", 0) == 0);
  CHECK(csv.find(",,") != std::string::npos);
  CHECK(csv.find("crlb_unavailable") != std::string::npos);
  CHECK_THROWS(bound_table(u, {1.0}, std::nullopt));
}

TEST_CASE("closed-form bounds") {
  // Gaussian equality: all normalized constants equal one
  for (double s : {0.1, 1.0, 10.0}) {
    const double exact_mmse = s / (1 + s), exact_mi = 0.5 * std::log1p(1 / s);
    CHECK(mmse_lb_poincare(1, 1, s) == doctest::Approx(exact_mmse));
    CHECK(mmse_lb_crlb(1, 1, s) == doctest::Approx(exact_mmse));
    CHECK(mi_lb_poincare(1, 1, s) == doctest::Approx(exact_mi));
    CHECK(mi_lb_epi(1, 1, s) == doctest::Approx(exact_mi));
    CHECK(mi_lb_crlb(1, 1, s) == doctest::Approx(exact_mi));
  }
  // the Poincare MI bound decreases in cp_bar
  double prev = INFINITY;
  for (double c : {1.0, 1.5, 3.0, 10.0}) {
    const double b = mi_lb_poincare(2.0, c, 0.7);
    CHECK(b < prev);
    prev = b;
  }
}
