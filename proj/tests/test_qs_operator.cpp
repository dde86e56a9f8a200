#include <doctest.h>

#include <cmath>
#include <functional>

#include "heatflow/error.hpp"
#include "heatflow/kernels.hpp"
#include "heatflow/qs_operator.hpp"

using namespace heatflow;

namespace {

double mu_integral(const FieldOnGrid& f, const GridDensity& mu) {
  const auto v = mu.values();
  return kernels::trapezoid(f.size(), f.grid.dx, [&](std::size_t i) { return f.is_excluded(i) ? 0.0 : f.values[i] * v[i]; });
}

double mu_norm2(const FieldOnGrid& f, const GridDensity& mu) {
  const auto v = mu.values();
  return kernels::trapezoid(f.size(), f.grid.dx, [&](std::size_t i) {
    return f.is_excluded(i) ? 0.0 : f.values[i] * f.values[i] * v[i];
  });
}

}  // namespace

TEST_CASE("apply_qs examples") {
  const GridDensity mu = discretize(DistributionSpec::gaussian(0, 1));
  const FieldOnGrid one = make_field(mu.grid(), [](double) { return 1.0; });
  const FieldOnGrid q1 = apply_qs(one, mu, 1.0);
  for (std::size_t i = 0; i < q1.size(); ++i)
    if (!q1.is_excluded(i)) CHECK(std::abs(q1.values[i] - 1.0) <= 1e-10);

  const FieldOnGrid id = make_field(mu.grid(), [](double x) { return x; });
  const FieldOnGrid qx = apply_qs(id, mu, 1.0);
  for (std::size_t i = 0; i < qx.size(); ++i) {
    const double y = qx.grid.x(i);
    if (std::abs(y) <= 5.0) CHECK(std::abs(qx.values[i] - y / 2.0) <= 1e-6);
  }
  CHECK_THROWS_AS(apply_qs(id, mu, 0.0), Error);
}

TEST_CASE("Q_s preserves averages and contracts") {
  for (auto spec : {DistributionSpec::gaussian(0, 1), DistributionSpec::laplace(0, 1),
                    DistributionSpec::uniform(0, 1)}) {
    CAPTURE(spec.to_string());
    const GridDensity mu = discretize(spec);
    const QsOperator q(mu, 0.7);
    for (auto f : std::vector<std::function<double(double)>>{[](double x) { return std::sin(3 * x); },
                                                            [](double x) { return x / (1.0 + x * x); },
                                                            [](double x) { return std::cos(x) + 0.2; }}) {
      const FieldOnGrid fg = make_field(mu.grid(), f);
      const FieldOnGrid qf = q.apply(fg);
      const double avg = mu_integral(fg, mu);
      CHECK(std::abs(mu_integral(qf, q.mu_s()) - avg) <= 1e-8 * (1.0 + std::abs(avg)));
      CHECK(mu_norm2(qf, q.mu_s()) <= mu_norm2(fg, mu) + 1e-8);
    }
  }
}

TEST_CASE("adjoint identity <Qf, g>_{mu_s} = <f, Q*g>_mu") {
  const GridDensity mu = discretize(DistributionSpec::laplace(0.3, 0.8));
  const QsOperator q(mu, 0.5);
  const FieldOnGrid f = make_field(mu.grid(), [](double x) { return std::tanh(x); });
  const FieldOnGrid g = make_field(q.output_grid(), [](double y) { return std::exp(-0.1 * y * y); });
  const FieldOnGrid qf = q.apply(f);
  const std::vector<double> qg = q.adjoint(g.values);
  const auto ms = q.mu_s().values();
  const auto m = mu.values();
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < qf.size(); ++i)
    if (!qf.is_excluded(i)) lhs += qf.values[i] * g.values[i] * ms[i];
  for (std::size_t i = 0; i < mu.size(); ++i) rhs += f.values[i] * qg[i] * m[i];
  CHECK(lhs * q.output_grid().dx == doctest::Approx(rhs * mu.grid().dx).epsilon(1e-8));
}

TEST_CASE("mehler_apply examples") {
  const Grid out = Grid::make(-6.0, 0.01, 1201);
  const FieldOnGrid lin = mehler_apply([](double x) { return x; }, 0.5, 0.0, 1.0, out);
  for (std::size_t i = 0; i < out.n_pts; ++i) CHECK(lin.values[i] == doctest::Approx(out.x(i) / 1.5).scale(1e-12));
  const FieldOnGrid sq = mehler_apply([](double x) { return x * x; }, 1.0, 0.0, 1.0, out);
  for (std::size_t i = 0; i < out.n_pts; ++i) {
    const double y = out.x(i);
    CHECK(std::abs(sq.values[i] - (y * y / 4.0 + 0.5)) <= 1e-8);
  }
  const GridDensity mu = discretize(DistributionSpec::gaussian(0, 1));
  const FieldOnGrid s = make_field(mu.grid(), [](double x) { return std::sin(x); });
  const FieldOnGrid grid_q = apply_qs(s, mu, 0.5);
  const FieldOnGrid mq = mehler_apply(s, 0.5, DistributionSpec::gaussian(0, 1), grid_q.grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid_q.size(); ++i)
    if (std::abs(grid_q.grid.x(i)) <= 6.0) worst = std::max(worst, std::abs(grid_q.values[i] - mq.values[i]));
  CHECK(worst <= 1e-5);
  try {
    mehler_apply(s, 0.5, DistributionSpec::laplace(0, 1), grid_q.grid);
    FAIL("accepted non-Gaussian base");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::usage);
  }
}

TEST_CASE("gradient commutation for a Gaussian base") {
  const Grid out = Grid::make(-6.0, 0.01, 1201);
  const double s = 0.8;
  const auto f = [](double x) { return std::sin(2 * x) + 0.3 * x * x; };
  const auto df2 = [](double x) {
    const double d = 2 * std::cos(2 * x) + 0.6 * x;
    return d * d;
  };
  const FieldOnGrid qf = mehler_apply(f, s, 0.0, 1.0, out);
  const FieldOnGrid qdf2 = mehler_apply(df2, s, 0.0, 1.0, out);
  const auto grad = kernels::derivative(qf.values, out.dx);
  for (std::size_t i = 1; i + 1 < out.n_pts; ++i)
    CHECK(grad[i] * grad[i] <= qdf2.values[i] / ((s + 1) * (s + 1)) + 1e-6);
}

TEST_CASE("conditional_variance examples") {
  const GridDensity mu = discretize(DistributionSpec::gaussian(0, 1));
  CHECK(std::abs(conditional_variance(make_field(mu.grid(), [](double) { return 2.0; }), mu, 1.0)) <= 1e-10);
  const FieldOnGrid id = make_field(mu.grid(), [](double x) { return x; });
  CHECK(std::abs(conditional_variance(id, mu, 1.0) - 0.5) <= 1e-5);
  const FieldOnGrid g = make_field(mu.grid(), [](double x) { return std::sin(x) + x; });
  const double var = conditional_variance(g, mu, 1e-12);
  CHECK(std::abs(conditional_variance(g, mu, 1e-6) - var) <= 1e-3);
}

TEST_CASE("variance decay identity") {
  // d/ds Var(Q_s f) = -E |(Q_s f)'|^2 under mu_s
  for (auto spec : {DistributionSpec::gaussian(0, 1), DistributionSpec::laplace(0, 1)}) {
    const GridDensity mu = discretize(spec);
    const FieldOnGrid f = make_field(mu.grid(), [](double x) { return std::sin(x) + 0.5 * x; });
    const double s = 1.0, h = 1e-2;
    const double slope = (conditional_variance(f, mu, s + h) - conditional_variance(f, mu, s - h)) / (2 * h);
    const QsOperator q(mu, s);
    const FieldOnGrid qf = q.apply(f);
    const auto d = kernels::derivative(qf.values, qf.grid.dx, qf.excluded);
    const auto ms = q.mu_s().values();
    const double energy = kernels::trapezoid(qf.size(), qf.grid.dx, [&](std::size_t i) {
      return qf.is_excluded(i) ? 0.0 : d[i] * d[i] * ms[i];
    });
    CHECK(slope == doctest::Approx(-energy).epsilon(1e-3));
  }
}

TEST_CASE("maximal_correlation examples") {
  const GridDensity g = discretize(DistributionSpec::gaussian(0, 1));
  const SdpiEstimate e = maximal_correlation(g, 1.0);
  CHECK(e.converged);
  CHECK(std::abs(*e.eta_power_iter - 0.5) <= 1e-4);
  CHECK(std::abs(*maximal_correlation(g, 1e-6).eta_power_iter - 1.0) <= 1e-3);
  const SdpiEstimate p = maximal_correlation(g, 1.0, 500, 1e-10, IterationMethod::power);
  CHECK(std::abs(*p.eta_power_iter - 0.5) <= 1e-4);

  const GridDensity mix = discretize(DistributionSpec::mixture(
      {{0.5, DistributionSpec::gaussian(-2, 1)}, {0.5, DistributionSpec::gaussian(2, 1)}}));
  const SdpiEstimate b = eta_chi2_bounds(mix, 1.0, poincare_spectral(mix));
  const double eta = *maximal_correlation(mix, 1.0).eta_power_iter;
  CHECK(eta >= b.eta_lower - 1e-6);
  CHECK(eta <= b.eta_upper + 1e-6);
}

TEST_CASE("eta_chi2_bounds examples") {
  const GridDensity g = discretize(DistributionSpec::gaussian(0, 1));
  const SdpiEstimate e = eta_chi2_bounds(g, 1.0, poincare_spectral(g));
  CHECK(std::abs(e.eta_lower - 0.5) <= 1e-4);
  CHECK(std::abs(e.eta_upper - 0.5) <= 1e-4);
  REQUIRE(e.exp_lower);
  CHECK(*e.exp_lower == doctest::Approx(std::exp(-1.0)).epsilon(1e-4));
  const GridDensity u = discretize(DistributionSpec::uniform(0, 1));
  const SdpiEstimate eu = eta_chi2_bounds(u, 0.1, poincare_spectral(u));
  CHECK(std::abs(eu.eta_upper - 1.0 / (1.0 + 0.1 * M_PI * M_PI)) <= 1e-3);
  try {
    eta_chi2_bounds(g, 1.0, std::nullopt);
    FAIL("no dependency error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::dependency);
  }
  const GridDensity mix = discretize(DistributionSpec::mixture(
      {{0.5, DistributionSpec::gaussian(-2, 1)}, {0.5, DistributionSpec::gaussian(2, 1)}}));
  CHECK_FALSE(eta_chi2_bounds(mix, 1.0, poincare_spectral(mix)).exp_lower);
}

TEST_CASE("half_blurring_time examples") {
  const GridDensity g = discretize(DistributionSpec::gaussian(0, 1));
  const ConstantEstimate cp = poincare_spectral(g);
  const HalfBlurringTime t = half_blurring_time(g, 0.5, BlurKind::chi2, cp);
  CHECK(std::abs(t.s_star - 1.0) <= 1e-3);
  CHECK(t.bracket_lo == doctest::Approx(std::log(2.0)).epsilon(1e-4));
  CHECK_FALSE(t.proxy);
  const HalfBlurringTime near1 = half_blurring_time(g, 0.99, BlurKind::chi2, cp);
  CHECK(near1.s_star >= near1.bracket_lo - 1e-3);
  CHECK(near1.s_star <= near1.bracket_hi + 1e-3);
  CHECK(near1.bracket_lo == doctest::Approx(std::log(1 / 0.99)).epsilon(1e-3));
  CHECK(near1.bracket_hi == doctest::Approx(1 / 0.99 - 1).epsilon(1e-3));

  const HalfBlurringTime kl = half_blurring_time(g, 0.5, BlurKind::kl, log_sobolev_constant(DistributionSpec::gaussian(0, 1)));
  CHECK(kl.proxy);
  CHECK(kl.bracket_lo == doctest::Approx(0.5));
  CHECK(kl.bracket_hi == doctest::Approx(1.0));

  for (auto spec : {DistributionSpec::uniform(0, 1), DistributionSpec::laplace(0, 1)}) {
    const GridDensity mu = discretize(spec);
    const ConstantEstimate c = poincare_spectral(mu);
    const HalfBlurringTime h = half_blurring_time(mu, 0.5, BlurKind::chi2, c);
    CHECK(h.s_star >= h.bracket_lo - 1e-3 * c.value);
    CHECK(h.s_star <= h.bracket_hi + 1e-3 * c.value);
  }
}
