#include <doctest.h>

#include <cmath>
#include <numbers>

#include "heatflow/divergences.hpp"
#include "heatflow/error.hpp"
#include "oracles.hpp"

using namespace heatflow;

namespace {

struct Pair {
  GridDensity nu, mu;
};

Pair on_lattice(const DistributionSpec& nu, const DistributionSpec& mu) {
  const DistributionSpec specs[] = {nu, mu};
  const Grid g = common_grid(specs);
  return {discretize_on(nu, g), discretize_on(mu, g)};
}

const auto N01 = DistributionSpec::gaussian(0, 1);
const auto N11 = DistributionSpec::gaussian(1, 1);

}  // namespace

TEST_CASE("phi generators") {
  for (const auto& phi : {PhiFunction::kl(), PhiFunction::chi2(), PhiFunction::power(1.5),
                          PhiFunction::power(2.0), PhiFunction::power(1.01)}) {
    CAPTURE(phi.name());
    CHECK(phi(1.0) == 0.0);
    for (double x : {1e-3, 0.1, 0.5, 1.0, 2.0, 10.0}) {
      CHECK(phi.d2(x) > 0.0);
      CHECK(phi.kappa(x) >= 0.0);
      // kappa = -(1/(2 phi'')) (1/phi'')''
      const double h = 1e-4 * x;
      auto inv = [&](double t) { return 1.0 / phi.d2(t); };
      const double second = (inv(x + h) - 2.0 * inv(x) + inv(x - h)) / (h * h);
      const double fd = -second / (2.0 * phi.d2(x));
      CHECK(std::abs(phi.kappa(x) - fd) <= 1e-4 * std::abs(fd) + 1e-6);
      // Bregman form
      const double t = x - 1.0;
      CHECK(phi.bregman(t) == doctest::Approx(phi(x) - phi.d1(1.0) * t).epsilon(1e-9).scale(1e-12));
    }
    CHECK(phi.bregman(-1.0) == doctest::Approx(phi.at_zero() + phi.d1(1.0)));
  }
  CHECK(PhiFunction::kl().kappa(3.0) == 0.0);
  CHECK(PhiFunction::chi2().kappa(3.0) == 0.0);
}

TEST_CASE("phi parsing and range") {
  CHECK(PhiFunction::parse("kl").name() == "kl");
  CHECK(PhiFunction::parse("chi2").name() == "chi2");
  CHECK(PhiFunction::parse("power:1.5").lambda() == 1.5);
  for (const char* bad : {"power:2.5", "power:1", "power:0.5"}) {
    try {
      PhiFunction::parse(bad);
      FAIL("accepted " << bad);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::parameter);
      CHECK(std::string(e.what()).find("(1, 2]") != std::string::npos);
    }
  }
  for (const char* bad : {"power:", "power:x", "hellinger", ""}) {
    try {
      PhiFunction::parse(bad);
      FAIL("accepted " << bad);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::usage);
    }
  }
}

TEST_CASE("phi_divergence examples") {
  const GridDensity mu = discretize(N01);
  for (const auto& phi : {PhiFunction::kl(), PhiFunction::chi2(), PhiFunction::power(1.5)})
    CHECK(std::abs(phi_divergence(mu, mu, phi)) <= 1e-10);

  const Pair p = on_lattice(N11, N01);
  CHECK(std::abs(phi_divergence(p.nu, p.mu, PhiFunction::kl()) - oracle::kl_gauss(1, 1, 0, 1)) <= 1e-6);

  const Pair q = on_lattice(N01, DistributionSpec::gaussian(0, 2));
  const double chi2 = phi_divergence(q.nu, q.mu, PhiFunction::chi2());
  CHECK(std::abs(chi2 - oracle::chi2_gauss_centered(1, 2)) <= 1e-6);
  CHECK(chi2 == doctest::Approx(2.0 / std::sqrt(3.0) - 1.0).epsilon(1e-6));
}

TEST_CASE("renyi_divergence examples") {
  const GridDensity mu = discretize(N01);
  CHECK(std::abs(renyi_divergence(mu, mu, 1.5)) <= 1e-10);
  const Pair p = on_lattice(N11, N01);
  for (double l : {1.2, 1.5, 2.0}) {
    CAPTURE(l);
    CHECK(std::abs(renyi_divergence(p.nu, p.mu, l) - l * 1.0 / 2.0) <= 1e-6);
    // monotone transform of the power divergence, to machine precision
    const double dp = phi_divergence(p.nu, p.mu, PhiFunction::power(l));
    CHECK(renyi_divergence(p.nu, p.mu, l) == std::log1p(dp) / (l - 1.0));
  }
  const double kl = phi_divergence(p.nu, p.mu, PhiFunction::kl());
  double prev = INFINITY;
  for (double l : {1.1, 1.01, 1.001}) {
    const double gap = std::abs(renyi_divergence(p.nu, p.mu, l) - kl);
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev <= 1e-3);
}

TEST_CASE("phi_fisher examples") {
  const GridDensity mu = discretize(N01);
  for (const auto& phi : {PhiFunction::kl(), PhiFunction::chi2(), PhiFunction::power(1.5)})
    CHECK(std::abs(phi_fisher(mu, mu, phi)) <= 1e-10);
  const Pair p = on_lattice(N11, N01);
  CHECK(std::abs(phi_fisher(p.nu, p.mu, PhiFunction::kl()) - 1.0) <= 1e-4);
  for (double m : {0.5, 1.0}) {
    const Pair q = on_lattice(DistributionSpec::gaussian(m, 1), N01);
    const double exact = 2.0 * m * m * std::exp(m * m);
    CHECK(phi_fisher(q.nu, q.mu, PhiFunction::chi2()) == doctest::Approx(exact).epsilon(1e-3));
  }
}

TEST_CASE("entropy, Fisher information, entropy power") {
  CHECK(std::abs(differential_entropy(discretize(N01)) - oracle::gaussian_entropy(1.0)) <= 1e-5);
  CHECK(std::abs(differential_entropy(discretize(DistributionSpec::gaussian(0, 4))) - oracle::gaussian_entropy(4.0)) <= 1e-5);
  const GridDensity u = discretize(DistributionSpec::uniform(0, 1));
  CHECK(std::abs(differential_entropy(u)) <= 2e-3);

  const FisherInformation j1 = fisher_information(discretize(N01));
  CHECK(j1.value == doctest::Approx(1.0).epsilon(1e-4));
  CHECK_FALSE(j1.divergent_suspect);
  CHECK(fisher_information(discretize(DistributionSpec::gaussian(0, 2))).value == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(fisher_information(u).divergent_suspect);

  CHECK(normalized_entropy_power(discretize(N01)) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(normalized_entropy_power(discretize(DistributionSpec::gaussian(5, 3))) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(std::abs(normalized_entropy_power(u) - 12.0 / (2.0 * std::numbers::pi * std::numbers::e)) <= 2e-3);
}

TEST_CASE("divergence_curve examples") {
  const Pair p = on_lattice(N11, N01);
  const DivergenceCurve c = divergence_curve(p.nu, p.mu, PhiFunction::kl(), {0.0, 1.0, 3.0});
  CHECK(std::abs(c.d_values[0] - 0.5) <= 1e-5);
  CHECK(std::abs(c.d_values[1] - 0.25) <= 1e-5);
  CHECK(std::abs(c.d_values[2] - 0.125) <= 1e-5);

  const GridDensity mu = discretize(N01);
  for (double d : divergence_curve(mu, mu, PhiFunction::chi2(), {0.0, 0.5, 2.0}).d_values)
    CHECK(std::abs(d) <= 1e-10);

  try {
    divergence_curve(p.nu, p.mu, PhiFunction::kl(), {1.0, 0.5});
    FAIL("accepted descending s");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parameter);
  }
}
