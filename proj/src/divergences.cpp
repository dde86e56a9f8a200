#include "heatflow/divergences.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "detail.hpp"
#include "heatflow/error.hpp"
#include "heatflow/kernels.hpp"

namespace heatflow {

namespace {

constexpr double kSeriesCutoff = 1e-3;

}  // namespace

PhiFunction PhiFunction::kl() { return PhiFunction(Kind::kl, 1.0); }
PhiFunction PhiFunction::chi2() { return PhiFunction(Kind::chi2, 2.0); }

PhiFunction PhiFunction::power(double lambda) {
  if (!(lambda > 1.0 && lambda <= 2.0))
    fail(ErrorKind::parameter, "power generator needs lambda in (1, 2], got " +
                                   detail::format_double(lambda));
  return PhiFunction(Kind::power, lambda);
}

PhiFunction PhiFunction::parse(std::string_view text) {
  if (text == "kl") return kl();
  if (text == "chi2") return chi2();
  constexpr std::string_view prefix = "power:";
  if (text.substr(0, prefix.size()) == prefix) {
    const std::string_view num = text.substr(prefix.size());
    double lambda = 0.0;
    auto res = std::from_chars(num.data(), num.data() + num.size(), lambda);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size() || num.empty())
      fail(ErrorKind::usage, "malformed power generator '" + std::string(text) + "'");
    return power(lambda);
  }
  fail(ErrorKind::usage, "unknown divergence '" + std::string(text) + "' (kl, chi2, power:L)");
}

std::string PhiFunction::name() const {
  switch (kind_) {
    case Kind::kl: return "kl";
    case Kind::chi2: return "chi2";
    case Kind::power: return "power:" + detail::format_double(lambda_);
  }
  return "unknown";
}

double PhiFunction::operator()(double x) const {
  switch (kind_) {
    case Kind::kl: return x > 0.0 ? x * std::log(x) : 0.0;
    case Kind::chi2: return (x - 1.0) * (x - 1.0);
    case Kind::power: return std::pow(x, lambda_) - 1.0;
  }
  return NAN;
}

double PhiFunction::d1(double x) const {
  switch (kind_) {
    case Kind::kl: return std::log(x) + 1.0;
    case Kind::chi2: return 2.0 * (x - 1.0);
    case Kind::power: return lambda_ * std::pow(x, lambda_ - 1.0);
  }
  return NAN;
}

double PhiFunction::d2(double x) const {
  switch (kind_) {
    case Kind::kl: return 1.0 / x;
    case Kind::chi2: return 2.0;
    case Kind::power: return lambda_ * (lambda_ - 1.0) * std::pow(x, lambda_ - 2.0);
  }
  return NAN;
}

double PhiFunction::kappa(double x) const {
  if (kind_ != Kind::power) return 0.0;
  const double l = lambda_;
  return (2.0 - l) * std::pow(x, 2.0 - 2.0 * l) / (2.0 * l * l * (l - 1.0));
}

double PhiFunction::at_zero() const {
  switch (kind_) {
    case Kind::kl: return 0.0;
    case Kind::chi2: return 1.0;
    case Kind::power: return -1.0;
  }
  return NAN;
}

double PhiFunction::bregman(double t) const {
  if (t <= -1.0) return at_zero() + d1(1.0);
  switch (kind_) {
    case Kind::chi2: return t * t;
    case Kind::kl:
      if (std::abs(t) < kSeriesCutoff)
        return t * t * (0.5 + t * (-1.0 / 6.0 + t * (1.0 / 12.0 + t * (-1.0 / 20.0))));
      return (1.0 + t) * std::log1p(t) - t;
    case Kind::power: {
      const double l = lambda_;
      if (std::abs(t) < kSeriesCutoff) {
        const double c2 = l * (l - 1.0) / 2.0;
        const double c3 = c2 * (l - 2.0) / 3.0;
        const double c4 = c3 * (l - 3.0) / 4.0;
        const double c5 = c4 * (l - 4.0) / 5.0;
        return t * t * (c2 + t * (c3 + t * (c4 + t * c5)));
      }
      return std::expm1(l * std::log1p(t)) - l * t;
    }
  }
  return NAN;
}

DivergenceDetail phi_divergence_detail(const RatioField& r, const PhiFunction& phi) {
  const Grid& g = r.f.grid;
  const auto mu = r.mu.values();
  auto term = [&](std::size_t i) {
    return r.f.is_excluded(i) ? 0.0 : mu[i] * phi.bregman(r.f.values[i] - 1.0);
  };
  const double total = kernels::trapezoid(g.n_pts, g.dx, term);
  if (!std::isfinite(total)) fail(ErrorKind::numeric, "divergence integrand is not finite");
  std::size_t first = 0, last = g.n_pts;
  while (first < g.n_pts && r.f.is_excluded(first)) ++first;
  while (last > first && r.f.is_excluded(last - 1)) --last;
  if (first == last || !(total > 0.0)) return {std::max(total, 0.0), 0.0};
  const double span = static_cast<double>(last - first) * g.dx;
  const double edge = std::max(term(first), term(last - 1)) * span;
  return {total, edge / total};
}

double phi_divergence(const RatioField& r, const PhiFunction& phi) {
  return phi_divergence_detail(r, phi).value;
}

DivergenceDetail phi_divergence_detail(const GridDensity& nu, const GridDensity& mu,
                                       const PhiFunction& phi) {
  return phi_divergence_detail(density_ratio(nu, mu), phi);
}

double phi_divergence(const GridDensity& nu, const GridDensity& mu, const PhiFunction& phi) {
  return phi_divergence_detail(nu, mu, phi).value;
}

double renyi_divergence(const GridDensity& nu, const GridDensity& mu, double lambda) {
  const PhiFunction phi = PhiFunction::power(lambda);
  return std::log1p(phi_divergence(nu, mu, phi)) / (lambda - 1.0);
}

double phi_fisher(const RatioField& r, const PhiFunction& phi) {
  const Grid& g = r.f.grid;
  const auto mu = r.mu.values();
  const auto df = kernels::derivative(r.f.values, g.dx, r.f.excluded);
  const double total = kernels::trapezoid(g.n_pts, g.dx, [&](std::size_t i) {
    // phi''(f) f'^2 -> 0 as f -> 0 for the generators in use
    if (r.f.is_excluded(i) || df[i] == 0.0 || !(r.f.values[i] > 0.0)) return 0.0;
    return phi.d2(r.f.values[i]) * df[i] * df[i] * mu[i];
  });
  if (!std::isfinite(total)) fail(ErrorKind::numeric, "phi-Fisher integrand is not finite");
  return std::max(total, 0.0);
}

double phi_fisher(const GridDensity& nu, const GridDensity& mu, const PhiFunction& phi) {
  return phi_fisher(density_ratio(nu, mu), phi);
}

double differential_entropy(const GridDensity& rho) {
  const auto v = rho.values();
  return kernels::trapezoid(v.size(), rho.grid().dx, [&](std::size_t i) {
    return v[i] > 0.0 ? -v[i] * std::log(v[i]) : 0.0;
  });
}

FisherInformation fisher_information(const GridDensity& rho) {
  const Grid& g = rho.grid();
  const auto v = rho.values();
  const auto d = kernels::derivative(v, g.dx);
  const double cut = kExclusionTau * rho.max_value();
  const std::size_t n = v.size();
  auto included = [&](std::size_t i) { return v[i] > cut; };
  auto boundary = [&](std::size_t i) {
    return i == 0 || i + 1 == n || !included(i - 1) || !included(i + 1);
  };
  auto term = [&](std::size_t i) { return included(i) ? d[i] * d[i] / v[i] : 0.0; };
  const double total = kernels::trapezoid(n, g.dx, term);
  const double edge = kernels::trapezoid(n, g.dx, [&](std::size_t i) {
    return boundary(i) ? term(i) : 0.0;
  });
  const double frac = total > 0.0 ? edge / total : 0.0;
  return {total, frac > 0.5, frac};
}

double normalized_entropy_power(const GridDensity& rho) {
  const double P = moments(rho).P;
  if (!(P > 0.0)) fail(ErrorKind::domain, "entropy power needs positive variance");
  return std::exp(2.0 * differential_entropy(rho)) / (2.0 * std::numbers::pi * std::numbers::e * P);
}

DivergenceCurve divergence_curve(const GridDensity& nu, const GridDensity& mu,
                                 const PhiFunction& phi, const std::vector<double>& s_list) {
  for (std::size_t i = 0; i < s_list.size(); ++i) {
    if (!(s_list[i] >= 0.0) || (i && !(s_list[i] > s_list[i - 1])))
      fail(ErrorKind::parameter, "s values must be nonnegative and ascending");
  }
  const AlignedPair p = align(nu, mu);
  DivergenceCurve c{s_list, std::vector<double>(s_list.size()), phi};
  for (std::size_t i = 0; i < s_list.size(); ++i) {
    const double s = s_list[i];
    c.d_values[i] = phi_divergence(heat_evolve(p.nu, s), heat_evolve(p.mu, s), phi);
  }
  for (std::size_t i = 1; i < c.d_values.size(); ++i) {
    if (c.d_values[i] > c.d_values[i - 1] + 1e-8 * (1.0 + c.d_values[0]))
      fail(ErrorKind::numeric, "divergence increased along the heat flow at s = " +
                                   detail::format_double(s_list[i]) +
                                   "; the pair is not resolved on this grid");
  }
  return c;
}

}  // namespace heatflow
