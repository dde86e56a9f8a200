#pragma once
/** @file divergences.hpp
 *  Divergence generators and integral functionals of grid densities.
 */

#include <string>
#include <string_view>
#include <vector>

#include "heatflow/densities.hpp"

namespace heatflow {

/// Convex generator with phi(1) = 0 and concave 1/phi''.
class PhiFunction {
 public:
  enum class Kind { kl, chi2, power };

  static PhiFunction kl();
  static PhiFunction chi2();
  /// Power generator x^lambda - 1, lambda in (1, 2].
  static PhiFunction power(double lambda);
  /// Parses "kl", "chi2" or "power:<lambda>".
  static PhiFunction parse(std::string_view text);

  Kind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  std::string name() const;

  double operator()(double x) const;
  double d1(double x) const;
  double d2(double x) const;
  /// kappa = -(1/(2 phi'')) (1/phi'')''.
  double kappa(double x) const;
  /// Limit of phi at 0+.
  double at_zero() const;
  /// phi(1 + t) - phi'(1) t, evaluated without cancellation for small t.
  double bregman(double t) const;

  bool operator==(const PhiFunction&) const = default;

 private:
  PhiFunction(Kind k, double lambda) : kind_(k), lambda_(lambda) {}
  Kind kind_;
  double lambda_;
};

struct DivergenceDetail {
  double value;
  /// Integrand at the outermost included nodes times the included span,
  /// relative to the value. Large values mean the integrand has not decayed
  /// where the grid ends: the divergence is unresolved (or infinite).
  double edge_fraction;
};

double phi_divergence(const GridDensity& nu, const GridDensity& mu, const PhiFunction& phi);
DivergenceDetail phi_divergence_detail(const GridDensity& nu, const GridDensity& mu,
                                       const PhiFunction& phi);
double phi_divergence(const RatioField& r, const PhiFunction& phi);
DivergenceDetail phi_divergence_detail(const RatioField& r, const PhiFunction& phi);

double renyi_divergence(const GridDensity& nu, const GridDensity& mu, double lambda);

/// Integral of phi''(f) |f'|^2 dmu.
double phi_fisher(const GridDensity& nu, const GridDensity& mu, const PhiFunction& phi);
double phi_fisher(const RatioField& r, const PhiFunction& phi);

double differential_entropy(const GridDensity& rho);

struct FisherInformation {
  double value;
  bool divergent_suspect;
  double boundary_fraction;
};
FisherInformation fisher_information(const GridDensity& rho);

double normalized_entropy_power(const GridDensity& rho);

struct DivergenceCurve {
  std::vector<double> s_values;
  std::vector<double> d_values;
  PhiFunction phi;
};
DivergenceCurve divergence_curve(const GridDensity& nu, const GridDensity& mu,
                                 const PhiFunction& phi, const std::vector<double>& s_list);

}  // namespace heatflow
