#pragma once
/** @file constants.hpp
 *  Poincare, log-Sobolev and phi-Sobolev constants.
 */

#include <optional>
#include <string>

#include "heatflow/densities.hpp"
#include "heatflow/divergences.hpp"

namespace heatflow {

enum class ConstantKind { poincare, log_sobolev, phi_sobolev };
enum class ConstantMethod { spectral, catalog, variational_lower };
enum class Rigor { exact_tolerance, lower_bound_only };

const char* to_string(ConstantKind) noexcept;
const char* to_string(ConstantMethod) noexcept;
const char* to_string(Rigor) noexcept;

struct ConstantEstimate {
  ConstantKind kind;
  std::optional<double> lambda;  // set for phi_sobolev with a power generator
  double value;
  ConstantMethod method;
  Rigor rigor;
  double error_estimate = 0.0;
  std::string diagnostic;

  /// Checks value > 0, finite, and variational_lower => lower_bound_only.
  void validate() const;
};

/// Smallest nonzero eigenvalue of -L_mu and its eigenfunction.
struct PoincareMode {
  double lambda1;
  FieldOnGrid eigenfunction;  // mean zero, unit L2(mu) norm
};
PoincareMode poincare_mode(const GridDensity& mu);

ConstantEstimate poincare_spectral(const GridDensity& mu);

ConstantEstimate log_sobolev_constant(const GridDensity& mu);
ConstantEstimate log_sobolev_constant(const DistributionSpec& spec,
                                      double support_sigmas = kDefaultSupportSigmas,
                                      std::size_t n_pts = kDefaultNPts);

ConstantEstimate phi_sobolev_lower(const GridDensity& mu, const PhiFunction& phi);

struct SubadditivityMargin {
  double margin;
  double c_x, c_y, c_sum;
  bool lower_bound_caveat;
};
/// kind is poincare, or phi_sobolev with `phi` set.
SubadditivityMargin subadditivity_margin(const DistributionSpec& x, const DistributionSpec& y,
                                         ConstantKind kind,
                                         const std::optional<PhiFunction>& phi = std::nullopt,
                                         std::size_t n_pts = kDefaultNPts);

}  // namespace heatflow
