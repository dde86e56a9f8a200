#pragma once
/** @file qs_operator.hpp
 *  The conditional expectation operator Q_s f(y) = E[f(X) | X + sqrt(s) Z = y].
 */

#include <functional>
#include <optional>
#include <vector>

#include "heatflow/constants.hpp"
#include "heatflow/densities.hpp"
#include "heatflow/kernels.hpp"

namespace heatflow {

/// Q_s and its L^2 adjoint for a fixed (mu, s). Output lives on the mu_s grid
/// (mu's grid extended by the kernel half-width on both sides).
class QsOperator {
 public:
  QsOperator(const GridDensity& mu, double s);

  const GridDensity& mu() const { return mu_; }
  const GridDensity& mu_s() const { return mu_s_; }
  double s() const { return s_; }
  const Grid& output_grid() const { return out_grid_; }

  /// f on mu's grid -> Q_s f on the output grid.
  FieldOnGrid apply(const FieldOnGrid& f) const;
  /// g on the output grid -> Q_s^* g on mu's grid.
  std::vector<double> adjoint(const std::vector<double>& g) const;

 private:
  GridDensity mu_;
  double s_;
  std::size_t half_width_;
  Grid out_grid_;
  GridDensity mu_s_;
  std::vector<double> den_;
  std::vector<std::uint8_t> excluded_;
  kernels::FixedKernelConvolver forward_;
  kernels::FixedKernelConvolver backward_;
};

FieldOnGrid make_field(const Grid& grid, const std::function<double(double)>& f);

FieldOnGrid apply_qs(const FieldOnGrid& f, const GridDensity& mu, double s);

/// Q_s for a Gaussian base N(base_mean, base_var) by Gauss-Hermite quadrature.
FieldOnGrid mehler_apply(const std::function<double(double)>& f, double s, double base_mean,
                         double base_var, const Grid& out_grid, int nodes = 64);
/// Field overload: f is interpolated linearly between nodes.
FieldOnGrid mehler_apply(const FieldOnGrid& f, double s, double base_mean, double base_var,
                         const Grid& out_grid, int nodes = 64);
/// Uses mu's Gaussian spec; usage error for non-Gaussian specs.
FieldOnGrid mehler_apply(const FieldOnGrid& f, double s, const DistributionSpec& base,
                         const Grid& out_grid, int nodes = 64);

double conditional_variance(const FieldOnGrid& f, const GridDensity& mu, double s);

struct SdpiEstimate {
  double s = 0.0;
  double eta_lower = 0.0;
  double eta_upper = 1.0;
  std::optional<double> eta_power_iter;
  std::optional<double> exp_lower;
  int iterations = 0;
  bool converged = false;
};

enum class IterationMethod { krylov, power };

/// Top eigenvalue of Q_s^* Q_s on mean-zero functions (eta_chi2).
SdpiEstimate maximal_correlation(const GridDensity& mu, double s, int max_iter = 500,
                                 double tol = 1e-10,
                                 IterationMethod method = IterationMethod::krylov);

/// Poincare sandwich bounds on eta_chi2; c_p must be a Poincare estimate.
SdpiEstimate eta_chi2_bounds(const GridDensity& mu, double s,
                             const std::optional<ConstantEstimate>& c_p);

/// eta_chi2_bounds plus the iteration estimate.
SdpiEstimate sdpi_estimate(const GridDensity& mu, double s, const ConstantEstimate& c_p);

enum class BlurKind { chi2, kl };

struct HalfBlurringTime {
  double s_star;
  double bracket_lo;
  double bracket_hi;
  bool proxy;
  int evaluations;
};

/// constant: C_P for chi2, C_LS for kl.
HalfBlurringTime half_blurring_time(const GridDensity& mu, double alpha, BlurKind kind,
                                    const std::optional<ConstantEstimate>& constant);

}  // namespace heatflow
