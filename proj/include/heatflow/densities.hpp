#pragma once
/** @file densities.hpp
 *  Grid densities, analytic distribution specs, discretization and heat flow.
 */

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "heatflow/grid.hpp"

namespace heatflow {

enum class LogConcavity { yes, no, unknown };
const char* to_string(LogConcavity lc) noexcept;

/// Nonnegative density on a uniform grid, renormalized to unit trapezoidal mass.
class GridDensity {
 public:
  /// Rejects negative or non-finite values and zero mass; renormalizes.
  GridDensity(Grid grid, std::vector<double> values,
              LogConcavity log_concave = LogConcavity::unknown);

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& vector() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  LogConcavity log_concave() const { return log_concave_; }
  double max_value() const { return max_; }

 private:
  Grid grid_;
  std::vector<double> values_;
  LogConcavity log_concave_;
  double max_;
};

struct Moments {
  double mean;
  double variance;
  double P;  // per-coordinate second central moment; equals variance in 1D
};

class DistributionSpec;

struct Gaussian { double mean, var; };
struct Uniform { double a, b; };
struct Laplace { double loc, scale; };
struct MixtureComponent;
struct Mixture { std::vector<MixtureComponent> components; };
struct GridProvided { std::shared_ptr<const GridDensity> density; };

class DistributionSpec {
 public:
  using Variant = std::variant<Gaussian, Uniform, Laplace, Mixture, GridProvided>;

  static DistributionSpec gaussian(double mean, double var);
  static DistributionSpec uniform(double a, double b);
  static DistributionSpec laplace(double loc, double scale);
  /// Weights must sum to 1 within 1e-9; they are then normalized exactly.
  static DistributionSpec mixture(std::vector<MixtureComponent> components);
  static DistributionSpec grid(GridDensity density);

  const Variant& variant() const { return v_; }
  LogConcavity log_concave() const;
  double mean() const;
  double variance() const;
  /// Standard deviation of the narrowest component.
  double min_sigma() const;
  /// Density at x (GridProvided: linear interpolation).
  double pdf(double x) const;
  /// Law of lambda * X, lambda > 0.
  DistributionSpec scaled(double lambda) const;
  /// Text form in the parse_spec grammar (round-trips through parse_spec).
  std::string to_string() const;

 private:
  explicit DistributionSpec(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

struct MixtureComponent {
  double weight;
  DistributionSpec spec;
};

inline constexpr double kDefaultSupportSigmas = 10.0;
inline constexpr std::size_t kDefaultNPts = 4096;

/// Default grid for a spec: mean +- k sigma (union over mixture components);
/// Uniform(a,b) gets endpoints at half-cells with one zero node beyond each.
Grid default_grid(const DistributionSpec& spec,
                  double support_sigmas = kDefaultSupportSigmas,
                  std::size_t n_pts = kDefaultNPts);

GridDensity discretize(const DistributionSpec& spec,
                       double support_sigmas = kDefaultSupportSigmas,
                       std::size_t n_pts = kDefaultNPts);

/// Samples `spec` on a caller-chosen grid (Uniform components use cell averages).
GridDensity discretize_on(const DistributionSpec& spec, const Grid& grid);

/// One lattice (smallest default spacing, anchored on the first Uniform
/// endpoint if any) covering every spec's default support.
Grid common_grid(std::span<const DistributionSpec> specs,
                 double support_sigmas = kDefaultSupportSigmas,
                 std::size_t n_pts = kDefaultNPts);

/// Sampled heat kernel gamma_s on spacing dx (odd length, weights summing to
/// one). Uses the three-point kernel of variance s when s < dx^2.
std::vector<double> heat_kernel_weights(double s, double dx);

/// Density of X + sqrt(s) Z.
GridDensity heat_evolve(const GridDensity& rho, double s);

Moments moments(const GridDensity& rho);

/// Density of X + Y for independent X, Y.
GridDensity convolve_independent(const GridDensity& rho_x, const GridDensity& rho_y);

/// Re-expresses rho on `target` (exact copy on aligned lattices, moment-
/// preserving deposit when coarsening, linear interpolation otherwise).
GridDensity resample(const GridDensity& rho, const Grid& target);

/// Pair of densities on one shared grid.
struct AlignedPair {
  GridDensity nu;
  GridDensity mu;
};
AlignedPair align(const GridDensity& nu, const GridDensity& mu);

/// Ratio dnu/dmu with excluded nodes (mu <= tau * max mu).
struct RatioField {
  FieldOnGrid f;
  GridDensity mu;  // mu on the common grid
};
inline constexpr double kExclusionTau = 1e-12;
inline constexpr double kExcludedMassLimit = 1e-6;
RatioField density_ratio(const GridDensity& nu, const GridDensity& mu);

/// Two-column CSV `x,rho`.
void write_density_csv(std::ostream& os, const GridDensity& rho);

}  // namespace heatflow
