#pragma once
/** @file verification.hpp
 *  Finite-difference identity checks, convexity checks, contraction-bound
 *  checks and the configurable suite runner.
 */

#include <algorithm>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "heatflow/constants.hpp"
#include "heatflow/densities.hpp"
#include "heatflow/divergences.hpp"

namespace heatflow {

struct CheckReport {
  std::string check_id;
  std::string inputs;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string diagnostics;
  bool informational = false;  // recorded, never counted as a failure
  std::string label;           // "conjecture_check" for Bochner-type checks
};

/// Sets passed = residual <= tolerance (NaN residual fails).
CheckReport finish(CheckReport r);

/// Memoized heat flow of an aligned (nu, mu) pair.
class PairFlow {
 public:
  PairFlow(const GridDensity& nu, const GridDensity& mu);
  const GridDensity& nu(double s);
  const GridDensity& mu(double s);
  const RatioField& ratio(double s);

 private:
  struct Entry {
    GridDensity nu, mu;
    std::optional<RatioField> ratio;
  };
  Entry& at(double s);
  GridDensity nu0_, mu0_;
  std::map<double, Entry> cache_;
};

inline double default_step(double s) { return std::max(1e-3, 1e-2 * s); }

CheckReport check_de_bruijn(const GridDensity& nu, const GridDensity& mu,
                            const PhiFunction& phi, double s,
                            std::optional<double> h = std::nullopt);
CheckReport check_de_bruijn(PairFlow& flow, const PhiFunction& phi, double s,
                            std::optional<double> h = std::nullopt);

/// Right-hand side of the Bochner-type formula at time s.
double bochner_rhs(const GridDensity& nu_s, const GridDensity& mu_s, const PhiFunction& phi);

CheckReport check_bochner_conjecture(const GridDensity& nu, const GridDensity& mu,
                                     const PhiFunction& phi, double s,
                                     std::optional<double> h = std::nullopt);
CheckReport check_bochner_conjecture(PairFlow& flow, LogConcavity mu_lc,
                                     const PhiFunction& phi, double s,
                                     std::optional<double> h = std::nullopt);

enum class Sense { convex, concave, log_convex };
const char* to_string(Sense) noexcept;

CheckReport check_convexity(const std::vector<double>& s_values,
                            const std::vector<double>& values, Sense sense,
                            const std::string& check_id = "convexity");
CheckReport check_convexity(const DivergenceCurve& curve, Sense sense);

/// Upper-bound report plus, for log-concave mu, an informational witness of
/// the lower bound 1 - s / C.
std::vector<CheckReport> check_contraction_bounds(const GridDensity& nu, const GridDensity& mu,
                                                  const PhiFunction& phi,
                                                  const std::vector<double>& s_list,
                                                  const ConstantEstimate& constant);
std::vector<CheckReport> check_contraction_bounds(PairFlow& flow, LogConcavity mu_lc,
                                                  const PhiFunction& phi,
                                                  const std::vector<double>& s_list,
                                                  const ConstantEstimate& constant);

enum class OutputFormat { json, csv };

struct SuiteConfig {
  std::vector<std::string> measures;
  std::vector<std::string> phis;
  std::vector<double> s_grid;       // sandwich and contraction sweeps
  std::vector<double> bound_s;      // estimation bound table
  std::vector<double> identity_s;   // de Bruijn / Bochner-type checks
  std::vector<double> convexity_s;  // equally spaced, for second differences
  std::size_t n_pts = kDefaultNPts;
  double support_sigmas = kDefaultSupportSigmas;
  std::map<std::string, double> tolerances;
  OutputFormat format = OutputFormat::json;
  std::string output;

  static SuiteConfig defaults();
  /// Validates measure and phi text, s grids, resolution.
  void validate() const;
  double tolerance(const std::string& key, double fallback) const;
};

struct SkippedCheck {
  std::string check_id;
  std::string reason;
};

struct SuiteSummary {
  std::size_t total = 0;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t informational = 0;
  std::size_t conjecture_checks = 0;
  std::size_t skipped = 0;
};

struct SuiteReport {
  std::vector<CheckReport> reports;  // sorted by check_id
  std::vector<SkippedCheck> skipped;
  SuiteSummary summary;
  bool all_passed() const { return summary.failed == 0; }
};

SuiteReport run_suite(const SuiteConfig& config);

}  // namespace heatflow
