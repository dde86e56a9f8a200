#pragma once
/** @file estimation.hpp
 *  Conditional mean, MMSE and mutual information over the Gaussian channel
 *  Y = X + sqrt(s) Z, with the Poincare, CRLB and EPI lower bounds.
 */

#include <iosfwd>
#include <optional>
#include <vector>

#include "heatflow/constants.hpp"
#include "heatflow/densities.hpp"

namespace heatflow {

FieldOnGrid conditional_mean(const GridDensity& mu, double s);
double mmse(const GridDensity& mu, double s);
double mutual_information(const GridDensity& mu, double s);

struct BoundRow {
  double s;
  double mmse;
  double mmse_lb_poincare;
  std::optional<double> mmse_lb_crlb;  // empty when Fisher information diverges
  double mi;
  double mi_lb_poincare;
  double mi_lb_epi;
  std::optional<double> mi_lb_crlb;  // CRLB integrated through I-MMSE
  bool crlb_unavailable;
  bool poincare_tighter_than_crlb;
};

/// Normalized quantities: C_P / P, J * P, N.
struct NormalizedConstants {
  double P;
  double cp_bar;
  std::optional<double> j_bar;
  double n_bar;
};
NormalizedConstants normalized_constants(const GridDensity& mu, const ConstantEstimate& c_p);

BoundRow bound_row(const GridDensity& mu, double s, const ConstantEstimate& c_p,
                   const NormalizedConstants& nc);
std::vector<BoundRow> bound_table(const GridDensity& mu, const std::vector<double>& s_list,
                                  const std::optional<ConstantEstimate>& c_p);

/// Closed-form lower bounds (n = 1).
double mmse_lb_poincare(double P, double cp_bar, double s);
double mmse_lb_crlb(double P, double j_bar, double s);
double mi_lb_poincare(double P, double cp_bar, double s);
double mi_lb_epi(double P, double n_bar, double s);
double mi_lb_crlb(double P, double j_bar, double s);

void write_bound_table_csv(std::ostream& os, const std::vector<BoundRow>& rows);

}  // namespace heatflow
