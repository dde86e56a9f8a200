#include "heatflow/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "detail.hpp"
#include "heatflow/divergences.hpp"
#include "heatflow/error.hpp"
#include "heatflow/qs_operator.hpp"

namespace heatflow {

namespace {

void require_positive_s(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) fail(ErrorKind::domain, "channel noise s must be positive");
}

FieldOnGrid identity(const Grid& g) {
  return make_field(g, [](double x) { return x; });
}

}  // namespace

FieldOnGrid conditional_mean(const GridDensity& mu, double s) {
  require_positive_s(s);
  return apply_qs(identity(mu.grid()), mu, s);
}

double mmse(const GridDensity& mu, double s) {
  require_positive_s(s);
  const double var = moments(mu).variance;
  if (!(var > 0.0)) fail(ErrorKind::domain, "mmse needs positive variance");
  const double explained = conditional_variance(identity(mu.grid()), mu, s);
  return std::clamp(var - explained, 0.0, var);
}

double mutual_information(const GridDensity& mu, double s) {
  require_positive_s(s);
  return differential_entropy(heat_evolve(mu, s)) -
         0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * s);
}

double mmse_lb_poincare(double P, double cp_bar, double s) { return P / (1.0 + (P / s) * cp_bar); }
double mmse_lb_crlb(double P, double j_bar, double s) { return P / (j_bar + P / s); }
double mi_lb_poincare(double P, double cp_bar, double s) {
  return std::log1p((P / s) * cp_bar) / (2.0 * cp_bar);
}
double mi_lb_epi(double P, double n_bar, double s) { return 0.5 * std::log1p((P / s) * n_bar); }
double mi_lb_crlb(double P, double j_bar, double s) { return 0.5 * std::log1p((P / s) / j_bar); }

NormalizedConstants normalized_constants(const GridDensity& mu, const ConstantEstimate& c_p) {
  if (c_p.kind != ConstantKind::poincare) fail(ErrorKind::dependency, "bounds need a Poincare constant");
  c_p.validate();
  NormalizedConstants nc{};
  nc.P = moments(mu).P;
  if (!(nc.P > 0.0)) fail(ErrorKind::domain, "bounds need positive variance");
  nc.cp_bar = c_p.value / nc.P;
  const FisherInformation J = fisher_information(mu);
  if (!J.divergent_suspect && std::isfinite(J.value)) nc.j_bar = J.value * nc.P;
  nc.n_bar = normalized_entropy_power(mu);
  return nc;
}

BoundRow bound_row(const GridDensity& mu, double s, const ConstantEstimate& c_p,
                   const NormalizedConstants& nc) {
  require_positive_s(s);
  (void)c_p;
  BoundRow r{};
  r.s = s;
  r.mmse = mmse(mu, s);
  r.mmse_lb_poincare = mmse_lb_poincare(nc.P, nc.cp_bar, s);
  r.mi = mutual_information(mu, s);
  r.mi_lb_poincare = mi_lb_poincare(nc.P, nc.cp_bar, s);
  r.mi_lb_epi = mi_lb_epi(nc.P, nc.n_bar, s);
  r.crlb_unavailable = !nc.j_bar.has_value();
  if (nc.j_bar) {
    r.mmse_lb_crlb = mmse_lb_crlb(nc.P, *nc.j_bar, s);
    r.mi_lb_crlb = mi_lb_crlb(nc.P, *nc.j_bar, s);
    r.poincare_tighter_than_crlb = (nc.P / s) * (nc.cp_bar - 1.0) < *nc.j_bar - 1.0;
  }
  return r;
}

std::vector<BoundRow> bound_table(const GridDensity& mu, const std::vector<double>& s_list,
                                  const std::optional<ConstantEstimate>& c_p) {
  if (!c_p) fail(ErrorKind::dependency, "bound table needs a Poincare constant");
  const NormalizedConstants nc = normalized_constants(mu, *c_p);
  std::vector<BoundRow> rows(s_list.size());
  for (std::size_t i = 0; i < s_list.size(); ++i) rows[i] = bound_row(mu, s_list[i], *c_p, nc);
  return rows;
}

void write_bound_table_csv(std::ostream& os, const std::vector<BoundRow>& rows) {
  using detail::format_double;
  os << "s,mmse,mmse_lb_poincare,mmse_lb_crlb,mi,mi_lb_poincare,mi_lb_epi,flags\n";
  for (const auto& r : rows) {
    std::string flags;
    if (r.crlb_unavailable) flags = "crlb_unavailable";
    if (r.poincare_tighter_than_crlb) flags += (flags.empty() ? "" : ";") + std::string("poincare_tighter_than_crlb");
    os << format_double(r.s) << ',' << format_double(r.mmse) << ',' << format_double(r.mmse_lb_poincare) << ','
       << (r.mmse_lb_crlb ? format_double(*r.mmse_lb_crlb) : "") << ',' << format_double(r.mi) << ','
       << format_double(r.mi_lb_poincare) << ',' << format_double(r.mi_lb_epi) << ',' << flags << '\n';
  }
}

}  // namespace heatflow
