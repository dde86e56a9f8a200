#include "heatflow/verification.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "detail.hpp"
#include "heatflow/error.hpp"
#include "heatflow/estimation.hpp"
#include "heatflow/kernels.hpp"
#include "heatflow/qs_operator.hpp"
#include "heatflow/spec_parser.hpp"

namespace heatflow {

using detail::format_double;

namespace {

// Divergences whose edge share exceeds this are treated as unresolved.
constexpr double kEdgeLimit = 1e-4;

DivergenceDetail resolved_divergence(PairFlow& flow, const PhiFunction& phi, double s) {
  const DivergenceDetail d = phi_divergence_detail(flow.ratio(s), phi);
  if (d.edge_fraction > kEdgeLimit)
    fail(ErrorKind::absolute_continuity,
         phi.name() + " divergence not resolved on the grid at s = " + format_double(s) +
             " (edge share " + format_double(d.edge_fraction) + ")");
  return d;
}

std::string pair_label(const std::string& nu, const std::string& mu) {
  return "nu=" + nu + "/mu=" + mu;
}

}  // namespace

CheckReport finish(CheckReport r) {
  r.passed = !std::isnan(r.residual) && r.residual <= r.tolerance;
  return r;
}

const char* to_string(Sense s) noexcept {
  switch (s) {
    case Sense::convex: return "convex";
    case Sense::concave: return "concave";
    case Sense::log_convex: return "log_convex";
  }
  return "unknown";
}

PairFlow::PairFlow(const GridDensity& nu, const GridDensity& mu)
    : nu0_(align(nu, mu).nu), mu0_(align(nu, mu).mu) {}

PairFlow::Entry& PairFlow::at(double s) {
  auto it = cache_.find(s);
  if (it == cache_.end())
    it = cache_.emplace(s, Entry{heat_evolve(nu0_, s), heat_evolve(mu0_, s), std::nullopt}).first;
  return it->second;
}

const GridDensity& PairFlow::nu(double s) { return at(s).nu; }
const GridDensity& PairFlow::mu(double s) { return at(s).mu; }

const RatioField& PairFlow::ratio(double s) {
  Entry& e = at(s);
  if (!e.ratio) e.ratio = density_ratio(e.nu, e.mu);
  return *e.ratio;
}

CheckReport check_de_bruijn(PairFlow& flow, const PhiFunction& phi, double s, std::optional<double> h) {
  const double step = h.value_or(default_step(s));
  if (!(step > 0.0) || !(s - step > 0.0)) fail(ErrorKind::domain, "de Bruijn check needs 0 < h < s");
  const double d_plus = resolved_divergence(flow, phi, s + step).value;
  const double d_minus = resolved_divergence(flow, phi, s - step).value;
  resolved_divergence(flow, phi, s);
  const double J = phi_fisher(flow.ratio(s), phi);
  const double slope = (d_plus - d_minus) / (2.0 * step);
  CheckReport r;
  r.check_id = "de_bruijn";
  r.inputs = "phi=" + phi.name() + " s=" + format_double(s) + " h=" + format_double(step);
  r.residual = std::abs(slope + 0.5 * J) / (1.0 + 0.5 * J);
  r.tolerance = 1e-3;
  r.diagnostics = "dD/ds=" + format_double(slope) + " J=" + format_double(J);
  return finish(r);
}

CheckReport check_de_bruijn(const GridDensity& nu, const GridDensity& mu, const PhiFunction& phi,
                            double s, std::optional<double> h) {
  PairFlow flow(nu, mu);
  return check_de_bruijn(flow, phi, s, h);
}

double bochner_rhs(const GridDensity& nu_s, const GridDensity& mu_s, const PhiFunction& phi) {
  const RatioField r = density_ratio(nu_s, mu_s);
  const Grid& g = r.f.grid;
  const std::size_t n = g.n_pts;
  const auto& mask = r.f.excluded;
  const auto mu = r.mu.values();
  std::vector<double> gfun(n, 0.0), psi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) continue;
    gfun[i] = phi.d1(r.f.values[i]);
    psi[i] = -std::log(mu[i]);
  }
  const auto g1 = kernels::derivative(gfun, g.dx, mask);
  const auto g2 = kernels::derivative(g1, g.dx, mask);
  const auto psi2 = kernels::derivative(kernels::derivative(psi, g.dx, mask), g.dx, mask);
  const double total = kernels::trapezoid(n, g.dx, [&](std::size_t i) {
    if (mask[i]) return 0.0;
    const double f = r.f.values[i];
    const double a = g1[i] * g1[i];
    const double num = 2.0 * psi2[i] * a + g2[i] * g2[i] + (a > 0.0 ? phi.kappa(f) * a * a : 0.0);
    if (num == 0.0) return 0.0;
    return num / phi.d2(f) * mu[i];
  });
  if (!std::isfinite(total)) fail(ErrorKind::numeric, "Bochner-type integrand is not finite");
  return -total;
}

CheckReport check_bochner_conjecture(PairFlow& flow, LogConcavity mu_lc, const PhiFunction& phi,
                                     double s, std::optional<double> h) {
  const double step = h.value_or(default_step(s));
  if (!(step > 0.0) || !(s - step > 0.0)) fail(ErrorKind::domain, "Bochner check needs 0 < h < s");
  const double j_plus = phi_fisher(flow.ratio(s + step), phi);
  const double j_minus = phi_fisher(flow.ratio(s - step), phi);
  const double slope = (j_plus - j_minus) / (2.0 * step);
  const double rhs = bochner_rhs(flow.nu(s), flow.mu(s), phi);
  CheckReport r;
  r.check_id = "bochner";
  r.label = "conjecture_check";
  r.inputs = "phi=" + phi.name() + " s=" + format_double(s) + " h=" + format_double(step);
  r.tolerance = 5e-3;
  const double rel = std::abs(slope - rhs) / (std::abs(rhs) + 1e-6);
  r.residual = rel;
  r.diagnostics = "dJ/ds=" + format_double(slope) + " rhs=" + format_double(rhs);
  if (mu_lc == LogConcavity::yes) {
    // monotone J: dJ/ds <= 1e-5, folded into the residual on the same scale
    r.residual = std::max(rel, r.tolerance * std::max(0.0, slope) / 1e-5);
    r.diagnostics += slope <= 1e-5 ? " monotone=yes" : " monotone=no";
  }
  return finish(r);
}

CheckReport check_bochner_conjecture(const GridDensity& nu, const GridDensity& mu,
                                     const PhiFunction& phi, double s, std::optional<double> h) {
  PairFlow flow(nu, mu);
  return check_bochner_conjecture(flow, mu.log_concave(), phi, s, h);
}

CheckReport check_convexity(const std::vector<double>& s_values, const std::vector<double>& values,
                            Sense sense, const std::string& check_id) {
  if (s_values.size() != values.size()) fail(ErrorKind::parameter, "convexity check: size mismatch");
  if (s_values.size() < 5) fail(ErrorKind::parameter, "convexity check needs at least 5 samples");
  const double step = s_values[1] - s_values[0];
  for (std::size_t i = 1; i < s_values.size(); ++i)
    if (!(step > 0.0) || std::abs(s_values[i] - s_values[i - 1] - step) > 1e-9 * (1.0 + std::abs(step)))
      fail(ErrorKind::parameter, "convexity check needs equally spaced ascending samples");
  std::vector<double> v(values);
  if (sense == Sense::log_convex) {
    for (double& x : v) {
      if (!(x > 0.0)) fail(ErrorKind::domain, "log-convexity needs positive values");
      x = std::log(x);
    }
  }
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, std::abs(x));
  double worst = 0.0, min_d2 = INFINITY, max_d2 = -INFINITY;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    const double d2 = v[i + 1] - 2.0 * v[i] + v[i - 1];
    min_d2 = std::min(min_d2, d2);
    max_d2 = std::max(max_d2, d2);
    worst = std::max(worst, sense == Sense::concave ? d2 : -d2);
  }
  CheckReport r;
  r.check_id = check_id;
  r.inputs = std::string("sense=") + to_string(sense) + " n=" + std::to_string(v.size()) +
             " s=[" + format_double(s_values.front()) + "," + format_double(s_values.back()) + "]";
  r.residual = std::max(0.0, worst);
  r.tolerance = 1e-5 * (1.0 + vmax);
  r.diagnostics = "min_d2=" + format_double(min_d2) + " max_d2=" + format_double(max_d2);
  return finish(r);
}

CheckReport check_convexity(const DivergenceCurve& curve, Sense sense) {
  return check_convexity(curve.s_values, curve.d_values, sense, "convexity/" + curve.phi.name());
}

std::vector<CheckReport> check_contraction_bounds(PairFlow& flow, LogConcavity mu_lc,
                                                  const PhiFunction& phi,
                                                  const std::vector<double>& s_list,
                                                  const ConstantEstimate& constant) {
  constant.validate();
  const double C = constant.value;
  const double d0 = resolved_divergence(flow, phi, 0.0).value;
  if (!(d0 > 1e-10)) fail(ErrorKind::domain, "contraction check needs D(nu||mu) > 1e-10");
  double over = 0.0, under = 0.0, max_ratio = 0.0;
  std::string detail_text;
  for (double s : s_list) {
    const double ratio = resolved_divergence(flow, phi, s).value / d0;
    const double upper = 1.0 / (1.0 + s / C);
    over = std::max(over, ratio - upper);
    under = std::max(under, (1.0 - s / C) - ratio);
    max_ratio = std::max(max_ratio, ratio);
    detail_text += " s=" + format_double(s) + ":" + format_double(ratio) + "<=" + format_double(upper);
  }
  const std::string inputs = "phi=" + phi.name() + " C=" + format_double(C) + " (" +
                             to_string(constant.kind) + ", " + to_string(constant.method) + ")";
  std::vector<CheckReport> out;
  CheckReport up;
  up.check_id = "contraction_upper";
  up.inputs = inputs;
  up.residual = std::max(0.0, over);
  up.tolerance = 1e-4;
  up.informational = constant.rigor == Rigor::lower_bound_only;
  up.diagnostics = "D0=" + format_double(d0) + detail_text +
                   (up.informational ? " (constant is a lower bound; test is conservative)" : "");
  out.push_back(finish(up));
  if (mu_lc == LogConcavity::yes) {
    CheckReport w;
    w.check_id = "contraction_witness";
    w.inputs = inputs;
    w.residual = std::max(0.0, under);
    w.tolerance = 1e-3;
    w.informational = true;
    w = finish(w);
    w.diagnostics = std::string("lower bound 1 - s/C ") + (w.passed ? "witnessed" : "not witnessed") +
                    " by this nu; max ratio " + format_double(max_ratio);
    out.push_back(w);
  }
  return out;
}

std::vector<CheckReport> check_contraction_bounds(const GridDensity& nu, const GridDensity& mu,
                                                  const PhiFunction& phi,
                                                  const std::vector<double>& s_list,
                                                  const ConstantEstimate& constant) {
  PairFlow flow(nu, mu);
  return check_contraction_bounds(flow, mu.log_concave(), phi, s_list, constant);
}

// ---------------------------------------------------------------------------
// Suite

namespace {

const std::set<std::string>& tolerance_keys() {
  static const std::set<std::string> keys = {
      "de_bruijn", "bochner", "convexity_kl", "convexity_logvar", "convexity_entropy",
      "contraction_upper", "contraction_witness", "sandwich", "sandwich_gaussian", "bounds_mmse",
      "bounds_mi", "bounds_gaussian", "bounds_epi_vs_crlb", "crlb_flag", "stam", "i_mmse",
      "poincare_variance", "poincare_gaussian", "poincare_heat", "half_blurring",
      "half_blurring_gaussian", "low_snr"};
  return keys;
}

std::vector<double> range(double a, double b, double step) {
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::llround((b - a) / step));
  for (std::size_t i = 0; i <= n; ++i) out.push_back(a + step * static_cast<double>(i));
  return out;
}

void check_ascending_positive(const std::vector<double>& v, const char* what) {
  if (v.empty()) fail(ErrorKind::parameter, std::string(what) + " must not be empty");
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!(v[i] > 0.0) || !std::isfinite(v[i]) || (i && !(v[i] > v[i - 1])))
      fail(ErrorKind::parameter, std::string(what) + " must be ascending and positive");
}

struct TaskOutput {
  std::vector<CheckReport> reports;
  std::vector<SkippedCheck> skipped;
};

class Recorder {
 public:
  Recorder(const SuiteConfig& cfg, TaskOutput& out) : cfg_(cfg), out_(out) {}

  void add(CheckReport r, const std::string& family, const std::string& id) {
    r.check_id = family + "/" + id;
    const double tol = cfg_.tolerance(family, r.tolerance);
    if (tol != r.tolerance) {
      r.tolerance = tol;
      r = finish(r);
    }
    out_.reports.push_back(std::move(r));
  }

  // Runs fn; inadmissible inputs become skipped entries, other errors become
  // failed reports.
  void guard(const std::string& family, const std::string& id, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::absolute_continuity) {
        out_.skipped.push_back({family + "/" + id, e.what()});
      } else {
        fail_report(family, id, std::string(to_string(e.kind())) + " error: " + e.what());
      }
    } catch (const std::exception& e) {
      fail_report(family, id, e.what());
    }
  }

  void skip(const std::string& family, const std::string& id, const std::string& reason) {
    out_.skipped.push_back({family + "/" + id, reason});
  }

 private:
  void fail_report(const std::string& family, const std::string& id, const std::string& msg) {
    CheckReport r;
    r.check_id = family + "/" + id;
    r.residual = INFINITY;
    r.tolerance = 0.0;
    r.passed = false;
    r.diagnostics = msg;
    out_.reports.push_back(std::move(r));
  }

  const SuiteConfig& cfg_;
  TaskOutput& out_;
};

CheckReport simple(double residual, double tolerance, std::string inputs, std::string diag = {}) {
  CheckReport r;
  r.residual = residual;
  r.tolerance = tolerance;
  r.inputs = std::move(inputs);
  r.diagnostics = std::move(diag);
  return finish(r);
}

const Gaussian* as_gaussian(const DistributionSpec& s) {
  if (const auto* m = std::get_if<Mixture>(&s.variant()); m && m->components.size() == 1)
    return as_gaussian(m->components.front().spec);
  return std::get_if<Gaussian>(&s.variant());
}

// Checks on a single measure at its default resolution.
void measure_checks(const SuiteConfig& cfg, const DistributionSpec& spec, Recorder& rec) {
  const std::string name = spec.to_string();
  const GridDensity rho = discretize(spec, cfg.support_sigmas, cfg.n_pts);
  const Gaussian* gauss = as_gaussian(spec);
  const bool lc = rho.log_concave() == LogConcavity::yes;
  std::optional<ConstantEstimate> cp;
  rec.guard("poincare_variance", name, [&] {
    cp = poincare_spectral(rho);
    const double var = moments(rho).variance;
    rec.add(simple(std::max(0.0, 1.0 - cp->value / var), 1e-3, "C_P=" + format_double(cp->value),
                   "Var=" + format_double(var)),
            "poincare_variance", name);
    if (gauss)
      rec.add(simple(std::abs(cp->value / var - 1.0), 1e-3, "C_P=" + format_double(cp->value)),
              "poincare_gaussian", name);
  });
  if (!cp) return;

  for (double s : cfg.s_grid) {
    const std::string id = name + "/s=" + format_double(s);
    rec.guard("sandwich", id, [&] {
      const SdpiEstimate e = sdpi_estimate(rho, s, *cp);
      const double eta = *e.eta_power_iter;
      double res = std::max({0.0, e.eta_lower - eta, eta - e.eta_upper});
      if (e.exp_lower) res = std::max(res, *e.exp_lower - eta);
      std::string d = "lower=" + format_double(e.eta_lower) + " eta=" + format_double(eta) +
                      " upper=" + format_double(e.eta_upper) + " iterations=" + std::to_string(e.iterations) +
                      (e.converged ? "" : " (not converged)");
      if (e.exp_lower) d += " exp_lower=" + format_double(*e.exp_lower);
      rec.add(simple(res, 1e-4, "C_P=" + format_double(cp->value), d), "sandwich", id);
      if (gauss) {
        const double exact = gauss->var / (gauss->var + s);
        const double dev = std::max({std::abs(eta - exact), std::abs(e.eta_lower - exact),
                                     std::abs(e.eta_upper - exact)});
        rec.add(simple(dev, 1e-3, "exact=" + format_double(exact), d), "sandwich_gaussian", id);
      }
    });
  }

  rec.guard("bounds_mmse", name, [&] {
    const auto rows = bound_table(rho, cfg.bound_s, cp);
    const double var = moments(rho).variance;
    for (const auto& r : rows) {
      const std::string id = name + "/s=" + format_double(r.s);
      double dm = r.mmse_lb_poincare - r.mmse;
      if (r.mmse_lb_crlb) dm = std::max(dm, *r.mmse_lb_crlb - r.mmse);
      rec.add(simple(std::max(0.0, dm) / var, 1e-4, "mmse=" + format_double(r.mmse),
                     "poincare=" + format_double(r.mmse_lb_poincare) +
                         (r.mmse_lb_crlb ? " crlb=" + format_double(*r.mmse_lb_crlb) : " crlb=unavailable")),
              "bounds_mmse", id);
      const double di = std::max(r.mi_lb_poincare - r.mi, r.mi_lb_epi - r.mi);
      rec.add(simple(std::max(0.0, di), 1e-3, "mi=" + format_double(r.mi),
                     "poincare=" + format_double(r.mi_lb_poincare) + " epi=" + format_double(r.mi_lb_epi)),
              "bounds_mi", id);
      if (r.mi_lb_crlb)
        rec.add(simple(std::max(0.0, *r.mi_lb_crlb - r.mi_lb_epi), 1e-3,
                       "epi=" + format_double(r.mi_lb_epi) + " crlb=" + format_double(*r.mi_lb_crlb)),
                "bounds_epi_vs_crlb", id);
      if (gauss) {
        double dev = std::max({std::abs(r.mmse_lb_poincare - r.mmse), std::abs(r.mi_lb_poincare - r.mi),
                               std::abs(r.mi_lb_epi - r.mi)});
        if (r.mmse_lb_crlb) dev = std::max(dev, std::abs(*r.mmse_lb_crlb - r.mmse));
        else dev = INFINITY;
        rec.add(simple(dev, 1e-3, "mmse=" + format_double(r.mmse) + " mi=" + format_double(r.mi)),
                "bounds_gaussian", id);
      }
    }
    if (std::holds_alternative<Uniform>(spec.variant())) {
      const bool flagged = !rows.empty() && rows.front().crlb_unavailable;
      const bool finite = !rows.empty() && std::isfinite(rows.front().mmse_lb_poincare);
      rec.add(simple(flagged && finite ? 0.0 : 1.0, 0.5, "compact support",
                     flagged ? "crlb_unavailable set" : "crlb_unavailable missing"),
              "crlb_flag", name);
    }
  });

  rec.guard("stam", name, [&] {
    const FisherInformation J = fisher_information(rho);
    if (J.divergent_suspect) {
      rec.skip("stam", name, "Fisher information flagged divergent");
      return;
    }
    const double P = moments(rho).P;
    const double prod = J.value * P * normalized_entropy_power(rho);
    rec.add(simple(std::max(0.0, 1.0 - prod), 1e-3, "Jbar*Nbar=" + format_double(prod)), "stam", name);
  });

  for (double r : {0.2, 1.0, 5.0}) {
    const std::string id = name + "/rho=" + format_double(r);
    rec.guard("i_mmse", id, [&] {
      const double h = 1e-2 * r;
      const double slope = (mutual_information(rho, 1.0 / (r + h)) - mutual_information(rho, 1.0 / (r - h))) / (2.0 * h);
      const double half_mmse = 0.5 * mmse(rho, 1.0 / r);
      rec.add(simple(std::abs(slope - half_mmse) / half_mmse, 1e-3, "h=" + format_double(h),
                     "dI/drho=" + format_double(slope) + " mmse/2=" + format_double(half_mmse)),
              "i_mmse", id);
    });
  }

  for (double s : {0.5, 1.0, 2.0}) {
    const std::string id = name + "/s=" + format_double(s);
    rec.guard("poincare_heat", id, [&] {
      const double cs = poincare_spectral(heat_evolve(rho, s)).value;
      rec.add(simple(std::max(0.0, cs - cp->value - s), 1e-3,
                     "C_P(mu_s)=" + format_double(cs) + " C_P(mu)+s=" + format_double(cp->value + s)),
              "poincare_heat", id);
    });
  }

  rec.guard("low_snr", name, [&] {
    const NormalizedConstants nc = normalized_constants(rho, *cp);
    const double s = 1e3;
    const double poi = mi_lb_poincare(nc.P, nc.cp_bar, s);
    const double epi = mi_lb_epi(nc.P, nc.n_bar, s);
    rec.add(simple(std::max(0.0, (epi - poi) / epi), 1e-6,
                   "s=1000 poincare=" + format_double(poi) + " epi=" + format_double(epi)),
            "low_snr", name);
  });

  rec.guard("convexity_entropy", name, [&] {
    std::vector<double> h;
    for (double s : cfg.convexity_s) h.push_back(differential_entropy(heat_evolve(rho, s)));
    rec.add(check_convexity(cfg.convexity_s, h, Sense::concave), "convexity_entropy", name);
  });

  if (!lc) return;

  rec.guard("convexity_logvar", name, [&] {
    const FieldOnGrid id = make_field(rho.grid(), [](double x) { return x; });
    std::vector<double> v;
    for (double s : cfg.convexity_s) v.push_back(conditional_variance(id, rho, s));
    rec.add(check_convexity(cfg.convexity_s, v, Sense::log_convex), "convexity_logvar", name);
  });

  rec.guard("half_blurring", name, [&] {
    const HalfBlurringTime t = half_blurring_time(rho, 0.5, BlurKind::chi2, cp);
    const double C = cp->value;
    const double outside = std::max({0.0, t.bracket_lo - t.s_star, t.s_star - t.bracket_hi}) / C;
    const std::string d = "s*=" + format_double(t.s_star) + " bracket=[" + format_double(t.bracket_lo) +
                          "," + format_double(t.bracket_hi) + "] evaluations=" + std::to_string(t.evaluations);
    rec.add(simple(outside, 1e-3, "alpha=0.5 C_P=" + format_double(C), d), "half_blurring", name);
    if (gauss)
      rec.add(simple(std::abs(t.s_star - gauss->var), 1e-3 * gauss->var, "exact=" + format_double(gauss->var), d),
              "half_blurring_gaussian", name);
  });
}

// Constants of one measure on the shared pair lattice.
struct LatticeMeasure {
  std::string name;
  GridDensity rho;
  std::optional<ConstantEstimate> c_p, c_ls;
  std::vector<std::optional<ConstantEstimate>> c_phi;  // per configured phi
  std::string error;
};

void pair_checks(const SuiteConfig& cfg, const std::vector<PhiFunction>& phis, const LatticeMeasure& nu,
                 const LatticeMeasure& mu, Recorder& rec) {
  PairFlow flow(nu.rho, mu.rho);
  const std::string pair = pair_label(nu.name, mu.name);
  const LogConcavity lc = mu.rho.log_concave();
  for (const auto& phi : phis) {
    for (double s : cfg.identity_s) {
      const std::string id = phi.name() + "/" + pair + "/s=" + format_double(s);
      rec.guard("de_bruijn", id, [&] {
        CheckReport r = check_de_bruijn(flow, phi, s);
        r.inputs = pair + " " + r.inputs;
        rec.add(r, "de_bruijn", id);
      });
    }
  }
  if (lc == LogConcavity::yes) {
    const std::string id = "kl/" + pair;
    rec.guard("convexity_kl", id, [&] {
      std::vector<double> d;
      for (double s : cfg.convexity_s) d.push_back(resolved_divergence(flow, PhiFunction::kl(), s).value);
      CheckReport r = check_convexity(cfg.convexity_s, d, Sense::convex);
      r.inputs = pair + " " + r.inputs;
      rec.add(r, "convexity_kl", id);
    });
  }
  if (&nu == &mu) {
    rec.skip("contraction_upper", pair, "identical measures: D(nu||mu) = 0");
    return;
  }
  for (std::size_t k = 0; k < phis.size(); ++k) {
    const PhiFunction& phi = phis[k];
    const std::string id = phi.name() + "/" + pair;
    rec.guard("contraction_upper", id, [&] {
      const std::optional<ConstantEstimate>& c =
          phi.kind() == PhiFunction::Kind::kl ? mu.c_ls
                                              : (phi.kind() == PhiFunction::Kind::chi2 ? mu.c_p : mu.c_phi[k]);
      if (!c) fail(ErrorKind::dependency, "constant unavailable for " + mu.name + ": " + mu.error);
      for (CheckReport r : check_contraction_bounds(flow, lc, phi, cfg.s_grid, *c)) {
        const std::string family = r.check_id;
        r.inputs = pair + " " + r.inputs;
        rec.add(r, family, id);
      }
    });
  }
}

void bochner_checks(const SuiteConfig& cfg, const std::vector<PhiFunction>& phis, const Gaussian& g,
                    double theta, Recorder& rec) {
  const DistributionSpec mu_spec = DistributionSpec::gaussian(g.mean, g.var);
  const DistributionSpec nu_spec = DistributionSpec::gaussian(g.mean + theta * std::sqrt(g.var), g.var);
  const DistributionSpec specs[] = {nu_spec, mu_spec};
  const Grid lattice = common_grid(specs, cfg.support_sigmas, cfg.n_pts);
  PairFlow flow(discretize_on(nu_spec, lattice), discretize_on(mu_spec, lattice));
  const std::string pair = pair_label(nu_spec.to_string(), mu_spec.to_string());
  for (const auto& phi : phis) {
    for (double s : cfg.identity_s) {
      const std::string id = phi.name() + "/" + pair + "/s=" + format_double(s);
      rec.guard("bochner", id, [&] {
        CheckReport r = check_bochner_conjecture(flow, LogConcavity::yes, phi, s);
        r.inputs = pair + " " + r.inputs;
        rec.add(r, "bochner", id);
      });
    }
  }
}

template <class F>
void parallel_tasks(std::size_t n, F&& task) {
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) task(static_cast<std::size_t>(i));
}

// Lattice for pair checks: the finest default spacing among non-Uniform
// measures (Uniform measures are re-sampled with cell averages), anchored on
// the first Uniform endpoint.
Grid pair_lattice(const SuiteConfig& cfg, const std::vector<DistributionSpec>& specs) {
  double dx = INFINITY, lo = INFINITY, hi = -INFINITY;
  for (const auto& s : specs) {
    const Grid g = default_grid(s, cfg.support_sigmas, cfg.n_pts);
    lo = std::min(lo, g.x_min);
    hi = std::max(hi, g.x_max());
    if (!std::holds_alternative<Uniform>(s.variant())) dx = std::min(dx, g.dx);
  }
  if (!std::isfinite(dx)) return common_grid(specs, cfg.support_sigmas, cfg.n_pts);
  double anchor = lo;
  for (const auto& s : specs)
    if (const auto* u = std::get_if<Uniform>(&s.variant())) {
      anchor = u->a - 0.5 * dx;
      break;
    }
  const double x_min = anchor + std::floor((lo - anchor) / dx) * dx;
  const auto n = static_cast<std::size_t>(std::ceil((hi - x_min) / dx - 1e-9)) + 1;
  return Grid::make(x_min, dx, n);
}

GridDensity on_lattice(const SuiteConfig& cfg, const DistributionSpec& spec, const Grid& lattice) {
  const Grid g = default_grid(spec, cfg.support_sigmas, cfg.n_pts);
  const double i0 = std::floor((g.x_min - lattice.x_min) / lattice.dx + 1e-9);
  const double i1 = std::ceil((g.x_max() - lattice.x_min) / lattice.dx - 1e-9);
  const Grid sub = Grid::make(lattice.x_min + i0 * lattice.dx, lattice.dx,
                              std::max<std::size_t>(static_cast<std::size_t>(i1 - i0) + 1, 8));
  return discretize_on(spec, sub);
}

}  // namespace

SuiteConfig SuiteConfig::defaults() {
  SuiteConfig c;
  c.measures = {"gaussian(0,1)", "gaussian(1,1)", "uniform(0,1)", "laplace(0,1)",
                "mix(0.5*gaussian(-2,1),0.5*gaussian(2,1))"};
  c.phis = {"kl", "chi2", "power:1.5"};
  c.s_grid = {0.1, 0.5, 1.0, 2.0, 5.0};
  c.bound_s = {0.1, 0.5, 1.0, 2.0, 5.0, 10.0};
  c.identity_s = {0.5, 1.0, 2.0};
  c.convexity_s = range(0.2, 3.0, 0.2);
  return c;
}

void SuiteConfig::validate() const {
  if (measures.empty()) fail(ErrorKind::parameter, "suite needs at least one measure");
  for (const auto& m : measures) parse_spec(m);
  if (phis.empty()) fail(ErrorKind::parameter, "suite needs at least one divergence");
  for (const auto& p : phis) PhiFunction::parse(p);
  check_ascending_positive(s_grid, "s_grid");
  check_ascending_positive(bound_s, "bound_s");
  check_ascending_positive(identity_s, "identity_s");
  check_ascending_positive(convexity_s, "convexity_s");
  if (convexity_s.size() < 5) fail(ErrorKind::parameter, "convexity_s needs at least 5 values");
  const double step = convexity_s[1] - convexity_s[0];
  for (std::size_t i = 1; i < convexity_s.size(); ++i)
    if (std::abs(convexity_s[i] - convexity_s[i - 1] - step) > 1e-9)
      fail(ErrorKind::parameter, "convexity_s must be equally spaced");
  for (double s : identity_s)
    if (s - default_step(s) <= 0.0) fail(ErrorKind::parameter, "identity_s values are too small");
  if (n_pts < 8 || (n_pts & (n_pts - 1))) fail(ErrorKind::parameter, "n_pts must be a power of two >= 8");
  if (!(support_sigmas >= 4.0)) fail(ErrorKind::parameter, "support_sigmas must be at least 4");
  for (const auto& [k, v] : tolerances) {
    if (!tolerance_keys().count(k)) fail(ErrorKind::parameter, "unknown tolerance key '" + k + "'");
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::parameter, "tolerance '" + k + "' must be positive");
  }
}

double SuiteConfig::tolerance(const std::string& key, double fallback) const {
  auto it = tolerances.find(key);
  return it == tolerances.end() ? fallback : it->second;
}

SuiteReport run_suite(const SuiteConfig& cfg) {
  cfg.validate();
  std::vector<DistributionSpec> specs;
  for (const auto& m : cfg.measures) specs.push_back(parse_spec(m));
  std::vector<PhiFunction> phis;
  for (const auto& p : cfg.phis) phis.push_back(PhiFunction::parse(p));
  const std::size_t n_measures = specs.size();

  // Constants on the pair lattice, one task per measure.
  const Grid lattice = pair_lattice(cfg, specs);
  std::vector<std::optional<LatticeMeasure>> lm(n_measures);
  parallel_tasks(n_measures, [&](std::size_t i) {
    LatticeMeasure m{specs[i].to_string(), on_lattice(cfg, specs[i], lattice), {}, {}, {}, {}};
    m.c_phi.resize(phis.size());
    try {
      m.c_p = poincare_spectral(m.rho);
      m.c_ls = as_gaussian(specs[i]) ? log_sobolev_constant(specs[i]) : log_sobolev_constant(m.rho);
      for (std::size_t k = 0; k < phis.size(); ++k)
        if (phis[k].kind() == PhiFunction::Kind::power) m.c_phi[k] = phi_sobolev_lower(m.rho, phis[k]);
    } catch (const std::exception& e) {
      m.error = e.what();
    }
    lm[i] = std::move(m);
  });

  // Task list: measures, ordered pairs, Gaussian tilts.
  std::vector<std::function<void(Recorder&)>> tasks;
  for (std::size_t i = 0; i < n_measures; ++i)
    tasks.push_back([&, i](Recorder& rec) { measure_checks(cfg, specs[i], rec); });
  for (std::size_t i = 0; i < n_measures; ++i)
    for (std::size_t j = 0; j < n_measures; ++j)
      tasks.push_back([&, i, j](Recorder& rec) { pair_checks(cfg, phis, *lm[i], *lm[j], rec); });
  std::set<std::string> seen;
  for (const auto& s : specs) {
    const Gaussian* g = as_gaussian(s);
    if (!g || !seen.insert(s.to_string()).second) continue;
    for (double theta : {0.5, 1.0}) {
      const Gaussian gg = *g;
      tasks.push_back([&, gg, theta](Recorder& rec) { bochner_checks(cfg, phis, gg, theta, rec); });
    }
  }

  std::vector<TaskOutput> outs(tasks.size());
  parallel_tasks(tasks.size(), [&](std::size_t t) {
    Recorder rec(cfg, outs[t]);
    rec.guard("task", std::to_string(t), [&] { tasks[t](rec); });
  });

  SuiteReport rep;
  for (auto& o : outs) {
    for (auto& r : o.reports) rep.reports.push_back(std::move(r));
    for (auto& s : o.skipped) rep.skipped.push_back(std::move(s));
  }
  std::stable_sort(rep.reports.begin(), rep.reports.end(),
                   [](const CheckReport& a, const CheckReport& b) { return a.check_id < b.check_id; });
  std::stable_sort(rep.skipped.begin(), rep.skipped.end(),
                   [](const SkippedCheck& a, const SkippedCheck& b) { return a.check_id < b.check_id; });
  for (const auto& r : rep.reports) {
    ++rep.summary.total;
    if (r.label == "conjecture_check") ++rep.summary.conjecture_checks;
    if (r.informational) {
      ++rep.summary.informational;
    } else if (r.passed) {
      ++rep.summary.passed;
    } else {
      ++rep.summary.failed;
    }
  }
  rep.summary.skipped = rep.skipped.size();
  return rep;
}

}  // namespace heatflow
