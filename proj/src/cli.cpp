#include "heatflow/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "detail.hpp"
#include "heatflow/error.hpp"

namespace heatflow {

using nlohmann::json;
using detail::format_double;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

template <class E, std::size_t N>
E enum_from(const json& j, const E (&values)[N], const char* what) {
  const std::string s = j.get<std::string>();
  for (E e : values)
    if (s == to_string(e)) return e;
  fail(ErrorKind::usage, std::string("unknown ") + what + " '" + s + "'");
}

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void write_suite_csv(std::ostream& os, const SuiteReport& r) {
  os << "check_id,passed,informational,label,residual,tolerance,inputs,diagnostics\n";
  for (const auto& c : r.reports)
    os << csv_field(c.check_id) << ',' << (c.passed ? "true" : "false") << ','
       << (c.informational ? "true" : "false") << ',' << c.label << ',' << format_double(c.residual)
       << ',' << format_double(c.tolerance) << ',' << csv_field(c.inputs) << ','
       << csv_field(c.diagnostics) << '\n';
}

std::size_t env_n_pts() {
  const char* env = std::getenv("HEATFLOW_NPTS");
  if (!env || !*env) return kDefaultNPts;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || v < 8 || (v & (v - 1)))
    fail(ErrorKind::usage, std::string("HEATFLOW_NPTS must be a power of two >= 8, got '") + env + "'");
  return static_cast<std::size_t>(v);
}

// Raised for failures of the computation itself (exit 1), as opposed to
// argument or configuration problems (exit 2).
struct ComputeFailure {
  std::string message;
};

template <class F>
auto compute(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw ComputeFailure{std::string(to_string(e.kind())) + " error: " + e.what()};
  } catch (const std::exception& e) {
    throw ComputeFailure{e.what()};
  }
}

}  // namespace

json to_json(const DivergenceCurve& c) {
  return {{"phi", c.phi.name()}, {"s", c.s_values}, {"D", c.d_values}};
}

json to_json(const SdpiEstimate& e) {
  return {{"s", e.s},
          {"eta_lower", e.eta_lower},
          {"eta_upper", e.eta_upper},
          {"eta_power_iter", opt(e.eta_power_iter)},
          {"exp_lower", opt(e.exp_lower)},
          {"iterations", e.iterations},
          {"converged", e.converged}};
}

json to_json(const HalfBlurringTime& t) {
  return {{"s_star", t.s_star},
          {"bracket_lo", t.bracket_lo},
          {"bracket_hi", t.bracket_hi},
          {"proxy", t.proxy},
          {"evaluations", t.evaluations}};
}

json to_json(const ConstantEstimate& c) {
  return {{"kind", to_string(c.kind)},
          {"lambda", opt(c.lambda)},
          {"value", c.value},
          {"method", to_string(c.method)},
          {"rigor", to_string(c.rigor)},
          {"error_estimate", c.error_estimate},
          {"diagnostic", c.diagnostic}};
}

json to_json(const BoundRow& r) {
  return {{"s", r.s},
          {"mmse", r.mmse},
          {"mmse_lb_poincare", r.mmse_lb_poincare},
          {"mmse_lb_crlb", opt(r.mmse_lb_crlb)},
          {"mi", r.mi},
          {"mi_lb_poincare", r.mi_lb_poincare},
          {"mi_lb_epi", r.mi_lb_epi},
          {"mi_lb_crlb", opt(r.mi_lb_crlb)},
          {"crlb_unavailable", r.crlb_unavailable},
          {"poincare_tighter_than_crlb", r.poincare_tighter_than_crlb}};
}

json to_json(const CheckReport& r) {
  json j = {{"check_id", r.check_id},   {"inputs", r.inputs},
            {"residual", r.residual},   {"tolerance", r.tolerance},
            {"passed", r.passed},       {"informational", r.informational},
            {"diagnostics", r.diagnostics}};
  if (!r.label.empty()) j["label"] = r.label;
  return j;
}

json to_json(const SuiteReport& r) {
  json reports = json::array(), skipped = json::array();
  for (const auto& c : r.reports) reports.push_back(to_json(c));
  for (const auto& s : r.skipped) skipped.push_back({{"check_id", s.check_id}, {"reason", s.reason}});
  const auto& m = r.summary;
  return {{"reports", reports},
          {"skipped", skipped},
          {"summary",
           {{"total", m.total},
            {"passed", m.passed},
            {"failed", m.failed},
            {"informational", m.informational},
            {"conjecture_checks", m.conjecture_checks},
            {"skipped", m.skipped}}}};
}

json to_json(const SuiteConfig& c) {
  return {{"measures", c.measures},
          {"phis", c.phis},
          {"s_grid", c.s_grid},
          {"bound_s", c.bound_s},
          {"identity_s", c.identity_s},
          {"convexity_s", c.convexity_s},
          {"n_pts", c.n_pts},
          {"support_sigmas", c.support_sigmas},
          {"tolerances", c.tolerances},
          {"format", c.format == OutputFormat::json ? "json" : "csv"},
          {"output", c.output}};
}

SuiteConfig suite_config_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::usage, "suite config must be a JSON object");
  SuiteConfig c = SuiteConfig::defaults();
  c.n_pts = env_n_pts();
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "measures") v.get_to(c.measures);
      else if (key == "phis") v.get_to(c.phis);
      else if (key == "s_grid") v.get_to(c.s_grid);
      else if (key == "bound_s") v.get_to(c.bound_s);
      else if (key == "identity_s") v.get_to(c.identity_s);
      else if (key == "convexity_s") v.get_to(c.convexity_s);
      else if (key == "n_pts") v.get_to(c.n_pts);
      else if (key == "support_sigmas") v.get_to(c.support_sigmas);
      else if (key == "tolerances") v.get_to(c.tolerances);
      else if (key == "output") v.get_to(c.output);
      else if (key == "format") {
        const auto f = v.get<std::string>();
        if (f != "json" && f != "csv") fail(ErrorKind::usage, "format must be json or csv");
        c.format = f == "json" ? OutputFormat::json : OutputFormat::csv;
      } else {
        fail(ErrorKind::usage, "unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::usage, std::string("malformed suite config: ") + e.what());
  }
  return c;
}

SdpiEstimate sdpi_from_json(const json& j) {
  SdpiEstimate e;
  e.s = j.at("s").get<double>();
  e.eta_lower = j.at("eta_lower").get<double>();
  e.eta_upper = j.at("eta_upper").get<double>();
  e.eta_power_iter = opt_from(j, "eta_power_iter");
  e.exp_lower = opt_from(j, "exp_lower");
  e.iterations = j.at("iterations").get<int>();
  e.converged = j.at("converged").get<bool>();
  return e;
}

ConstantEstimate constant_from_json(const json& j) {
  static constexpr ConstantKind kinds[] = {ConstantKind::poincare, ConstantKind::log_sobolev,
                                           ConstantKind::phi_sobolev};
  static constexpr ConstantMethod methods[] = {ConstantMethod::spectral, ConstantMethod::catalog,
                                               ConstantMethod::variational_lower};
  static constexpr Rigor rigors[] = {Rigor::exact_tolerance, Rigor::lower_bound_only};
  ConstantEstimate c{enum_from(j.at("kind"), kinds, "constant kind"),
                     opt_from(j, "lambda"),
                     j.at("value").get<double>(),
                     enum_from(j.at("method"), methods, "method"),
                     enum_from(j.at("rigor"), rigors, "rigor"),
                     j.value("error_estimate", 0.0),
                     j.value("diagnostic", std::string())};
  c.validate();
  return c;
}

DivergenceCurve curve_from_json(const json& j) {
  return {j.at("s").get<std::vector<double>>(), j.at("D").get<std::vector<double>>(),
          PhiFunction::parse(j.at("phi").get<std::string>())};
}

void write_curve_csv(std::ostream& os, const DivergenceCurve& c) {
  os << "s,D\n";
  for (std::size_t i = 0; i < c.s_values.size(); ++i)
    os << format_double(c.s_values[i]) << ',' << format_double(c.d_values[i]) << '\n';
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heat-flow divergences, contraction coefficients and functional-inequality constants"};
  app.name("heatflow");
  app.require_subcommand(1);

  struct Common {
    std::size_t n_pts = 0;
    double support_sigmas = kDefaultSupportSigmas;
    std::string format;
    std::string output;
  } common;
  std::string mu_text, nu_text, phi_text, s_grid_text;
  double s = 0.0, alpha = 0.5;
  std::string method = "krylov";
  std::string config_path;

  auto add_common = [&](CLI::App* sub, const std::string& default_format) {
    sub->add_option("--n-pts", common.n_pts, "grid points (power of two; default 4096 or HEATFLOW_NPTS)");
    sub->add_option("--support-sigmas", common.support_sigmas, "support half-width in standard deviations")
        ->capture_default_str();
    sub->add_option("--format", common.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->default_str(default_format);
    sub->add_option("--output", common.output, "write to this file instead of stdout");
  };

  auto* evolve = app.add_subcommand("evolve", "evolved density as CSV (x,rho)");
  evolve->add_option("--mu", mu_text, "distribution spec")->required();
  evolve->add_option("--s", s, "noise variance")->required();
  add_common(evolve, "csv");

  auto* divergence = app.add_subcommand("divergence", "divergence curve along the heat flow");
  divergence->add_option("--nu", nu_text, "distribution spec")->required();
  divergence->add_option("--mu", mu_text, "distribution spec")->required();
  divergence->add_option("--phi", phi_text, "kl | chi2 | power:L")->required();
  divergence->add_option("--s-grid", s_grid_text, "a:b:n or a single value")->required();
  add_common(divergence, "json");

  auto* sdpi = app.add_subcommand("sdpi", "contraction coefficient bounds and half-blurring time");
  sdpi->add_option("--mu", mu_text, "distribution spec")->required();
  sdpi->add_option("--s", s, "noise variance")->required();
  sdpi->add_option("--alpha", alpha, "half-blurring level")->capture_default_str();
  sdpi->add_option("--method", method, "eigenvalue iteration")
      ->check(CLI::IsMember({"krylov", "power"}))
      ->capture_default_str();
  add_common(sdpi, "json");

  auto* estimate = app.add_subcommand("estimate", "MMSE / mutual information bound table");
  estimate->add_option("--mu", mu_text, "distribution spec")->required();
  estimate->add_option("--s-grid", s_grid_text, "a:b:n or a single value")->required();
  add_common(estimate, "csv");

  auto* constants = app.add_subcommand("constants", "Poincare, log-Sobolev or phi-Sobolev constant");
  constants->add_option("--mu", mu_text, "distribution spec")->required();
  constants->add_option("--phi", phi_text, "chi2 (Poincare, default) | kl (log-Sobolev) | power:L");
  add_common(constants, "json");

  auto* verify = app.add_subcommand("verify", "run the verification suite");
  verify->add_option("--config", config_path, "JSON suite configuration");
  add_common(verify, "json");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  std::string format;
  std::function<void(std::ostream&)> emit;
  bool checks_failed = false;

  // Argument and configuration parsing: exit 2 on failure.
  std::optional<DistributionSpec> mu, nu;
  std::optional<PhiFunction> phi;
  std::vector<double> s_list;
  SuiteConfig cfg;
  try {
    format = common.format;
    if (common.n_pts == 0) common.n_pts = env_n_pts();
    if (common.n_pts < 8 || (common.n_pts & (common.n_pts - 1)))
      fail(ErrorKind::usage, "--n-pts must be a power of two >= 8");
    if (!mu_text.empty()) mu = parse_spec(mu_text);
    if (!nu_text.empty()) nu = parse_spec(nu_text);
    if (!phi_text.empty()) phi = PhiFunction::parse(phi_text);
    if (!s_grid_text.empty()) s_list = parse_s_grid(s_grid_text);
    if (!(s >= 0.0) || !std::isfinite(s)) fail(ErrorKind::usage, "--s must be nonnegative");
    if (*sdpi && (!(s > 0.0))) fail(ErrorKind::usage, "--s must be positive");
    if (*sdpi && !(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::usage, "--alpha must lie in (0, 1)");
    if (*verify) {
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) fail(ErrorKind::usage, "cannot read config '" + config_path + "'");
        json j;
        try {
          j = json::parse(in);
        } catch (const json::exception& e) {
          fail(ErrorKind::usage, std::string("config is not valid JSON: ") + e.what());
        }
        cfg = suite_config_from_json(j);
      } else {
        cfg = SuiteConfig::defaults();
        cfg.n_pts = env_n_pts();
      }
      if (verify->count("--n-pts")) cfg.n_pts = common.n_pts;
      if (verify->count("--support-sigmas")) cfg.support_sigmas = common.support_sigmas;
      if (verify->count("--format")) cfg.format = format == "csv" ? OutputFormat::csv : OutputFormat::json;
      if (verify->count("--output")) cfg.output = common.output;
      cfg.validate();
      format = cfg.format == OutputFormat::csv ? "csv" : "json";
      common.output = cfg.output;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  const std::size_t n_pts = common.n_pts;
  const double k = common.support_sigmas;
  try {
    if (*evolve) {
      const GridDensity rho = compute([&] { return heat_evolve(discretize(*mu, k, n_pts), s); });
      emit = [rho, format](std::ostream& os) {
        if (format == "json") {
          os << json{{"x", rho.grid().nodes()}, {"rho", rho.vector()}}.dump(2) << '\n';
        } else {
          write_density_csv(os, rho);
        }
      };
    } else if (*divergence) {
      const DivergenceCurve c = compute([&] {
        const DistributionSpec pair[] = {*nu, *mu};
        const Grid g = common_grid(pair, k, n_pts);
        return divergence_curve(discretize_on(*nu, g), discretize_on(*mu, g), *phi, s_list);
      });
      emit = [c, format](std::ostream& os) {
        if (format == "csv") write_curve_csv(os, c);
        else os << to_json(c).dump(2) << '\n';
      };
    } else if (*sdpi) {
      json j = compute([&] {
        const GridDensity rho = discretize(*mu, k, n_pts);
        const ConstantEstimate cp = poincare_spectral(rho);
        SdpiEstimate e = eta_chi2_bounds(rho, s, cp);
        const SdpiEstimate it = maximal_correlation(
            rho, s, 500, 1e-10, method == "power" ? IterationMethod::power : IterationMethod::krylov);
        e.eta_power_iter = it.eta_power_iter;
        e.iterations = it.iterations;
        e.converged = it.converged;
        json r = to_json(e);
        r["c_p"] = cp.value;
        r["alpha"] = alpha;
        r["half_blurring_time"] = to_json(half_blurring_time(rho, alpha, BlurKind::chi2, cp));
        return r;
      });
      if (format == "csv") fail(ErrorKind::usage, "sdpi supports json output only");
      emit = [j](std::ostream& os) { os << j.dump(2) << '\n'; };
    } else if (*estimate) {
      const auto rows = compute([&] {
        const GridDensity rho = discretize(*mu, k, n_pts);
        return bound_table(rho, s_list, poincare_spectral(rho));
      });
      emit = [rows, format](std::ostream& os) {
        if (format == "json") {
          json a = json::array();
          for (const auto& r : rows) a.push_back(to_json(r));
          os << a.dump(2) << '\n';
        } else {
          write_bound_table_csv(os, rows);
        }
      };
    } else if (*constants) {
      const ConstantEstimate c = compute([&] {
        if (!phi || phi->kind() == PhiFunction::Kind::chi2)
          return poincare_spectral(discretize(*mu, k, n_pts));
        if (phi->kind() == PhiFunction::Kind::kl) return log_sobolev_constant(*mu, k, n_pts);
        return phi_sobolev_lower(discretize(*mu, k, n_pts), *phi);
      });
      if (format == "csv") fail(ErrorKind::usage, "constants supports json output only");
      emit = [c](std::ostream& os) { os << to_json(c).dump(2) << '\n'; };
    } else if (*verify) {
      const SuiteReport rep = compute([&] { return run_suite(cfg); });
      checks_failed = !rep.all_passed();
      emit = [rep, format](std::ostream& os) {
        if (format == "csv") write_suite_csv(os, rep);
        else os << to_json(rep).dump(2) << '\n';
      };
      err << "verify: " << rep.summary.passed << " passed, " << rep.summary.failed << " failed, "
          << rep.summary.informational << " informational, " << rep.summary.skipped << " skipped\n";
    }
  } catch (const ComputeFailure& f) {
    err << "error: " << f.message << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  if (common.output.empty()) {
    emit(out);
  } else {
    std::ofstream file(common.output, std::ios::binary);
    if (!file) {
      err << "error: cannot open '" << common.output << "' for writing\n";
      return 1;
    }
    emit(file);
    if (!file.flush()) {
      err << "error: failed writing '" << common.output << "'\n";
      return 1;
    }
  }
  return checks_failed ? 1 : 0;
}

}  // namespace heatflow
