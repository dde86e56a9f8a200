#include "heatflow/constants.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "detail.hpp"
#include "heatflow/error.hpp"

namespace heatflow {

const char* to_string(ConstantKind k) noexcept {
  switch (k) {
    case ConstantKind::poincare: return "poincare";
    case ConstantKind::log_sobolev: return "log_sobolev";
    case ConstantKind::phi_sobolev: return "phi_sobolev";
  }
  return "unknown";
}

const char* to_string(ConstantMethod m) noexcept {
  switch (m) {
    case ConstantMethod::spectral: return "spectral";
    case ConstantMethod::catalog: return "catalog";
    case ConstantMethod::variational_lower: return "variational_lower";
  }
  return "unknown";
}

const char* to_string(Rigor r) noexcept {
  switch (r) {
    case Rigor::exact_tolerance: return "exact_tolerance";
    case Rigor::lower_bound_only: return "lower_bound_only";
  }
  return "unknown";
}

void ConstantEstimate::validate() const {
  if (!(value > 0.0) || !std::isfinite(value))
    fail(ErrorKind::numeric, std::string(to_string(kind)) + " constant must be positive and finite");
  if (method == ConstantMethod::variational_lower && rigor != Rigor::lower_bound_only)
    fail(ErrorKind::parameter, "variational estimates are lower bounds only");
}

namespace {

// Symmetric tridiagonal form M^{-1/2} K M^{-1/2} of the weighted Neumann
// Laplacian on the connected block of nodes where rho > tau * max.
struct SpectralProblem {
  std::size_t lo = 0;  // first included node
  std::vector<double> mass;
  std::vector<double> diag;
  std::vector<double> off;  // off[j] couples j and j+1
};

SpectralProblem build_problem(std::span<const double> rho, double dx) {
  const double cut = kExclusionTau * *std::max_element(rho.begin(), rho.end());
  std::size_t lo = 0, hi = rho.size();
  while (lo < rho.size() && rho[lo] <= cut) ++lo;
  while (hi > lo && rho[hi - 1] <= cut) --hi;
  if (hi - lo < 3) fail(ErrorKind::numeric, "support too small for the spectral problem");
  for (std::size_t i = lo; i < hi; ++i)
    if (rho[i] <= cut) fail(ErrorKind::numeric, "support is disconnected on the grid");
  const std::size_t n = hi - lo;
  SpectralProblem p;
  p.lo = lo;
  p.mass.resize(n);
  p.diag.assign(n, 0.0);
  p.off.resize(n - 1);
  for (std::size_t j = 0; j < n; ++j) p.mass[j] = rho[lo + j] * dx;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double c = 0.5 * (rho[lo + j] + rho[lo + j + 1]) / dx;
    p.diag[j] += c;
    p.diag[j + 1] += c;
    p.off[j] = -c;
  }
  for (std::size_t j = 0; j < n; ++j) p.diag[j] /= p.mass[j];
  for (std::size_t j = 0; j + 1 < n; ++j) p.off[j] /= std::sqrt(p.mass[j] * p.mass[j + 1]);
  return p;
}

// Number of eigenvalues below x (Sturm sequence via LDL^T pivots).
std::size_t sturm_count(const SpectralProblem& p, double x) {
  std::size_t count = 0;
  double d = 1.0;
  const double tiny = std::numeric_limits<double>::min();
  for (std::size_t j = 0; j < p.diag.size(); ++j) {
    const double b2 = j ? p.off[j - 1] * p.off[j - 1] : 0.0;
    d = p.diag[j] - x - (j ? b2 / d : 0.0);
    if (d == 0.0) d = -tiny;
    if (d < 0.0) ++count;
  }
  return count;
}

// k-th smallest eigenvalue (0-based) by bisection.
double eigenvalue(const SpectralProblem& p, std::size_t k) {
  double hi = 0.0;
  for (std::size_t j = 0; j < p.diag.size(); ++j) {
    const double r = (j ? std::abs(p.off[j - 1]) : 0.0) + (j + 1 < p.diag.size() ? std::abs(p.off[j]) : 0.0);
    hi = std::max(hi, p.diag[j] + r);
  }
  double lo = -1e-9 * hi;
  for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * std::abs(hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(p, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Solves (T - sigma I) y = r with partial pivoting (dgtsv style).
std::vector<double> shifted_solve(const SpectralProblem& p, double sigma, std::vector<double> r) {
  const std::size_t n = p.diag.size();
  std::vector<double> dl(p.off), d(n), du(p.off), du2(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) d[j] = p.diag[j] - sigma;
  const double eps = std::numeric_limits<double>::epsilon() * (std::abs(p.diag[0]) + 1.0);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    if (std::abs(d[j]) >= std::abs(dl[j])) {
      if (d[j] == 0.0) d[j] = eps;
      const double f = dl[j] / d[j];
      d[j + 1] -= f * du[j];
      r[j + 1] -= f * r[j];
      dl[j] = 0.0;
    } else {
      const double f = d[j] / dl[j];
      d[j] = dl[j];
      const double tmp = d[j + 1];
      d[j + 1] = du[j] - f * tmp;
      if (j + 2 < n) {
        du2[j] = du[j + 1];
        du[j + 1] = -f * du2[j];
      }
      du[j] = tmp;
      std::swap(r[j], r[j + 1]);
      r[j + 1] -= f * r[j];
    }
  }
  if (d[n - 1] == 0.0) d[n - 1] = eps;
  std::vector<double> y(n);
  y[n - 1] = r[n - 1] / d[n - 1];
  if (n > 1) y[n - 2] = (r[n - 2] - du[n - 2] * y[n - 1]) / d[n - 2];
  for (std::size_t jj = n - 2; jj-- > 0;)
    y[jj] = (r[jj] - du[jj] * y[jj + 1] - du2[jj] * y[jj + 2]) / d[jj];
  return y;
}

double lambda1_of(std::span<const double> rho, double dx) {
  return eigenvalue(build_problem(rho, dx), 1);
}

std::vector<double> decimate(std::span<const double> v, std::size_t step) {
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); i += step) out.push_back(v[i]);
  return out;
}

// Discrete expectation / gradient-energy pair consistent with the spectral
// problem: lumped node weights and cell-midpoint gradients.
struct VariationalContext {
  double dx;
  std::vector<double> w;   // node weights, sum 1 over the included block
  std::vector<double> cw;  // cell weights (rho_j + rho_{j+1}) / 2 * dx, normalized alike
  std::vector<double> z;   // standardized abscissa
  std::size_t lo;

  double expect(const std::vector<double>& g) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * g[j];
    return acc;
  }
  // Cell-weighted sum of weight(mid) * ((g_{j+1} - g_j) / dx)^2.
  template <class F>
  double energy(const std::vector<double>& g, F&& weight) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < cw.size(); ++j) {
      const double d = (g[j + 1] - g[j]) / dx;
      acc += cw[j] * weight(0.5 * (g[j] + g[j + 1])) * d * d;
    }
    return acc;
  }
  double energy(const std::vector<double>& g) const {
    return energy(g, [](double) { return 1.0; });
  }
};

VariationalContext make_context(const GridDensity& mu) {
  const auto rho = mu.values();
  const Grid& g = mu.grid();
  const SpectralProblem p = build_problem(rho, g.dx);
  const Moments mo = moments(mu);
  const double sd = std::sqrt(mo.variance);
  VariationalContext c;
  c.dx = g.dx;
  c.lo = p.lo;
  const std::size_t n = p.mass.size();
  c.w = p.mass;
  double total = 0.0;
  for (double v : c.w) total += v;
  for (double& v : c.w) v /= total;
  c.cw.resize(n - 1);
  for (std::size_t j = 0; j + 1 < n; ++j) c.cw[j] = 0.5 * (rho[p.lo + j] + rho[p.lo + j + 1]) * g.dx / total;
  c.z.resize(n);
  for (std::size_t j = 0; j < n; ++j) c.z[j] = (g.x(p.lo + j) - mo.mean) / sd;
  return c;
}

// Centers under the node weights and scales to unit sup norm.
std::vector<double> centered_unit(const VariationalContext& c, std::vector<double> v) {
  const double m = c.expect(v);
  double sup = 0.0;
  for (double& x : v) {
    x -= m;
    sup = std::max(sup, std::abs(x));
  }
  if (sup > 0.0)
    for (double& x : v) x /= sup;
  return v;
}

std::vector<std::vector<double>> hermite_basis(const VariationalContext& c, int degree) {
  const std::size_t n = c.z.size();
  std::vector<std::vector<double>> he(degree + 1, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    he[0][j] = 1.0;
    if (degree >= 1) he[1][j] = c.z[j];
    for (int k = 1; k < degree; ++k) he[k + 1][j] = c.z[j] * he[k][j] - k * he[k - 1][j];
  }
  std::vector<std::vector<double>> out;
  for (int k = 1; k <= degree; ++k) out.push_back(centered_unit(c, he[k]));
  return out;
}

// Best Poincare Rayleigh quotient in span(basis): returns the maximizing
// combination (centered, unit sup) and its coefficients.
std::pair<std::vector<double>, Eigen::VectorXd> best_polynomial(
    const VariationalContext& c, const std::vector<std::vector<double>>& basis) {
  const int k = static_cast<int>(basis.size());
  Eigen::MatrixXd A(k, k), B(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = a; b < k; ++b) {
      double cov = 0.0, en = 0.0;
      for (std::size_t j = 0; j < c.w.size(); ++j) cov += c.w[j] * basis[a][j] * basis[b][j];
      for (std::size_t j = 0; j < c.cw.size(); ++j)
        en += c.cw[j] * (basis[a][j + 1] - basis[a][j]) * (basis[b][j + 1] - basis[b][j]);
      A(a, b) = A(b, a) = cov;
      B(a, b) = B(b, a) = en / (c.dx * c.dx);
    }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, B);
  if (es.info() != Eigen::Success) fail(ErrorKind::numeric, "polynomial Rayleigh problem failed");
  Eigen::VectorXd coef = es.eigenvectors().col(k - 1);
  std::vector<double> v(c.w.size(), 0.0);
  for (int a = 0; a < k; ++a)
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += coef[a] * basis[a][j];
  double sup = 0.0;
  for (double x : v) sup = std::max(sup, std::abs(x));
  auto out = centered_unit(c, v);
  return {out, coef / sup};
}

// Entropy of g >= 0 under the node weights (scale invariant).
double entropy(const VariationalContext& c, const std::vector<double>& g) {
  const double m = c.expect(g);
  double acc = 0.0;
  const PhiFunction kl = PhiFunction::kl();
  for (std::size_t j = 0; j < g.size(); ++j) acc += c.w[j] * kl.bregman(g[j] / m - 1.0);
  return acc * m;
}

// E f^2 log f^2 / (2 E|f'|^2) with the entropy normalized to E f^2 = 1.
double log_sobolev_ratio(const VariationalContext& c, const std::vector<double>& f) {
  std::vector<double> g(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) g[j] = f[j] * f[j];
  const double en = c.energy(f);
  if (!(en > 0.0)) return 0.0;
  const double r = entropy(c, g) / (2.0 * en);
  return std::isfinite(r) ? r : 0.0;
}

double phi_ratio(const VariationalContext& c, const PhiFunction& phi, std::vector<double> f) {
  const double m = c.expect(f);
  for (double& v : f) v /= m;  // enforce E f = 1
  double num = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) num += c.w[j] * phi.bregman(f[j] - 1.0);
  const double den = c.energy(f, [&](double x) { return phi.d2(x); });
  if (!(den > 0.0)) return 0.0;
  const double r = 2.0 * num / den;
  return std::isfinite(r) ? r : 0.0;
}

// Minimal Nelder-Mead maximizer.
std::pair<Eigen::VectorXd, double> nelder_mead_max(const std::function<double(const Eigen::VectorXd&)>& f,
                                                   Eigen::VectorXd x0, double step, int max_eval) {
  const int n = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> val(n + 1);
  for (int i = 0; i < n; ++i) pts[i + 1][i] += step;
  int evals = 0;
  for (int i = 0; i <= n; ++i, ++evals) val[i] = f(pts[i]);
  std::vector<int> order(n + 1);
  while (evals < max_eval) {
    for (int i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return val[a] > val[b]; });
    const int best = order[0], worst = order[n], second = order[n - 1];
    if (std::abs(val[best] - val[worst]) <= 1e-12 * (std::abs(val[best]) + 1e-300)) break;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[order[i]];
    centroid /= n;
    const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
    const double fr = f(xr);
    ++evals;
    if (fr > val[best]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = f(xe);
      ++evals;
      if (fe > fr) {
        pts[worst] = xe;
        val[worst] = fe;
      } else {
        pts[worst] = xr;
        val[worst] = fr;
      }
    } else if (fr > val[second]) {
      pts[worst] = xr;
      val[worst] = fr;
    } else {
      const Eigen::VectorXd xc = centroid + 0.5 * (pts[worst] - centroid);
      const double fc = f(xc);
      ++evals;
      if (fc > val[worst]) {
        pts[worst] = xc;
        val[worst] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          pts[order[i]] = pts[best] + 0.5 * (pts[order[i]] - pts[best]);
          val[order[i]] = f(pts[order[i]]);
          ++evals;
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (val[i] > val[best]) best = i;
  return {pts[best], val[best]};
}

std::vector<double> local_eigenvector(const GridDensity& mu, const VariationalContext& c) {
  const PoincareMode mode = poincare_mode(mu);
  std::vector<double> u(c.w.size());
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = mode.eigenfunction.values[c.lo + j];
  return centered_unit(c, u);
}

}  // namespace

PoincareMode poincare_mode(const GridDensity& mu) {
  const Grid& g = mu.grid();
  const SpectralProblem p = build_problem(mu.values(), g.dx);
  const double lambda1 = eigenvalue(p, 1);
  if (!(lambda1 > 0.0) || !std::isfinite(lambda1)) fail(ErrorKind::numeric, "spectral gap not found");
  const std::size_t n = p.mass.size();
  std::vector<double> sqm(n);
  double sqm_norm2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    sqm[j] = std::sqrt(p.mass[j]);
    sqm_norm2 += p.mass[j];
  }
  auto deflate = [&](std::vector<double>& y) {
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += y[j] * sqm[j];
    for (std::size_t j = 0; j < n; ++j) y[j] -= dot / sqm_norm2 * sqm[j];
    double nrm = 0.0;
    for (double v : y) nrm += v * v;
    nrm = std::sqrt(nrm);
    for (double& v : y) v /= nrm;
  };
  std::vector<double> y(n);
  for (std::size_t j = 0; j < n; ++j) y[j] = g.x(p.lo + j) * sqm[j];
  deflate(y);
  for (int it = 0; it < 3; ++it) {
    y = shifted_solve(p, lambda1, y);
    for (double v : y)
      if (!std::isfinite(v)) fail(ErrorKind::numeric, "inverse iteration diverged");
    deflate(y);
  }
  std::vector<double> u(g.n_pts, 0.0);
  std::vector<std::uint8_t> ex(g.n_pts, 1);
  // y is unit in the mass-weighted norm, so u = y / sqrt(m) has unit L2(mu) norm.
  double sign = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    u[p.lo + j] = y[j] / sqm[j];
    ex[p.lo + j] = 0;
    sign += y[j] * sqm[j] * g.x(p.lo + j);
  }
  if (sign < 0.0)
    for (double& v : u) v = -v;
  return {lambda1, FieldOnGrid(g, std::move(u), std::move(ex))};
}

ConstantEstimate poincare_spectral(const GridDensity& mu) {
  const double dx = mu.grid().dx;
  const double l1 = lambda1_of(mu.values(), dx);
  if (!(l1 > 0.0) || !std::isfinite(l1)) fail(ErrorKind::numeric, "spectral gap not found");
  ConstantEstimate e{ConstantKind::poincare, std::nullopt, 1.0 / l1, ConstantMethod::spectral,
                     Rigor::exact_tolerance, 0.0, ""};
  // Richardson estimate from the same samples at 2x and 4x spacing.
  try {
    const auto v2 = decimate(mu.values(), 2);
    const auto v4 = decimate(mu.values(), 4);
    const double l2 = lambda1_of(v2, 2.0 * dx);
    const double l4 = lambda1_of(v4, 4.0 * dx);
    const double d12 = l2 - l1, d24 = l4 - l2;
    double order = 2.0;
    if (d12 != 0.0 && d24 / d12 > 1.0) order = std::clamp(std::log2(d24 / d12), 0.5, 4.0);
    const double err_lambda = std::abs(d12) / (std::pow(2.0, order) - 1.0);
    e.error_estimate = e.value * err_lambda / l1;
    e.diagnostic = "richardson order " + detail::format_double(order);
  } catch (const Error&) {
    e.error_estimate = NAN;
    e.diagnostic = "richardson estimate unavailable";
  }
  e.validate();
  return e;
}

ConstantEstimate log_sobolev_constant(const GridDensity& mu) {
  const VariationalContext c = make_context(mu);
  const std::size_t n = c.w.size();
  double best = 0.0;
  std::string origin;
  auto consider = [&](double r, const std::string& what) {
    if (r > best) {
      best = r;
      origin = what;
    }
  };
  const auto u = local_eigenvector(mu, c);
  const auto basis = hermite_basis(c, 8);
  const auto [pstar, coef] = best_polynomial(c, basis);
  std::vector<double> f(n);
  for (const auto* dir : {&u, &pstar}) {
    for (double eps : {1e-3, 1e-2, 0.05, 0.1, 0.3, 0.6}) {
      for (double sgn : {1.0, -1.0}) {
        for (std::size_t j = 0; j < n; ++j) f[j] = 1.0 + sgn * eps * (*dir)[j];
        consider(log_sobolev_ratio(c, f), dir == &u ? "eigenfunction perturbation" : "polynomial perturbation");
      }
    }
  }
  for (double theta : {-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0}) {
    double zmax = 0.0;
    for (double z : c.z) zmax = std::max(zmax, theta * z);
    for (std::size_t j = 0; j < n; ++j) f[j] = std::exp(0.5 * (theta * c.z[j] - zmax));
    consider(log_sobolev_ratio(c, f), "exponential tilt");
  }
  // Refine over exponents u = sum c_k He_k, f = exp(u / 2).
  auto objective = [&](const Eigen::VectorXd& a) {
    std::vector<double> ex(n, 0.0);
    double top = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      for (int k = 0; k < a.size(); ++k) ex[j] += a[k] * basis[k][j];
      top = std::max(top, ex[j]);
    }
    for (std::size_t j = 0; j < n; ++j) ex[j] = std::exp(0.5 * (ex[j] - top));
    return log_sobolev_ratio(c, ex);
  };
  const auto [a_best, v_best] = nelder_mead_max(objective, 0.2 * coef, 0.05, 600);
  (void)a_best;
  consider(v_best, "Hermite exponent search");
  if (!(best > 0.0)) fail(ErrorKind::numeric, "log-Sobolev search found no admissible candidate");
  ConstantEstimate e{ConstantKind::log_sobolev, std::nullopt, best, ConstantMethod::variational_lower,
                     Rigor::lower_bound_only, 0.0, "best candidate: " + origin};
  e.validate();
  return e;
}

ConstantEstimate log_sobolev_constant(const DistributionSpec& spec, double support_sigmas,
                                      std::size_t n_pts) {
  const DistributionSpec* s = &spec;
  if (const auto* m = std::get_if<Mixture>(&spec.variant()); m && m->components.size() == 1)
    s = &m->components.front().spec;
  if (const auto* g = std::get_if<Gaussian>(&s->variant())) {
    ConstantEstimate e{ConstantKind::log_sobolev, std::nullopt, g->var, ConstantMethod::catalog,
                       Rigor::exact_tolerance, 0.0, "Gaussian catalog value"};
    e.validate();
    return e;
  }
  return log_sobolev_constant(discretize(spec, support_sigmas, n_pts));
}

ConstantEstimate phi_sobolev_lower(const GridDensity& mu, const PhiFunction& phi) {
  const VariationalContext c = make_context(mu);
  const std::size_t n = c.w.size();
  const auto basis = hermite_basis(c, 8);
  std::vector<std::vector<double>> dirs;
  dirs.push_back(local_eigenvector(mu, c));
  dirs.push_back(best_polynomial(c, basis).first);
  for (const auto& b : basis) dirs.push_back(b);
  double best = 0.0;
  std::size_t admissible = 0;
  std::vector<double> f(n);
  for (const auto& d : dirs) {
    for (double eps : {0.01, 0.05, 0.1, 0.3}) {
      for (double sgn : {1.0, -1.0}) {
        bool positive = true;
        for (std::size_t j = 0; j < n; ++j) {
          f[j] = 1.0 + sgn * eps * d[j];
          positive = positive && f[j] > 0.0;
        }
        if (!positive) continue;
        ++admissible;
        best = std::max(best, phi_ratio(c, phi, f));
      }
    }
  }
  if (admissible == 0) fail(ErrorKind::domain, "every phi-Sobolev candidate was non-positive");
  if (!(best > 0.0)) fail(ErrorKind::numeric, "phi-Sobolev search produced no positive ratio");
  std::optional<double> lambda;
  if (phi.kind() == PhiFunction::Kind::power) lambda = phi.lambda();
  ConstantEstimate e{ConstantKind::phi_sobolev, lambda, best, ConstantMethod::variational_lower,
                     Rigor::lower_bound_only, 0.0,
                     phi.name() + ", " + std::to_string(admissible) + " admissible candidates"};
  e.validate();
  return e;
}

namespace {

// Sub-grid of `lattice` covering [lo, hi].
Grid lattice_cover(const Grid& lattice, double lo, double hi) {
  const double i0 = std::floor((lo - lattice.x_min) / lattice.dx + 1e-9);
  const double i1 = std::ceil((hi - lattice.x_min) / lattice.dx - 1e-9);
  return Grid::make(lattice.x_min + i0 * lattice.dx, lattice.dx,
                    std::max<std::size_t>(static_cast<std::size_t>(i1 - i0) + 1, 8));
}

}  // namespace

SubadditivityMargin subadditivity_margin(const DistributionSpec& x, const DistributionSpec& y,
                                         ConstantKind kind, const std::optional<PhiFunction>& phi,
                                         std::size_t n_pts) {
  if (kind == ConstantKind::log_sobolev)
    fail(ErrorKind::parameter, "subadditivity margin supports poincare and phi_sobolev");
  if (kind == ConstantKind::phi_sobolev && !phi)
    fail(ErrorKind::dependency, "phi_sobolev margin needs a divergence generator");
  const DistributionSpec specs[] = {x, y};
  const Grid lattice = common_grid(specs, kDefaultSupportSigmas, n_pts);
  auto on_lattice = [&](const DistributionSpec& s) {
    const Grid g = default_grid(s, kDefaultSupportSigmas, n_pts);
    return discretize_on(s, lattice_cover(lattice, g.x_min, g.x_max()));
  };
  const GridDensity rx = on_lattice(x);
  const GridDensity ry = on_lattice(y);
  const GridDensity rs = convolve_independent(rx, ry);
  auto constant = [&](const GridDensity& r) {
    return kind == ConstantKind::poincare ? poincare_spectral(r).value : phi_sobolev_lower(r, *phi).value;
  };
  SubadditivityMargin m{};
  m.c_x = constant(rx);
  m.c_y = constant(ry);
  m.c_sum = constant(rs);
  m.margin = m.c_x + m.c_y - m.c_sum;
  m.lower_bound_caveat = kind != ConstantKind::poincare;
  return m;
}

}  // namespace heatflow
