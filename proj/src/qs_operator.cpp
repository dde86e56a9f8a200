#include "heatflow/qs_operator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "detail.hpp"
#include "heatflow/error.hpp"

namespace heatflow {

namespace {

constexpr std::size_t kLanczosDim = 64;

std::vector<double> output_density(const GridDensity& mu, const std::vector<double>& w) {
  auto den = kernels::convolve(mu.values(), w);
  for (double& v : den) v = std::max(v, 0.0);
  return den;
}

Grid extended(const Grid& g, std::size_t m) {
  return Grid{g.x_min - static_cast<double>(m) * g.dx, g.dx, g.n_pts + 2 * m};
}

}  // namespace

QsOperator::QsOperator(const GridDensity& mu, double s)
    : mu_(mu),
      s_(s),
      half_width_(0),
      out_grid_(mu.grid()),
      mu_s_(mu),
      forward_(std::vector<double>{1.0}, 1),
      backward_(std::vector<double>{1.0}, 1) {
  if (!(s > 0.0) || !std::isfinite(s)) fail(ErrorKind::domain, "Q_s needs s > 0");
  const auto w = heat_kernel_weights(s, mu.grid().dx);
  half_width_ = w.size() / 2;
  out_grid_ = extended(mu.grid(), half_width_);
  den_ = output_density(mu, w);
  mu_s_ = GridDensity(out_grid_, den_, mu.log_concave());
  const double cut = kExclusionTau * *std::max_element(den_.begin(), den_.end());
  excluded_.resize(den_.size());
  for (std::size_t i = 0; i < den_.size(); ++i) excluded_[i] = den_[i] <= cut;
  forward_ = kernels::FixedKernelConvolver(w, mu.grid().n_pts);
  backward_ = kernels::FixedKernelConvolver(w, out_grid_.n_pts);
}

FieldOnGrid QsOperator::apply(const FieldOnGrid& f) const {
  if (!(f.grid == mu_.grid())) fail(ErrorKind::parameter, "Q_s input must live on mu's grid");
  const std::size_t n = f.size();
  std::vector<double> weighted(n);
  for (std::size_t i = 0; i < n; ++i) weighted[i] = f.is_excluded(i) ? 0.0 : f.values[i] * mu_[i];
  auto num = forward_(weighted);
  for (std::size_t i = 0; i < num.size(); ++i) num[i] = excluded_[i] ? 0.0 : num[i] / den_[i];
  return FieldOnGrid(out_grid_, std::move(num), excluded_);
}

std::vector<double> QsOperator::adjoint(const std::vector<double>& g) const {
  std::vector<double> masked(g);
  for (std::size_t i = 0; i < masked.size(); ++i)
    if (excluded_[i]) masked[i] = 0.0;
  auto full = backward_(masked);
  const std::size_t off = 2 * half_width_;
  return std::vector<double>(full.begin() + static_cast<std::ptrdiff_t>(off),
                             full.begin() + static_cast<std::ptrdiff_t>(off + mu_.size()));
}

FieldOnGrid make_field(const Grid& grid, const std::function<double(double)>& f) {
  std::vector<double> v(grid.n_pts);
  for (std::size_t i = 0; i < grid.n_pts; ++i) v[i] = f(grid.x(i));
  return FieldOnGrid(grid, std::move(v));
}

FieldOnGrid apply_qs(const FieldOnGrid& f, const GridDensity& mu, double s) {
  return QsOperator(mu, s).apply(f);
}

namespace {

// Gauss-Hermite nodes/weights for weight exp(-x^2) (Newton on the
// orthonormal recurrence).
void gauss_hermite(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  const int m = (n + 1) / 2;
  double z = 0.0, pp = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * x[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * x[1];
    else
      z = 2.0 * z - x[i - 2];
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
}

}  // namespace

FieldOnGrid mehler_apply(const std::function<double(double)>& f, double s, double base_mean,
                         double base_var, const Grid& out_grid, int nodes) {
  if (!(s > 0.0)) fail(ErrorKind::domain, "Mehler formula needs s > 0");
  if (!(base_var > 0.0)) fail(ErrorKind::parameter, "base variance must be positive");
  if (nodes < 64) fail(ErrorKind::parameter, "Mehler quadrature needs at least 64 nodes");
  std::vector<double> gx, gw;
  gauss_hermite(nodes, gx, gw);
  const double shrink = base_var / (base_var + s);
  const double sd = std::sqrt(base_var * s / (base_var + s));
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  std::vector<double> out(out_grid.n_pts);
  for (std::size_t i = 0; i < out_grid.n_pts; ++i) {
    const double centre = base_mean + shrink * (out_grid.x(i) - base_mean);
    double acc = 0.0;
    for (int k = 0; k < nodes; ++k) acc += gw[k] * f(centre + std::sqrt(2.0) * sd * gx[k]);
    out[i] = acc * inv_sqrt_pi;
  }
  return FieldOnGrid(out_grid, std::move(out));
}

FieldOnGrid mehler_apply(const FieldOnGrid& f, double s, double base_mean, double base_var,
                         const Grid& out_grid, int nodes) {
  return mehler_apply([&](double x) { return interpolate(f.grid, f.values, x); }, s, base_mean,
                      base_var, out_grid, nodes);
}

FieldOnGrid mehler_apply(const FieldOnGrid& f, double s, const DistributionSpec& base,
                         const Grid& out_grid, int nodes) {
  const DistributionSpec* b = &base;
  if (const auto* m = std::get_if<Mixture>(&base.variant()); m && m->components.size() == 1)
    b = &m->components.front().spec;
  const auto* g = std::get_if<Gaussian>(&b->variant());
  if (!g) fail(ErrorKind::usage, "Mehler formula requires a Gaussian base measure");
  return mehler_apply(f, s, g->mean, g->var, out_grid, nodes);
}

namespace {

double field_mean(const FieldOnGrid& f, const GridDensity& rho) {
  const auto r = rho.values();
  return kernels::trapezoid(f.size(), rho.grid().dx, [&](std::size_t i) {
    return f.is_excluded(i) ? 0.0 : f.values[i] * r[i];
  });
}

}  // namespace

double conditional_variance(const FieldOnGrid& f, const GridDensity& mu, double s) {
  const QsOperator op(mu, s);
  const FieldOnGrid q = op.apply(f);
  const double m = field_mean(f, mu);
  const auto r = op.mu_s().values();
  return kernels::trapezoid(q.size(), q.grid.dx, [&](std::size_t i) {
    if (q.is_excluded(i)) return 0.0;
    const double d = q.values[i] - m;
    return d * d * r[i];
  });
}

namespace {

// L2(mu) geometry (Riemann sums, matching the discrete adjoint).
struct MuInner {
  std::vector<double> w;
  double total;
  explicit MuInner(const GridDensity& mu) : w(mu.size()), total(0.0) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = mu[i] * mu.grid().dx;
      total += w[i];
    }
  }
  double dot(const std::vector<double>& a, const std::vector<double>& b) const {
    return kernels::block_sum(a.size(), [&](std::size_t i) { return w[i] * a[i] * b[i]; });
  }
  void center(std::vector<double>& a) const {
    const double m = kernels::block_sum(a.size(), [&](std::size_t i) { return w[i] * a[i]; }) / total;
    for (double& v : a) v -= m;
  }
  double normalize(std::vector<double>& a) const {
    const double n = std::sqrt(dot(a, a));
    if (n > 0.0)
      for (double& v : a) v /= n;
    return n;
  }
};

std::vector<double> apply_t(const QsOperator& op, const std::vector<double>& f) {
  const FieldOnGrid q = op.apply(FieldOnGrid(op.mu().grid(), f));
  return op.adjoint(q.values);
}

SdpiEstimate power_method(const QsOperator& op, const MuInner& ip, std::vector<double> f,
                          int max_iter, double tol) {
  SdpiEstimate e;
  double prev = -1.0, rq = 0.0;
  for (int k = 1; k <= max_iter; ++k) {
    auto tf = apply_t(op, f);
    ip.center(tf);
    rq = ip.dot(tf, f);
    e.iterations = k;
    ip.normalize(tf);
    f = std::move(tf);
    if (std::abs(rq - prev) <= tol) {
      e.converged = true;
      break;
    }
    prev = rq;
  }
  e.eta_power_iter = std::clamp(rq, 0.0, 1.0);
  return e;
}

// Lanczos with full reorthogonalization and explicit restarts from the Ritz
// vector every kLanczosDim steps.
SdpiEstimate lanczos(const QsOperator& op, const MuInner& ip, std::vector<double> f, int max_iter,
                     double tol) {
  SdpiEstimate e;
  double best = 0.0, prev = -1.0;
  int used = 0;
  while (used < max_iter && !e.converged) {
    std::vector<std::vector<double>> V{f};
    std::vector<double> alpha, beta;
    Eigen::VectorXd ritz_vec;
    for (std::size_t k = 0; k < kLanczosDim && used < max_iter; ++k) {
      auto w = apply_t(op, V.back());
      ++used;
      ip.center(w);
      alpha.push_back(ip.dot(w, V.back()));
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& v : V) {
          const double c = ip.dot(w, v);
          for (std::size_t i = 0; i < w.size(); ++i) w[i] -= c * v[i];
        }
      const double b = ip.normalize(w);
      const auto m = static_cast<Eigen::Index>(alpha.size());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
      Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
      Eigen::VectorXd sub = m > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), m - 1))
                                  : Eigen::VectorXd(0);
      es.computeFromTridiagonal(d, sub, Eigen::ComputeEigenvectors);
      const double theta = es.eigenvalues()(m - 1);
      ritz_vec = es.eigenvectors().col(m - 1);
      const double residual = b * std::abs(ritz_vec(m - 1));
      best = std::max(best, theta);
      e.iterations = used;
      if (residual <= 1e-8 || b <= 1e-14 || std::abs(theta - prev) <= tol) {
        e.converged = true;
        break;
      }
      prev = theta;
      beta.push_back(b);
      V.push_back(std::move(w));
    }
    // restart from the current Ritz vector
    std::vector<double> r(f.size(), 0.0);
    for (Eigen::Index j = 0; j < ritz_vec.size(); ++j)
      for (std::size_t i = 0; i < r.size(); ++i) r[i] += ritz_vec(j) * V[static_cast<std::size_t>(j)][i];
    ip.center(r);
    ip.normalize(r);
    f = std::move(r);
  }
  e.eta_power_iter = std::clamp(best, 0.0, 1.0);
  return e;
}

}  // namespace

SdpiEstimate maximal_correlation(const GridDensity& mu, double s, int max_iter, double tol,
                                 IterationMethod method) {
  const Moments mo = moments(mu);
  if (!(mo.variance > 0.0)) fail(ErrorKind::domain, "maximal correlation needs positive variance");
  if (max_iter < 1) fail(ErrorKind::parameter, "max_iter must be positive");
  const QsOperator op(mu, s);
  const MuInner ip(mu);
  const Grid& g = mu.grid();
  std::vector<double> f(g.n_pts);
  const double sd = std::sqrt(mo.variance);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = (g.x(i) - mo.mean) / sd;
  ip.center(f);
  ip.normalize(f);
  SdpiEstimate e = method == IterationMethod::krylov ? lanczos(op, ip, std::move(f), max_iter, tol)
                                                     : power_method(op, ip, std::move(f), max_iter, tol);
  e.s = s;
  return e;
}

SdpiEstimate eta_chi2_bounds(const GridDensity& mu, double s,
                             const std::optional<ConstantEstimate>& c_p) {
  if (!c_p || c_p->kind != ConstantKind::poincare)
    fail(ErrorKind::dependency, "eta_chi2 bounds need a Poincare constant");
  c_p->validate();
  const Moments mo = moments(mu);
  if (!(mo.variance > 0.0)) fail(ErrorKind::domain, "eta_chi2 bounds need positive variance");
  const FieldOnGrid id = make_field(mu.grid(), [](double x) { return x; });
  SdpiEstimate e;
  e.s = s;
  e.eta_lower = std::clamp(conditional_variance(id, mu, s) / mo.variance, 0.0, 1.0);
  e.eta_upper = 1.0 / (1.0 + s / c_p->value);
  if (mu.log_concave() == LogConcavity::yes) e.exp_lower = std::exp(-s / c_p->value);
  if (e.eta_lower > e.eta_upper + 1e-6)
    fail(ErrorKind::numeric, "eta lower bound exceeds upper bound at s = " + detail::format_double(s));
  return e;
}

SdpiEstimate sdpi_estimate(const GridDensity& mu, double s, const ConstantEstimate& c_p) {
  SdpiEstimate e = eta_chi2_bounds(mu, s, c_p);
  const SdpiEstimate it = maximal_correlation(mu, s);
  e.eta_power_iter = it.eta_power_iter;
  e.iterations = it.iterations;
  e.converged = it.converged;
  return e;
}

HalfBlurringTime half_blurring_time(const GridDensity& mu, double alpha, BlurKind kind,
                                    const std::optional<ConstantEstimate>& constant) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::parameter, "alpha must lie in (0, 1)");
  if (!constant) fail(ErrorKind::dependency, "half-blurring time needs a functional-inequality constant");
  constant->validate();
  const double C = constant->value;
  HalfBlurringTime out{};
  int evals = 0;
  std::function<double(double)> eta;
  if (kind == BlurKind::chi2) {
    out.bracket_lo = C * std::log(1.0 / alpha);
    out.bracket_hi = C * (1.0 / alpha - 1.0);
    out.proxy = false;
    eta = [&](double s) {
      ++evals;
      return *maximal_correlation(mu, s, 500, 1e-12).eta_power_iter;
    };
  } else {
    out.bracket_lo = (1.0 - alpha) * C;
    out.bracket_hi = (1.0 - alpha) / alpha * C;
    out.proxy = true;
    eta = [&](double s) {
      ++evals;
      return 0.5 * (std::max(0.0, 1.0 - s / C) + 1.0 / (1.0 + s / C));
    };
  }
  // Bracket the crossing eta(s) = alpha, then Illinois regula falsi.
  double lo = 0.0, f_lo = 1.0 - alpha;
  double hi = out.bracket_hi, f_hi = eta(hi) - alpha;
  while (f_hi > 0.0) {
    lo = hi;
    f_lo = f_hi;
    hi *= 2.0;
    if (hi > 1e3 * C) fail(ErrorKind::search_range, "contraction estimate stays above alpha up to 1e3 * C");
    f_hi = eta(hi) - alpha;
  }
  if (mu.log_concave() == LogConcavity::yes && out.bracket_lo > lo && out.bracket_lo < hi) {
    const double f_mid = eta(out.bracket_lo) - alpha;
    if (f_mid > 0.0) {
      lo = out.bracket_lo;
      f_lo = f_mid;
    } else {
      hi = out.bracket_lo;
      f_hi = f_mid;
    }
  }
  int side = 0;
  double s = 0.5 * (lo + hi);
  for (int it = 0; it < 100 && hi - lo > 1e-5 * hi; ++it) {
    s = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    if (!(s > lo && s < hi)) s = 0.5 * (lo + hi);
    const double fs = eta(s) - alpha;
    if (std::abs(fs) <= 1e-13) {
      lo = hi = s;
      break;
    }
    if (fs > 0.0) {
      lo = s;
      f_lo = fs;
      if (side == 1) f_hi *= 0.5;
      side = 1;
    } else {
      hi = s;
      f_hi = fs;
      if (side == -1) f_lo *= 0.5;
      side = -1;
    }
  }
  out.s_star = 0.5 * (lo + hi);
  out.evaluations = evals;
  return out;
}

}  // namespace heatflow
