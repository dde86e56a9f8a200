#include "heatflow/densities.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "detail.hpp"
#include "heatflow/error.hpp"
#include "heatflow/kernels.hpp"

namespace heatflow {

namespace {

constexpr double kNodesPerSigma = 16.0;
// Largest grid heat_evolve will produce before coarsening the input.
constexpr std::size_t kMaxEvolvedNodes = std::size_t{1} << 21;

bool is_power_of_two(std::size_t n) { return n && !(n & (n - 1)); }

double uniform_cell_average(double a, double b, double x, double dx) {
  const double lo = std::max(a, x - 0.5 * dx);
  const double hi = std::min(b, x + 0.5 * dx);
  return hi > lo ? (hi - lo) / (dx * (b - a)) : 0.0;
}

double sample(const DistributionSpec& spec, double x, double dx) {
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          return uniform_cell_average(d.a, d.b, x, dx);
        } else if constexpr (std::is_same_v<T, Mixture>) {
          double acc = 0.0;
          for (const auto& c : d.components) acc += c.weight * sample(c.spec, x, dx);
          return acc;
        } else {
          return spec.pdf(x);
        }
      },
      spec.variant());
}

// Interval carrying the default discretization of a spec.
std::pair<double, double> support(const DistributionSpec& spec, double k) {
  return std::visit(
      [&](const auto& d) -> std::pair<double, double> {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          const double sd = std::sqrt(d.var);
          return {d.mean - k * sd, d.mean + k * sd};
        } else if constexpr (std::is_same_v<T, Laplace>) {
          const double sd = std::sqrt(2.0) * d.scale;
          return {d.loc - k * sd, d.loc + k * sd};
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return {d.a, d.b};
        } else if constexpr (std::is_same_v<T, Mixture>) {
          double lo = INFINITY, hi = -INFINITY;
          for (const auto& c : d.components) {
            auto [l, h] = support(c.spec, k);
            lo = std::min(lo, l);
            hi = std::max(hi, h);
          }
          return {lo, hi};
        } else {
          const Grid& g = d.density->grid();
          return {g.x_min, g.x_max()};
        }
      },
      spec.variant());
}

void check_resolution(const DistributionSpec& spec, double dx) {
  if (std::holds_alternative<GridProvided>(spec.variant())) return;
  const double nodes = spec.min_sigma() / dx;
  if (nodes < kNodesPerSigma)
    fail(ErrorKind::resolution, "grid resolves the narrowest component with only " +
                                    detail::format_double(nodes) +
                                    " nodes per standard deviation (need 16)");
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) fail(ErrorKind::parameter, std::string(what) + " must be finite");
}

}  // namespace

const char* to_string(LogConcavity lc) noexcept {
  switch (lc) {
    case LogConcavity::yes: return "true";
    case LogConcavity::no: return "false";
    case LogConcavity::unknown: return "unknown";
  }
  return "unknown";
}

GridDensity::GridDensity(Grid grid, std::vector<double> values, LogConcavity log_concave)
    : grid_(grid), values_(std::move(values)), log_concave_(log_concave), max_(0.0) {
  if (values_.size() != grid_.n_pts) fail(ErrorKind::parameter, "density size does not match grid");
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0)
      fail(ErrorKind::parameter, "density values must be finite and nonnegative");
  }
  const double mass = kernels::trapezoid(values_, grid_.dx);
  if (!(mass > 0.0) || !std::isfinite(mass)) fail(ErrorKind::parameter, "density has zero mass");
  const double inv = 1.0 / mass;
  for (double& v : values_) {
    v *= inv;
    max_ = std::max(max_, v);
  }
}

DistributionSpec DistributionSpec::gaussian(double mean, double var) {
  check_finite(mean, "mean");
  if (!(var > 0.0) || !std::isfinite(var)) fail(ErrorKind::parameter, "variance must be positive");
  return DistributionSpec(Gaussian{mean, var});
}

DistributionSpec DistributionSpec::uniform(double a, double b) {
  check_finite(a, "a");
  check_finite(b, "b");
  if (!(b > a)) fail(ErrorKind::parameter, "b must exceed a");
  return DistributionSpec(Uniform{a, b});
}

DistributionSpec DistributionSpec::laplace(double loc, double scale) {
  check_finite(loc, "location");
  if (!(scale > 0.0) || !std::isfinite(scale)) fail(ErrorKind::parameter, "scale must be positive");
  return DistributionSpec(Laplace{loc, scale});
}

DistributionSpec DistributionSpec::mixture(std::vector<MixtureComponent> components) {
  if (components.empty()) fail(ErrorKind::parameter, "mixture needs at least one component");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight > 0.0) || !std::isfinite(c.weight))
      fail(ErrorKind::parameter, "mixture weights must be positive");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) fail(ErrorKind::parameter, "mixture weights must sum to 1");
  for (auto& c : components) c.weight /= total;
  return DistributionSpec(Mixture{std::move(components)});
}

DistributionSpec DistributionSpec::grid(GridDensity density) {
  return DistributionSpec(GridProvided{std::make_shared<const GridDensity>(std::move(density))});
}

LogConcavity DistributionSpec::log_concave() const {
  return std::visit(
      [](const auto& d) -> LogConcavity {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Mixture>) {
          return d.components.size() == 1 ? d.components.front().spec.log_concave()
                                          : LogConcavity::unknown;
        } else if constexpr (std::is_same_v<T, GridProvided>) {
          return d.density->log_concave();
        } else {
          return LogConcavity::yes;
        }
      },
      v_);
}

double DistributionSpec::mean() const {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) return d.mean;
        else if constexpr (std::is_same_v<T, Uniform>) return 0.5 * (d.a + d.b);
        else if constexpr (std::is_same_v<T, Laplace>) return d.loc;
        else if constexpr (std::is_same_v<T, Mixture>) {
          double m = 0.0;
          for (const auto& c : d.components) m += c.weight * c.spec.mean();
          return m;
        } else return moments(*d.density).mean;
      },
      v_);
}

double DistributionSpec::variance() const {
  return std::visit(
      [this](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) return d.var;
        else if constexpr (std::is_same_v<T, Uniform>) return (d.b - d.a) * (d.b - d.a) / 12.0;
        else if constexpr (std::is_same_v<T, Laplace>) return 2.0 * d.scale * d.scale;
        else if constexpr (std::is_same_v<T, Mixture>) {
          const double m = mean();
          double acc = 0.0;
          for (const auto& c : d.components) {
            const double dm = c.spec.mean() - m;
            acc += c.weight * (c.spec.variance() + dm * dm);
          }
          return acc;
        } else return moments(*d.density).variance;
      },
      v_);
}

double DistributionSpec::min_sigma() const {
  if (const auto* m = std::get_if<Mixture>(&v_)) {
    double out = INFINITY;
    for (const auto& c : m->components) out = std::min(out, c.spec.min_sigma());
    return out;
  }
  return std::sqrt(variance());
}

double DistributionSpec::pdf(double x) const {
  return std::visit(
      [x](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          const double z = x - d.mean;
          return std::exp(-0.5 * z * z / d.var) / std::sqrt(2.0 * std::numbers::pi * d.var);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return (x >= d.a && x <= d.b) ? 1.0 / (d.b - d.a) : 0.0;
        } else if constexpr (std::is_same_v<T, Laplace>) {
          return std::exp(-std::abs(x - d.loc) / d.scale) / (2.0 * d.scale);
        } else if constexpr (std::is_same_v<T, Mixture>) {
          double acc = 0.0;
          for (const auto& c : d.components) acc += c.weight * c.spec.pdf(x);
          return acc;
        } else {
          return interpolate(d.density->grid(), d.density->vector(), x);
        }
      },
      v_);
}

DistributionSpec DistributionSpec::scaled(double lambda) const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail(ErrorKind::parameter, "scale factor must be positive");
  return std::visit(
      [lambda](const auto& d) -> DistributionSpec {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return gaussian(lambda * d.mean, lambda * lambda * d.var);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return uniform(lambda * d.a, lambda * d.b);
        } else if constexpr (std::is_same_v<T, Laplace>) {
          return laplace(lambda * d.loc, lambda * d.scale);
        } else if constexpr (std::is_same_v<T, Mixture>) {
          std::vector<MixtureComponent> cs;
          for (const auto& c : d.components) cs.push_back({c.weight, c.spec.scaled(lambda)});
          return mixture(std::move(cs));
        } else {
          const Grid& g = d.density->grid();
          std::vector<double> v = d.density->vector();
          for (double& x : v) x /= lambda;
          return grid(GridDensity(Grid::make(lambda * g.x_min, lambda * g.dx, g.n_pts),
                                  std::move(v), d.density->log_concave()));
        }
      },
      v_);
}

std::string DistributionSpec::to_string() const {
  using detail::format_double;
  return std::visit(
      [](const auto& d) -> std::string {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return "gaussian(" + format_double(d.mean) + "," + format_double(d.var) + ")";
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return "uniform(" + format_double(d.a) + "," + format_double(d.b) + ")";
        } else if constexpr (std::is_same_v<T, Laplace>) {
          return "laplace(" + format_double(d.loc) + "," + format_double(d.scale) + ")";
        } else if constexpr (std::is_same_v<T, Mixture>) {
          std::string out = "mix(";
          for (std::size_t i = 0; i < d.components.size(); ++i) {
            if (i) out += ",";
            out += format_double(d.components[i].weight) + "*" + d.components[i].spec.to_string();
          }
          return out + ")";
        } else {
          return "grid(" + std::to_string(d.density->size()) + " nodes)";
        }
      },
      v_);
}

Grid default_grid(const DistributionSpec& spec, double support_sigmas, std::size_t n_pts) {
  if (!is_power_of_two(n_pts) || n_pts < 8)
    fail(ErrorKind::parameter, "n_pts must be a power of two and at least 8");
  if (!(support_sigmas >= 4.0)) fail(ErrorKind::parameter, "support_sigmas must be at least 4");
  if (const auto* g = std::get_if<GridProvided>(&spec.variant())) return g->density->grid();
  if (const auto* u = std::get_if<Uniform>(&spec.variant())) {
    const double dx = (u->b - u->a) / static_cast<double>(n_pts - 2);
    return Grid::make(u->a - 0.5 * dx, dx, n_pts);
  }
  auto [lo, hi] = support(spec, support_sigmas);
  if (std::holds_alternative<Mixture>(spec.variant())) {
    // two spare cells per side so Uniform components start on zero nodes
    const double dx = (hi - lo) / static_cast<double>(n_pts - 5);
    return Grid::make(lo - 2.0 * dx, dx, n_pts);
  }
  return Grid::make(lo, (hi - lo) / static_cast<double>(n_pts - 1), n_pts);
}

GridDensity discretize_on(const DistributionSpec& spec, const Grid& grid) {
  if (const auto* g = std::get_if<GridProvided>(&spec.variant())) return resample(*g->density, grid);
  check_resolution(spec, grid.dx);
  std::vector<double> v(grid.n_pts);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(grid.n_pts); ++i)
    v[static_cast<std::size_t>(i)] = sample(spec, grid.x(static_cast<std::size_t>(i)), grid.dx);
  return GridDensity(grid, std::move(v), spec.log_concave());
}

GridDensity discretize(const DistributionSpec& spec, double support_sigmas, std::size_t n_pts) {
  return discretize_on(spec, default_grid(spec, support_sigmas, n_pts));
}

Grid common_grid(std::span<const DistributionSpec> specs, double support_sigmas,
                 std::size_t n_pts) {
  if (specs.empty()) fail(ErrorKind::parameter, "common_grid needs at least one spec");
  double dx = INFINITY, lo = INFINITY, hi = -INFINITY;
  for (const auto& s : specs) {
    const Grid g = default_grid(s, support_sigmas, n_pts);
    dx = std::min(dx, g.dx);
    lo = std::min(lo, g.x_min);
    hi = std::max(hi, g.x_max());
  }
  double anchor = default_grid(specs.front(), support_sigmas, n_pts).x_min;
  for (const auto& s : specs) {
    if (const auto* u = std::get_if<Uniform>(&s.variant())) {
      anchor = u->a - 0.5 * dx;
      break;
    }
  }
  const double x_min = anchor + std::floor((lo - anchor) / dx) * dx;
  const auto n = static_cast<std::size_t>(std::ceil((hi - x_min) / dx - 1e-9)) + 1;
  return Grid::make(x_min, dx, std::max<std::size_t>(n, 8));
}

std::vector<double> heat_kernel_weights(double s, double dx) {
  if (!(s > 0.0)) fail(ErrorKind::domain, "heat kernel needs s > 0");
  if (s < dx * dx) {
    const double a = s / (2.0 * dx * dx);
    return {a, 1.0 - 2.0 * a, a};
  }
  const auto m = static_cast<std::size_t>(std::ceil(8.0 * std::sqrt(s) / dx));
  std::vector<double> w(2 * m + 1);
  double total = 0.0;
  for (std::size_t j = 0; j <= 2 * m; ++j) {
    const double x = (static_cast<double>(j) - static_cast<double>(m)) * dx;
    w[j] = std::exp(-0.5 * x * x / s);
    total += w[j];
  }
  for (double& v : w) v /= total;
  return w;
}

namespace {

GridDensity coarsen(const GridDensity& rho, std::size_t factor) {
  const Grid& g = rho.grid();
  auto dep = detail::deposit(g, rho.vector(), g.x_min, g.dx * static_cast<double>(factor));
  for (double& v : dep.values) v = std::max(v, 0.0);
  return GridDensity(dep.grid, std::move(dep.values), rho.log_concave());
}

}  // namespace

GridDensity heat_evolve(const GridDensity& rho, double s) {
  if (!(s >= 0.0) || !std::isfinite(s)) fail(ErrorKind::domain, "heat_evolve needs finite s >= 0");
  if (s == 0.0) return rho;
  const Grid& g0 = rho.grid();
  std::size_t factor = 1;
  auto out_len = [&](std::size_t f) {
    const double dx = g0.dx * static_cast<double>(f);
    const std::size_t m = s < dx * dx ? 1 : static_cast<std::size_t>(std::ceil(8.0 * std::sqrt(s) / dx));
    return g0.n_pts / f + 2 * m + 2;
  };
  while (out_len(factor) > kMaxEvolvedNodes) ++factor;
  const GridDensity src = factor == 1 ? rho : coarsen(rho, factor);
  const Grid& g = src.grid();
  const auto w = heat_kernel_weights(s, g.dx);
  const std::size_t m = w.size() / 2;
  auto out = kernels::convolve(src.values(), w);
  for (double& v : out) v = std::max(v, 0.0);
  const Grid og{g.x_min - static_cast<double>(m) * g.dx, g.dx, out.size()};
  return GridDensity(og, std::move(out), rho.log_concave());
}

Moments moments(const GridDensity& rho) {
  const Grid& g = rho.grid();
  const auto v = rho.values();
  const double mean = kernels::trapezoid(v.size(), g.dx, [&](std::size_t i) { return g.x(i) * v[i]; });
  const double var = kernels::trapezoid(v.size(), g.dx, [&](std::size_t i) {
    const double d = g.x(i) - mean;
    return d * d * v[i];
  });
  const double variance = std::max(var, 0.0);
  return {mean, variance, variance};
}

GridDensity convolve_independent(const GridDensity& rho_x, const GridDensity& rho_y) {
  const LogConcavity lc = (rho_x.log_concave() == LogConcavity::yes &&
                           rho_y.log_concave() == LogConcavity::yes)
                              ? LogConcavity::yes
                              : LogConcavity::unknown;
  const Grid& gx = rho_x.grid();
  const Grid& gy = rho_y.grid();
  const bool same = std::abs(gx.dx - gy.dx) <= 1e-12 * gx.dx;
  const GridDensity& coarse = (same || gx.dx > gy.dx) ? rho_x : rho_y;
  const GridDensity& fine = (&coarse == &rho_x) ? rho_y : rho_x;
  Grid fg = fine.grid();
  std::vector<double> fv = fine.vector();
  const double h = coarse.grid().dx;
  if (!same) {
    auto dep = detail::deposit(fg, fv, moments(fine).mean, h);
    fg = dep.grid;
    fv = std::move(dep.values);
    for (double& v : fv) v = std::max(v, 0.0);
  }
  auto out = kernels::convolve(coarse.values(), fv);
  for (double& v : out) v = std::max(v * h, 0.0);
  const Grid og = Grid::make(coarse.grid().x_min + fg.x_min, h, out.size());
  return GridDensity(og, std::move(out), lc);
}

namespace detail {

Deposit deposit(const Grid& src, const std::vector<double>& values, double anchor,
                double spacing) {
  const double t0 = (src.x_min - anchor) / spacing;
  const double t1 = (src.x_max() - anchor) / spacing;
  const auto j0 = static_cast<std::ptrdiff_t>(std::floor(t0)) - 2;
  const auto j1 = static_cast<std::ptrdiff_t>(std::ceil(t1)) + 2;
  const auto n = std::max<std::size_t>(static_cast<std::size_t>(j1 - j0 + 1), 8);
  std::vector<double> mass(n, 0.0);
  const std::size_t last = values.size() - 1;
  for (std::size_t i = 0; i <= last; ++i) {
    const double wt = (i == 0 || i == last) ? 0.5 : 1.0;
    const double m = values[i] * src.dx * wt;
    if (m == 0.0) continue;
    const double t = (src.x(i) - anchor) / spacing;
    const double j = std::round(t);
    const double u = t - j;
    const auto k = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(j) - j0);
    mass[k - 1] += m * 0.5 * (u * u - u);
    mass[k] += m * (1.0 - u * u);
    mass[k + 1] += m * 0.5 * (u * u + u);
  }
  for (double& v : mass) v /= spacing;
  return {Grid::make(anchor + static_cast<double>(j0) * spacing, spacing, n), std::move(mass)};
}

}  // namespace detail

GridDensity resample(const GridDensity& rho, const Grid& target) {
  const Grid& g = rho.grid();
  std::vector<double> out(target.n_pts, 0.0);
  if (g.aligned_with(target)) {
    const std::ptrdiff_t off = g.offset_in(target);
    for (std::size_t i = 0; i < g.n_pts; ++i) {
      const std::ptrdiff_t k = off + static_cast<std::ptrdiff_t>(i);
      if (k >= 0 && k < static_cast<std::ptrdiff_t>(target.n_pts)) out[static_cast<std::size_t>(k)] = rho[i];
    }
  } else if (target.dx > g.dx * (1.0 + 1e-12)) {
    auto dep = detail::deposit(g, rho.vector(), target.x_min, target.dx);
    for (std::size_t i = 0; i < dep.grid.n_pts; ++i) {
      const std::ptrdiff_t k = dep.grid.offset_in(target) + static_cast<std::ptrdiff_t>(i);
      if (k >= 0 && k < static_cast<std::ptrdiff_t>(target.n_pts))
        out[static_cast<std::size_t>(k)] = std::max(dep.values[i], 0.0);
    }
  } else {
    for (std::size_t i = 0; i < target.n_pts; ++i) out[i] = interpolate(g, rho.vector(), target.x(i));
  }
  return GridDensity(target, std::move(out), rho.log_concave());
}

AlignedPair align(const GridDensity& nu, const GridDensity& mu) {
  const Grid& a = nu.grid();
  const Grid& b = mu.grid();
  if (a == b) return {nu, mu};
  if (a.aligned_with(b)) {
    const Grid u = b.union_with(a);
    return {resample(nu, u), resample(mu, u)};
  }
  const Grid& fine = a.dx < b.dx ? a : b;
  const double lo = std::min(a.x_min, b.x_min);
  const double hi = std::max(a.x_max(), b.x_max());
  const double x_min = fine.x_min + std::floor((lo - fine.x_min) / fine.dx + 1e-9) * fine.dx;
  const auto n = static_cast<std::size_t>(std::ceil((hi - x_min) / fine.dx - 1e-9)) + 1;
  const Grid u = Grid::make(x_min, fine.dx, n);
  return {resample(nu, u), resample(mu, u)};
}

RatioField density_ratio(const GridDensity& nu, const GridDensity& mu) {
  AlignedPair p = align(nu, mu);
  const Grid& g = p.mu.grid();
  const double cut = kExclusionTau * p.mu.max_value();
  std::vector<double> f(g.n_pts, 0.0);
  std::vector<std::uint8_t> ex(g.n_pts, 0);
  for (std::size_t i = 0; i < g.n_pts; ++i) {
    if (p.mu[i] <= cut) {
      ex[i] = 1;
    } else {
      f[i] = p.nu[i] / p.mu[i];
    }
  }
  const double lost = kernels::trapezoid(g.n_pts, g.dx, [&](std::size_t i) {
    return ex[i] ? p.nu[i] : 0.0;
  });
  if (lost > kExcludedMassLimit)
    fail(ErrorKind::absolute_continuity,
         "nu carries mass " + detail::format_double(lost) + " where mu vanishes");
  return {FieldOnGrid(g, std::move(f), std::move(ex)), std::move(p.mu)};
}

void write_density_csv(std::ostream& os, const GridDensity& rho) {
  os << "x,rho\n";
  const Grid& g = rho.grid();
  for (std::size_t i = 0; i < g.n_pts; ++i)
    os << detail::format_double(g.x(i)) << ',' << detail::format_double(rho[i]) << '\n';
}

}  // namespace heatflow
