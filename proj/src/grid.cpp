#include "heatflow/grid.hpp"

#include <algorithm>
#include <cmath>

#include "heatflow/error.hpp"

namespace heatflow {

Grid Grid::make(double x_min, double dx, std::size_t n_pts) {
  if (!(dx > 0.0) || !std::isfinite(dx)) fail(ErrorKind::parameter, "grid spacing must be positive");
  if (n_pts < 8) fail(ErrorKind::parameter, "grid needs at least 8 nodes");
  Grid g{x_min, dx, n_pts};
  if (!std::isfinite(x_min) || !std::isfinite(g.x_max()))
    fail(ErrorKind::parameter, "grid nodes must be finite");
  return g;
}

std::vector<double> Grid::nodes() const {
  std::vector<double> out(n_pts);
  for (std::size_t i = 0; i < n_pts; ++i) out[i] = x(i);
  return out;
}

bool Grid::aligned_with(const Grid& other) const {
  if (std::abs(dx - other.dx) > 1e-12 * dx) return false;
  const double shift = (x_min - other.x_min) / other.dx;
  return std::abs(shift - std::round(shift)) < 1e-6;
}

std::ptrdiff_t Grid::offset_in(const Grid& other) const {
  return static_cast<std::ptrdiff_t>(std::llround((x_min - other.x_min) / other.dx));
}

Grid Grid::union_with(const Grid& other) const {
  if (!aligned_with(other)) fail(ErrorKind::parameter, "grids are not aligned");
  const std::ptrdiff_t off = other.offset_in(*this);
  const std::ptrdiff_t lo = std::min<std::ptrdiff_t>(0, off);
  const std::ptrdiff_t hi = std::max<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n_pts),
                                                     off + static_cast<std::ptrdiff_t>(other.n_pts));
  return Grid{x_min + static_cast<double>(lo) * dx, dx, static_cast<std::size_t>(hi - lo)};
}

FieldOnGrid::FieldOnGrid(Grid g, std::vector<double> v)
    : grid(g), values(std::move(v)), excluded(values.size(), 0) {}

FieldOnGrid::FieldOnGrid(Grid g, std::vector<double> v, std::vector<std::uint8_t> mask)
    : grid(g), values(std::move(v)), excluded(std::move(mask)) {
  if (excluded.size() != values.size()) fail(ErrorKind::parameter, "mask size mismatch");
}

double interpolate(const Grid& g, const std::vector<double>& v, double x) {
  const double t = (x - g.x_min) / g.dx;
  if (t < -1e-9 || t > static_cast<double>(g.n_pts - 1) + 1e-9) return 0.0;
  double fl = std::floor(t);
  if (fl < 0) fl = 0;
  std::size_t i = static_cast<std::size_t>(fl);
  if (i >= g.n_pts - 1) i = g.n_pts - 2;
  const double w = std::clamp(t - static_cast<double>(i), 0.0, 1.0);
  return (1.0 - w) * v[i] + w * v[i + 1];
}

}  // namespace heatflow
