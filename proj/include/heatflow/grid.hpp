#pragma once
/** @file grid.hpp
 *  Uniform 1D grids and sampled fields.
 */

#include <cstddef>
#include <cstdint>
#include <vector>

namespace heatflow {

/// Nodes x_min + i*dx for i in [0, n_pts).
struct Grid {
  double x_min = 0.0;
  double dx = 1.0;
  std::size_t n_pts = 0;

  /// Validating constructor (dx > 0, n_pts >= 8, finite nodes).
  static Grid make(double x_min, double dx, std::size_t n_pts);

  double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx; }
  double x_max() const { return x(n_pts - 1); }
  std::vector<double> nodes() const;

  /// Same spacing (to 1e-12 relative) and offsets differing by an integer
  /// number of cells (to 1e-6 cell).
  bool aligned_with(const Grid& other) const;
  /// Index of this grid's first node on `other`'s lattice. Requires alignment.
  std::ptrdiff_t offset_in(const Grid& other) const;
  /// Smallest grid on this lattice covering both (requires alignment).
  Grid union_with(const Grid& other) const;

  bool operator==(const Grid&) const = default;
};

/// A function sampled on grid nodes; excluded nodes carry no information.
struct FieldOnGrid {
  Grid grid;
  std::vector<double> values;
  std::vector<std::uint8_t> excluded;

  FieldOnGrid() = default;
  FieldOnGrid(Grid g, std::vector<double> v);
  FieldOnGrid(Grid g, std::vector<double> v, std::vector<std::uint8_t> mask);

  bool is_excluded(std::size_t i) const { return excluded[i] != 0; }
  std::size_t size() const { return values.size(); }
};

/// Linear interpolation of samples on `g`, zero outside.
double interpolate(const Grid& g, const std::vector<double>& v, double x);

}  // namespace heatflow
