#pragma once
// Internal helpers shared by the library translation units.

#include <charconv>
#include <string>
#include <vector>

#include "heatflow/grid.hpp"

namespace heatflow::detail {

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Deposit {
  Grid grid;
  std::vector<double> values;  // densities (mass / spacing)
};

/// Moment-preserving (mass, mean, second moment) quadratic deposit of a
/// sampled density onto the lattice anchor + k * spacing.
Deposit deposit(const Grid& src, const std::vector<double>& values, double anchor,
                double spacing);

}  // namespace heatflow::detail
