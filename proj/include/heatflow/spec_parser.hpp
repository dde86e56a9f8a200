#pragma once
/** @file spec_parser.hpp
 *  Text grammar for distribution specs and s grids.
 *
 *    spec := gaussian(m,v) | uniform(a,b) | laplace(l,b) | mix(w*spec, ...)
 *
 *  Whitespace is ignored; numbers are decimal literals.
 */

#include <string_view>
#include <vector>

#include "heatflow/densities.hpp"

namespace heatflow {

/// Throws SyntaxError (with byte position) or a parameter Error for
/// constraint violations.
DistributionSpec parse_spec(std::string_view text);

/// "a:b:n" (inclusive endpoints, n points) or a single number.
std::vector<double> parse_s_grid(std::string_view text);

}  // namespace heatflow
