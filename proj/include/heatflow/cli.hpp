#pragma once
/** @file cli.hpp
 *  Spec grammar, serialization and the command-line entry point.
 */

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "heatflow/constants.hpp"
#include "heatflow/densities.hpp"
#include "heatflow/divergences.hpp"
#include "heatflow/estimation.hpp"
#include "heatflow/qs_operator.hpp"
#include "heatflow/spec_parser.hpp"
#include "heatflow/verification.hpp"

namespace heatflow {

nlohmann::json to_json(const DivergenceCurve& c);
nlohmann::json to_json(const SdpiEstimate& e);
nlohmann::json to_json(const HalfBlurringTime& t);
nlohmann::json to_json(const ConstantEstimate& c);
nlohmann::json to_json(const BoundRow& r);
nlohmann::json to_json(const CheckReport& r);
nlohmann::json to_json(const SuiteReport& r);
nlohmann::json to_json(const SuiteConfig& c);

SuiteConfig suite_config_from_json(const nlohmann::json& j);
SdpiEstimate sdpi_from_json(const nlohmann::json& j);
ConstantEstimate constant_from_json(const nlohmann::json& j);
DivergenceCurve curve_from_json(const nlohmann::json& j);

void write_curve_csv(std::ostream& os, const DivergenceCurve& c);

/// Runs one invocation; args exclude the program name. Returns the exit code
/// (0 ok, 1 computation failure or failed checks, 2 usage/parse/range error).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace heatflow
