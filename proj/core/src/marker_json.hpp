#pragma once

// Internal JSON (de)serialization of code patterns, shared between the marker
// catalog and the outcome configuration. Not installed.

#include <string>

#include <json.hpp>

#include "frailty/markers.hpp"

namespace frailty::detail {

nlohmann::json constraint_to_json(const CodeConstraint& c);
CodeConstraint constraint_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::json pattern_to_json(const CodePattern& p);
CodePattern pattern_from_json(const nlohmann::json& j, const std::string& where);

}  // namespace frailty::detail
