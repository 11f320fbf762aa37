// SPDX-License-Identifier: Apache-2.0
// The subset of JSON Schema used by tool input schemas.
#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace bagpilot::mcp {

/// Checks `value` against `schema`. Supported keywords: type (string, number,
/// integer, boolean, array, object), enum, minimum, maximum, minItems, items,
/// properties, required, additionalProperties (boolean). Returns a message
/// naming the offending argument and what was expected, or nullopt.
std::optional<std::string> validate(const nlohmann::json& schema, const nlohmann::json& value);

}  // namespace bagpilot::mcp
