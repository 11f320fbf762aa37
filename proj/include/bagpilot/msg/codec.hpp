// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "bagpilot/msg/schema.hpp"
#include "bagpilot/msg/value.hpp"

namespace bagpilot::msg {

struct DecodeDiagnostics {
  /// Set when a string field held invalid UTF-8; the text was repaired with
  /// U+FFFD replacement characters.
  bool invalid_utf8 = false;
};

/// Decodes a ROS1-serialized payload (little-endian, unaligned, declaration
/// order). The payload must be consumed exactly: Error(ShortPayload) or
/// Error(TrailingBytes) otherwise.
Value decode(const SchemaSet& schemas, std::string_view type_name, std::span<const std::uint8_t> payload,
             DecodeDiagnostics* diagnostics = nullptr);

inline Value decode(const SchemaSet& schemas, std::span<const std::uint8_t> payload,
                    DecodeDiagnostics* diagnostics = nullptr) {
  return decode(schemas, schemas.root_type(), payload, diagnostics);
}

/// Serializes `value`; throws Error(ShapeMismatch) when it does not fit the schema.
std::vector<std::uint8_t> encode(const SchemaSet& schemas, std::string_view type_name, const Value& value);

inline std::vector<std::uint8_t> encode(const SchemaSet& schemas, const Value& value) {
  return encode(schemas, schemas.root_type(), value);
}

}  // namespace bagpilot::msg
