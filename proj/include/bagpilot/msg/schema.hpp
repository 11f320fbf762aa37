// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bagpilot::msg {

enum class Primitive : std::uint8_t {
  Bool,
  Int8,
  UInt8,
  Int16,
  UInt16,
  Int32,
  UInt32,
  Int64,
  UInt64,
  Float32,
  Float64,
  String,
  Time,
  Duration,
};

std::string_view primitive_name(Primitive p) noexcept;
/// Accepts the ROS1 aliases `byte` (int8) and `char` (uint8).
std::optional<Primitive> parse_primitive(std::string_view name) noexcept;
/// Serialized width in bytes; 0 for strings.
std::size_t primitive_size(Primitive p) noexcept;

enum class ArrayKind : std::uint8_t { None, Fixed, Variable };

struct FieldType {
  /// Either a primitive or the fully qualified name of a nested message.
  std::variant<Primitive, std::string> element;
  ArrayKind array = ArrayKind::None;
  std::size_t fixed_length = 0;

  bool is_nested() const noexcept { return std::holds_alternative<std::string>(element); }
  const std::string& nested_type() const { return std::get<std::string>(element); }
  Primitive primitive() const { return std::get<Primitive>(element); }
  bool is_array() const noexcept { return array != ArrayKind::None; }

  /// Text form, e.g. "float64[36]" or "geometry_msgs/Pose".
  std::string str() const;

  bool operator==(const FieldType&) const = default;
};

struct Field {
  std::string name;
  FieldType type;

  bool operator==(const Field&) const = default;
};

struct MessageSchema {
  std::string type_name;
  std::vector<Field> fields;

  const Field* find(std::string_view name) const noexcept;

  bool operator==(const MessageSchema&) const = default;
};

/// A root message type plus every type it depends on, keyed by full name.
class SchemaSet {
 public:
  SchemaSet() = default;
  SchemaSet(std::string root_type, std::map<std::string, MessageSchema, std::less<>> types);

  const std::string& root_type() const noexcept { return root_type_; }
  const MessageSchema& root() const { return at(root_type_); }
  /// Throws Error(UnresolvedNestedType) when missing.
  const MessageSchema& at(std::string_view type_name) const;
  const MessageSchema* find(std::string_view type_name) const noexcept;
  const std::map<std::string, MessageSchema, std::less<>>& types() const noexcept { return types_; }

 private:
  std::string root_type_;
  std::map<std::string, MessageSchema, std::less<>> types_;
};

/// Separator between the root definition and each dependency block.
inline constexpr std::string_view kDefinitionSeparator =
    "================================================================================";

/// Parses a connection's embedded message definition.
///
/// The text holds the root type's fields followed by zero or more dependency
/// blocks, each introduced by a separator line of '=' and a `MSG: pkg/Name`
/// line. Comments and constant declarations are skipped. Unqualified nested
/// names resolve against the declaring type's package, and `Header` always
/// means std_msgs/Header (a built-in definition is supplied if the text does
/// not carry one).
///
/// Throws Error with UnknownFieldType, UnresolvedNestedType, CyclicType or
/// DuplicateField.
SchemaSet parse_definition(std::string_view definition_text, std::string_view root_type);

}  // namespace bagpilot::msg
