// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "bagpilot/msg/schema.hpp"

namespace bagpilot::msg {

struct Time {
  std::uint32_t sec = 0;
  std::uint32_t nsec = 0;

  double seconds() const noexcept { return static_cast<double>(sec) + static_cast<double>(nsec) * 1e-9; }
  bool operator==(const Time&) const = default;
};

struct Duration {
  std::int32_t sec = 0;
  std::int32_t nsec = 0;

  double seconds() const noexcept { return static_cast<double>(sec) + static_cast<double>(nsec) * 1e-9; }
  bool operator==(const Duration&) const = default;
};

class Value;
using Array = std::vector<Value>;
using Record = std::vector<std::pair<std::string, Value>>;

/// A decoded message node. Integers keep their signedness, float32 stays a
/// float so that re-encoding reproduces the original bytes exactly.
class Value {
 public:
  using Storage = std::variant<bool, std::int64_t, std::uint64_t, float, double, std::string, Time, Duration,
                               Array, Record>;

  Value() = default;
  template <typename T>
    requires std::is_constructible_v<Storage, T&&>
  Value(T&& v) : data_(std::forward<T>(v)) {}  // NOLINT(google-explicit-constructor)

  const Storage& data() const noexcept { return data_; }
  Storage& data() noexcept { return data_; }

  template <typename T>
  bool is() const noexcept {
    return std::holds_alternative<T>(data_);
  }
  template <typename T>
  const T& as() const {
    return std::get<T>(data_);
  }
  template <typename T>
  T& as() {
    return std::get<T>(data_);
  }

  bool is_record() const noexcept { return is<Record>(); }
  bool is_array() const noexcept { return is<Array>(); }

  /// Record member lookup; nullptr if this is not a record or has no such member.
  const Value* find(std::string_view name) const noexcept;

  friend bool operator==(const Value& a, const Value& b);

 private:
  Storage data_;
};

/// Dot-separated path into a record tree, e.g. "twist.twist.linear.x".
/// Array indexing is not supported.
struct FieldPath {
  std::vector<std::string> segments;

  static FieldPath parse(std::string_view dotted);
  std::string str() const;
  bool empty() const noexcept { return segments.empty(); }
};

/// Walks `path` from `root`. Throws Error(NoSuchField) naming the failing
/// segment and the available siblings.
const Value& get_field(const Value& root, const FieldPath& path);

/// Numeric view of a scalar: integers and floats as-is, bool as 0/1, time and
/// duration as fractional seconds. nullopt for strings, arrays and records.
std::optional<double> to_real(const Value& v) noexcept;

/// Short text rendering of a scalar (strings verbatim, numbers shortest form).
std::string to_display_string(const Value& v);

struct JsonOptions {
  /// Arrays longer than this are summarised as {"length": n, "head": [...]}.
  std::size_t max_array_elements = std::numeric_limits<std::size_t>::max();
};

nlohmann::json to_json(const Value& v, const JsonOptions& options = {});

/// Schema-guided conversion from JSON. Time accepts {"sec","nsec"} or a
/// number of seconds; uint8/int8 arrays also accept a base64 string.
/// Throws Error(ShapeMismatch).
Value from_json(const SchemaSet& schemas, std::string_view type_name, const nlohmann::json& j);

}  // namespace bagpilot::msg
