// SPDX-License-Identifier: Apache-2.0
#include "bagpilot/mcp/schema.hpp"

#include <cmath>

#include <fmt/format.h>

namespace bagpilot::mcp {

namespace {

using nlohmann::json;

std::string kind_of(const json& v) {
  switch (v.type()) {
    case json::value_t::null: return "null";
    case json::value_t::boolean: return "boolean";
    case json::value_t::number_integer:
    case json::value_t::number_unsigned: return "integer";
    case json::value_t::number_float: return "number";
    case json::value_t::string: return "string";
    case json::value_t::array: return "array";
    default: return "object";
  }
}

bool has_type(const json& v, const std::string& type) {
  if (type == "string") return v.is_string();
  if (type == "number") return v.is_number();
  if (type == "integer") {
    if (v.is_number_integer()) return true;
    if (!v.is_number_float()) return false;
    const double d = v.get<double>();
    return std::isfinite(d) && std::floor(d) == d;
  }
  if (type == "boolean") return v.is_boolean();
  if (type == "array") return v.is_array();
  if (type == "object") return v.is_object();
  if (type == "null") return v.is_null();
  return false;
}

std::string describe(const json& schema) {
  std::string out = schema.value("type", std::string("value"));
  if (schema.contains("items") && schema["items"].contains("type")) {
    out = fmt::format("array of {}", schema["items"]["type"].get<std::string>());
  }
  if (schema.contains("description")) out += fmt::format(" ({})", schema["description"].get<std::string>());
  return out;
}

std::string where(const std::string& path) { return path.empty() ? "arguments" : fmt::format("argument '{}'", path); }

std::optional<std::string> check(const json& schema, const json& v, const std::string& path) {
  if (schema.contains("type")) {
    const auto& t = schema["type"];
    bool ok = false;
    if (t.is_array()) {
      for (const auto& one : t) ok = ok || has_type(v, one.get<std::string>());
    } else {
      ok = has_type(v, t.get<std::string>());
    }
    if (!ok) {
      return fmt::format("{} must be {}, got {} {}", where(path), describe(schema), kind_of(v),
                         v.dump().substr(0, 60));
    }
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found = found || e == v;
    if (!found) {
      std::vector<std::string> options;
      for (const auto& e : schema["enum"]) options.push_back(e.is_string() ? e.get<std::string>() : e.dump());
      return fmt::format("{} must be one of: {}; got {}", where(path), fmt::join(options, ", "), v.dump());
    }
  }
  if (v.is_number()) {
    const double d = v.get<double>();
    if (!std::isfinite(d)) return fmt::format("{} must be a finite number", where(path));
    if (schema.contains("minimum") && d < schema["minimum"].get<double>()) {
      return fmt::format("{} must be >= {}, got {}", where(path), schema["minimum"].dump(), v.dump());
    }
    if (schema.contains("maximum") && d > schema["maximum"].get<double>()) {
      return fmt::format("{} must be <= {}, got {}", where(path), schema["maximum"].dump(), v.dump());
    }
  }
  if (v.is_array()) {
    if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>()) {
      return fmt::format("{} must hold at least {} item(s), got {}", where(path), schema["minItems"].dump(), v.size());
    }
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (auto e = check(schema["items"], v[i], fmt::format("{}[{}]", path, i))) return e;
      }
    }
  }
  if (v.is_object()) {
    const auto& props = schema.contains("properties") ? schema["properties"] : json::object();
    for (const auto& name : schema.value("required", json::array())) {
      const auto key = name.get<std::string>();
      if (!v.contains(key)) {
        const auto full = path.empty() ? key : path + "." + key;
        return fmt::format("missing required argument '{}': {}", full,
                           props.contains(key) ? describe(props[key]) : std::string("value"));
      }
    }
    for (const auto& [key, item] : v.items()) {
      const auto full = path.empty() ? key : path + "." + key;
      if (props.contains(key)) {
        if (auto e = check(props[key], item, full)) return e;
      } else if (schema.value("additionalProperties", true) == false) {
        std::vector<std::string> names;
        for (const auto& [k, _] : props.items()) names.push_back(k);
        return fmt::format("unknown argument '{}'; accepted arguments are: {}", full, fmt::join(names, ", "));
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> validate(const nlohmann::json& schema, const nlohmann::json& value) {
  return check(schema, value, "");
}

}  // namespace bagpilot::mcp
