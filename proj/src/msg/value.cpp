// SPDX-License-Identifier: Apache-2.0
#include "bagpilot/msg/value.hpp"

#include <cmath>
#include <fmt/format.h>

#include "bagpilot/error.hpp"
#include "bagpilot/util.hpp"

namespace bagpilot::msg {

const Value* Value::find(std::string_view name) const noexcept {
  if (!is_record()) return nullptr;
  for (const auto& [k, v] : as<Record>()) {
    if (k == name) return &v;
  }
  return nullptr;
}

bool operator==(const Value& a, const Value& b) { return a.data_ == b.data_; }

FieldPath FieldPath::parse(std::string_view dotted) {
  FieldPath p;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    const auto dot = dotted.find('.', start);
    const auto seg = dotted.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
    if (seg.empty()) {
      throw Error(Errc::NoSuchField, fmt::format("field path '{}' has an empty segment", dotted));
    }
    if (seg.find('[') != std::string_view::npos) {
      throw Error(Errc::NoSuchField,
                  fmt::format("field path '{}' uses array indexing, which is not supported", dotted));
    }
    p.segments.emplace_back(seg);
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return p;
}

std::string FieldPath::str() const { return fmt::format("{}", fmt::join(segments, ".")); }

const Value& get_field(const Value& root, const FieldPath& path) {
  const Value* node = &root;
  std::string walked;
  for (const auto& seg : path.segments) {
    const auto where = walked.empty() ? std::string("the message root") : fmt::format("'{}'", walked);
    if (!node->is_record()) {
      const char* what = node->is_array() ? "an array (array indexing is not supported)" : "a scalar";
      throw Error(Errc::NoSuchField,
                  fmt::format("cannot resolve '{}': {} is {}", seg, where, what));
    }
    const Value* next = node->find(seg);
    if (!next) {
      std::vector<std::string> names;
      for (const auto& [k, _] : node->as<Record>()) names.push_back(k);
      throw Error(Errc::NoSuchField,
                  fmt::format("no field '{}' under {}; available fields: {}", seg, where, fmt::join(names, ", ")));
    }
    node = next;
    walked = walked.empty() ? seg : walked + "." + seg;
  }
  return *node;
}

std::optional<double> to_real(const Value& v) noexcept {
  return std::visit(
      [](const auto& x) -> std::optional<double> {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) {
          return x ? 1.0 : 0.0;
        } else if constexpr (std::is_arithmetic_v<T>) {
          return static_cast<double>(x);
        } else if constexpr (std::is_same_v<T, Time> || std::is_same_v<T, Duration>) {
          return x.seconds();
        } else {
          return std::nullopt;
        }
      },
      v.data());
}

std::string to_display_string(const Value& v) {
  if (v.is<std::string>()) return v.as<std::string>();
  if (v.is<bool>()) return v.as<bool>() ? "true" : "false";
  if (v.is<std::int64_t>()) return std::to_string(v.as<std::int64_t>());
  if (v.is<std::uint64_t>()) return std::to_string(v.as<std::uint64_t>());
  if (auto r = to_real(v)) return fmt::format("{}", *r);
  return to_json(v).dump();
}

nlohmann::json to_json(const Value& v, const JsonOptions& options) {
  using nlohmann::json;
  return std::visit(
      [&](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Time> || std::is_same_v<T, Duration>) {
          return json{{"sec", x.sec}, {"nsec", x.nsec}};
        } else if constexpr (std::is_same_v<T, float>) {
          return static_cast<double>(x);
        } else if constexpr (std::is_same_v<T, Array>) {
          json arr = json::array();
          const auto n = std::min(x.size(), options.max_array_elements);
          for (std::size_t i = 0; i < n; ++i) arr.push_back(to_json(x[i], options));
          if (n == x.size()) return arr;
          return json{{"length", x.size()}, {"head", std::move(arr)}};
        } else if constexpr (std::is_same_v<T, Record>) {
          json obj = json::object();
          for (const auto& [k, child] : x) obj[k] = to_json(child, options);
          return obj;
        } else {
          return x;
        }
      },
      v.data());
}

namespace {

[[noreturn]] void mismatch(std::string_view where, std::string_view expected, const nlohmann::json& got) {
  throw Error(Errc::ShapeMismatch,
              fmt::format("'{}' expects {} but got {}", where, expected, got.type_name()));
}

Value primitive_from_json(Primitive p, const nlohmann::json& j, std::string_view where) {
  switch (p) {
    case Primitive::Bool:
      if (j.is_boolean()) return j.get<bool>();
      if (j.is_number_integer()) return j.get<std::int64_t>() != 0;
      mismatch(where, "a boolean", j);
    case Primitive::Int8:
    case Primitive::Int16:
    case Primitive::Int32:
    case Primitive::Int64:
      if (!j.is_number_integer()) mismatch(where, "an integer", j);
      return j.get<std::int64_t>();
    case Primitive::UInt8:
    case Primitive::UInt16:
    case Primitive::UInt32:
    case Primitive::UInt64:
      if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
        mismatch(where, "a non-negative integer", j);
      }
      return j.get<std::uint64_t>();
    case Primitive::Float32:
      if (j.is_null()) return std::numeric_limits<float>::quiet_NaN();
      if (!j.is_number()) mismatch(where, "a number", j);
      return j.get<float>();
    case Primitive::Float64:
      if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
      if (!j.is_number()) mismatch(where, "a number", j);
      return j.get<double>();
    case Primitive::String:
      if (!j.is_string()) mismatch(where, "a string", j);
      return j.get<std::string>();
    case Primitive::Time:
      if (j.is_object()) return Time{j.at("sec").get<std::uint32_t>(), j.at("nsec").get<std::uint32_t>()};
      if (j.is_number()) {
        const auto ns = seconds_to_ns(j.get<double>());
        return Time{static_cast<std::uint32_t>(ns / kNsPerSec), static_cast<std::uint32_t>(ns % kNsPerSec)};
      }
      mismatch(where, "a time ({\"sec\",\"nsec\"} or seconds)", j);
    case Primitive::Duration:
      if (j.is_object()) return Duration{j.at("sec").get<std::int32_t>(), j.at("nsec").get<std::int32_t>()};
      if (j.is_number()) {
        const auto ns = seconds_to_ns(j.get<double>());
        return Duration{static_cast<std::int32_t>(ns / kNsPerSec), static_cast<std::int32_t>(ns % kNsPerSec)};
      }
      mismatch(where, "a duration", j);
  }
  mismatch(where, "a primitive", j);
}

Value element_from_json(const SchemaSet& schemas, const FieldType& t, const nlohmann::json& j, const std::string& where) {
  if (t.is_nested()) return from_json(schemas, t.nested_type(), j);
  return primitive_from_json(t.primitive(), j, where);
}

}  // namespace

Value from_json(const SchemaSet& schemas, std::string_view type_name, const nlohmann::json& j) {
  const auto& schema = schemas.at(type_name);
  if (!j.is_object()) mismatch(type_name, "an object", j);
  Record rec;
  rec.reserve(schema.fields.size());
  for (const auto& f : schema.fields) {
    const auto where = fmt::format("{}.{}", type_name, f.name);
    const auto it = j.find(f.name);
    if (it == j.end()) {
      throw Error(Errc::ShapeMismatch, fmt::format("'{}' is missing", where));
    }
    if (!f.type.is_array()) {
      rec.emplace_back(f.name, element_from_json(schemas, f.type, *it, where));
      continue;
    }
    Array arr;
    const bool bytes = !f.type.is_nested() &&
                       (f.type.primitive() == Primitive::UInt8 || f.type.primitive() == Primitive::Int8);
    if (bytes && it->is_string()) {
      for (auto b : base64_decode(it->get<std::string>())) {
        if (f.type.primitive() == Primitive::UInt8) {
          arr.emplace_back(static_cast<std::uint64_t>(b));
        } else {
          arr.emplace_back(static_cast<std::int64_t>(static_cast<std::int8_t>(b)));
        }
      }
    } else {
      if (!it->is_array()) mismatch(where, "an array", *it);
      for (const auto& e : *it) arr.push_back(element_from_json(schemas, f.type, e, where));
    }
    if (f.type.array == ArrayKind::Fixed && arr.size() != f.type.fixed_length) {
      throw Error(Errc::ShapeMismatch,
                  fmt::format("'{}' needs exactly {} elements, got {}", where, f.type.fixed_length, arr.size()));
    }
    rec.emplace_back(f.name, std::move(arr));
  }
  return rec;
}

}  // namespace bagpilot::msg
