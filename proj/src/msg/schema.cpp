// SPDX-License-Identifier: Apache-2.0
#include "bagpilot/msg/schema.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <fmt/format.h>
#include <set>

#include "bagpilot/error.hpp"

namespace bagpilot::msg {

namespace {

constexpr std::string_view kHeaderType = "std_msgs/Header";

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

bool is_separator(std::string_view line) {
  line = trim(line);
  return line.size() >= 3 && std::all_of(line.begin(), line.end(), [](char c) { return c == '='; });
}

std::string_view package_of(std::string_view type_name) {
  const auto slash = type_name.find('/');
  return slash == std::string_view::npos ? std::string_view{} : type_name.substr(0, slash);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

struct Block {
  std::string type_name;
  std::vector<std::string_view> lines;
};

// A nested reference as written, before resolution against the set of blocks.
struct PendingType {
  FieldType type;
  std::string written;  // the name as it appeared, for error text
  bool qualified = false;
};

PendingType parse_type_token(std::string_view token, std::string_view package, std::string_view type_name) {
  PendingType out;
  std::string_view base = token;
  const auto bracket = token.find('[');
  if (bracket != std::string_view::npos) {
    if (token.back() != ']') {
      throw Error(Errc::UnknownFieldType,
                  fmt::format("malformed array type '{}' in {}", token, type_name));
    }
    base = token.substr(0, bracket);
    const auto inside = token.substr(bracket + 1, token.size() - bracket - 2);
    if (inside.empty()) {
      out.type.array = ArrayKind::Variable;
    } else {
      std::size_t n = 0;
      const auto [ptr, ec] = std::from_chars(inside.data(), inside.data() + inside.size(), n);
      if (ec != std::errc{} || ptr != inside.data() + inside.size()) {
        throw Error(Errc::UnknownFieldType,
                    fmt::format("unsupported array bound '{}' in {} (only T[] and T[N] are supported)",
                                token, type_name));
      }
      out.type.array = ArrayKind::Fixed;
      out.type.fixed_length = n;
    }
  }
  if (auto prim = parse_primitive(base)) {
    out.type.element = *prim;
    return out;
  }
  out.written = std::string(base);
  if (base == "Header") {
    out.type.element = std::string(kHeaderType);
    out.qualified = true;
    return out;
  }
  const auto slash = base.find('/');
  const bool valid = slash == std::string_view::npos
                         ? is_identifier(base)
                         : (is_identifier(base.substr(0, slash)) && is_identifier(base.substr(slash + 1)));
  if (!valid) {
    throw Error(Errc::UnknownFieldType, fmt::format("unknown field type '{}' in {}", base, type_name));
  }
  if (slash != std::string_view::npos) {
    out.type.element = std::string(base);
    out.qualified = true;
  } else {
    out.type.element = package.empty() ? std::string(base) : fmt::format("{}/{}", package, base);
  }
  return out;
}

const char* kBuiltinHeader = "uint32 seq\ntime stamp\nstring frame_id\n";

}  // namespace

std::string_view primitive_name(Primitive p) noexcept {
  switch (p) {
    case Primitive::Bool: return "bool";
    case Primitive::Int8: return "int8";
    case Primitive::UInt8: return "uint8";
    case Primitive::Int16: return "int16";
    case Primitive::UInt16: return "uint16";
    case Primitive::Int32: return "int32";
    case Primitive::UInt32: return "uint32";
    case Primitive::Int64: return "int64";
    case Primitive::UInt64: return "uint64";
    case Primitive::Float32: return "float32";
    case Primitive::Float64: return "float64";
    case Primitive::String: return "string";
    case Primitive::Time: return "time";
    case Primitive::Duration: return "duration";
  }
  return "?";
}

std::optional<Primitive> parse_primitive(std::string_view name) noexcept {
  static constexpr std::pair<std::string_view, Primitive> kTable[] = {
      {"bool", Primitive::Bool},       {"int8", Primitive::Int8},         {"byte", Primitive::Int8},
      {"uint8", Primitive::UInt8},     {"char", Primitive::UInt8},        {"int16", Primitive::Int16},
      {"uint16", Primitive::UInt16},   {"int32", Primitive::Int32},       {"uint32", Primitive::UInt32},
      {"int64", Primitive::Int64},     {"uint64", Primitive::UInt64},     {"float32", Primitive::Float32},
      {"float64", Primitive::Float64}, {"string", Primitive::String},     {"time", Primitive::Time},
      {"duration", Primitive::Duration},
  };
  for (const auto& [n, p] : kTable) {
    if (n == name) return p;
  }
  return std::nullopt;
}

std::size_t primitive_size(Primitive p) noexcept {
  switch (p) {
    case Primitive::Bool:
    case Primitive::Int8:
    case Primitive::UInt8: return 1;
    case Primitive::Int16:
    case Primitive::UInt16: return 2;
    case Primitive::Int32:
    case Primitive::UInt32:
    case Primitive::Float32: return 4;
    case Primitive::Int64:
    case Primitive::UInt64:
    case Primitive::Float64:
    case Primitive::Time:
    case Primitive::Duration: return 8;
    case Primitive::String: return 0;
  }
  return 0;
}

std::string FieldType::str() const {
  std::string base = is_nested() ? nested_type() : std::string(primitive_name(primitive()));
  switch (array) {
    case ArrayKind::None: return base;
    case ArrayKind::Variable: return base + "[]";
    case ArrayKind::Fixed: return fmt::format("{}[{}]", base, fixed_length);
  }
  return base;
}

const Field* MessageSchema::find(std::string_view name) const noexcept {
  for (const auto& f : fields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

SchemaSet::SchemaSet(std::string root_type, std::map<std::string, MessageSchema, std::less<>> types)
    : root_type_(std::move(root_type)), types_(std::move(types)) {}

const MessageSchema& SchemaSet::at(std::string_view type_name) const {
  if (const auto* s = find(type_name)) return *s;
  throw Error(Errc::UnresolvedNestedType, fmt::format("message type '{}' is not defined", type_name));
}

const MessageSchema* SchemaSet::find(std::string_view type_name) const noexcept {
  const auto it = types_.find(type_name);
  return it == types_.end() ? nullptr : &it->second;
}

SchemaSet parse_definition(std::string_view definition_text, std::string_view root_type) {
  // Split into blocks.
  std::vector<Block> blocks;
  blocks.push_back({std::string(root_type), {}});
  const auto lines = split_lines(definition_text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!is_separator(lines[i])) {
      blocks.back().lines.push_back(lines[i]);
      continue;
    }
    std::size_t j = i + 1;
    while (j < lines.size() && trim(lines[j]).empty()) ++j;
    const auto msg_line = j < lines.size() ? trim(lines[j]) : std::string_view{};
    if (msg_line.substr(0, 4) != "MSG:") {
      throw Error(Errc::UnknownFieldType,
                  fmt::format("separator line in definition of {} is not followed by 'MSG: <type>'", root_type));
    }
    blocks.push_back({std::string(trim(msg_line.substr(4))), {}});
    i = j;
  }

  std::set<std::string, std::less<>> declared;
  for (const auto& b : blocks) declared.insert(b.type_name);

  std::map<std::string, MessageSchema, std::less<>> types;
  std::vector<std::pair<std::string, PendingType>> pending;  // owner type, reference

  for (const auto& block : blocks) {
    MessageSchema schema{block.type_name, {}};
    const auto package = package_of(block.type_name);
    for (auto raw : block.lines) {
      auto line = trim(raw);
      if (line.empty() || line.front() == '#') continue;
      auto ws = line.find_first_of(" \t");
      if (ws == std::string_view::npos) {
        throw Error(Errc::UnknownFieldType,
                    fmt::format("malformed line '{}' in definition of {}", line, block.type_name));
      }
      const auto type_token = line.substr(0, ws);
      auto rest = trim(line.substr(ws));
      const auto eq = rest.find('=');
      const auto hash = rest.find('#');
      if (eq != std::string_view::npos && (hash == std::string_view::npos || eq < hash)) {
        continue;  // constant
      }
      if (hash != std::string_view::npos) rest = trim(rest.substr(0, hash));
      if (!is_identifier(rest)) {
        throw Error(Errc::UnknownFieldType,
                    fmt::format("malformed field name '{}' in definition of {}", rest, block.type_name));
      }
      auto parsed = parse_type_token(type_token, package, block.type_name);
      if (schema.find(rest)) {
        throw Error(Errc::DuplicateField,
                    fmt::format("duplicate field '{}' in definition of {}", rest, block.type_name));
      }
      if (parsed.type.is_nested()) pending.emplace_back(block.type_name, parsed);
      schema.fields.push_back({std::string(rest), parsed.type});
    }
    types.insert_or_assign(block.type_name, std::move(schema));
  }

  // Resolve nested references; unqualified names may also match a unique
  // block by short name when the package-relative lookup misses.
  auto resolve = [&](const PendingType& ref) -> std::string {
    const auto& full = ref.type.nested_type();
    if (types.count(full)) return full;
    if (full == kHeaderType) {
      types.insert_or_assign(std::string(kHeaderType), parse_definition(kBuiltinHeader, kHeaderType).root());
      return full;
    }
    if (!ref.qualified) {
      std::vector<std::string> candidates;
      for (const auto& [name, _] : types) {
        const auto slash = name.find('/');
        if (slash != std::string::npos && name.substr(slash + 1) == ref.written) candidates.push_back(name);
      }
      if (candidates.size() == 1) return candidates.front();
    }
    return {};
  };

  for (const auto& [owner, ref] : pending) {
    const auto resolved = resolve(ref);
    if (resolved.empty()) {
      throw Error(Errc::UnresolvedNestedType,
                  fmt::format("type '{}' used in {} has no definition (expected a 'MSG: {}' block)",
                              ref.written, owner, ref.type.nested_type()));
    }
    if (resolved != ref.type.nested_type()) {
      for (auto& f : types.at(owner).fields) {
        if (f.type.is_nested() && f.type.nested_type() == ref.type.nested_type()) f.type.element = resolved;
      }
    }
  }

  // Cycle detection (DFS with colors).
  std::map<std::string, int, std::less<>> color;
  std::function<void(const std::string&)> visit = [&](const std::string& name) {
    color[name] = 1;
    for (const auto& f : types.at(name).fields) {
      if (!f.type.is_nested()) continue;
      const auto& child = f.type.nested_type();
      const int c = color[child];
      if (c == 1) {
        throw Error(Errc::CyclicType,
                    fmt::format("message type {} contains itself through field '{}' of {}", child, f.name, name));
      }
      if (c == 0) visit(child);
    }
    color[name] = 2;
  };
  for (const auto& [name, _] : types) {
    if (color[name] == 0) visit(name);
  }

  return SchemaSet(std::string(root_type), std::move(types));
}

}  // namespace bagpilot::msg
