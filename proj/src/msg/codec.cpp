// SPDX-License-Identifier: Apache-2.0
#include "bagpilot/msg/codec.hpp"

#include <cstring>
#include <fmt/format.h>

#include "bagpilot/error.hpp"

namespace bagpilot::msg {

namespace {

// Replaces malformed UTF-8 sequences with U+FFFD. Returns true if anything
// was replaced.
bool repair_utf8(std::string& s) {
  std::string out;
  bool bad = false;
  std::size_t i = 0;
  const auto n = s.size();
  auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  while (i < n) {
    const unsigned char c = byte(i);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      len = 1;
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = len != 0 && i + len <= n;
    for (std::size_t k = 1; ok && k < len; ++k) {
      if ((byte(i + k) & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (byte(i + k) & 0x3F);
    }
    if (ok) {
      static constexpr std::uint32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
      ok = cp >= kMin[len] && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
    }
    if (ok) {
      out.append(s, i, len);
      i += len;
    } else {
      out.append("\xEF\xBF\xBD");
      bad = true;
      ++i;
    }
  }
  if (bad) s = std::move(out);
  return bad;
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> data, std::string_view type, DecodeDiagnostics* diag)
      : data_(data), type_(type), diag_(diag) {}

  template <typename T>
  T read() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string read_string() {
    const auto len = read<std::uint32_t>();
    need(len);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), len);
    pos_ += len;
    if (repair_utf8(s) && diag_) diag_->invalid_utf8 = true;
    return s;
  }

  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      throw Error(Errc::ShortPayload,
                  fmt::format("payload for {} ended after {} bytes while {} more were needed at offset {}", type_,
                              data_.size(), n, pos_));
    }
  }

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::string_view type_;
  DecodeDiagnostics* diag_;
};

Value read_primitive(Reader& r, Primitive p) {
  switch (p) {
    case Primitive::Bool: return r.read<std::uint8_t>() != 0;
    case Primitive::Int8: return static_cast<std::int64_t>(r.read<std::int8_t>());
    case Primitive::UInt8: return static_cast<std::uint64_t>(r.read<std::uint8_t>());
    case Primitive::Int16: return static_cast<std::int64_t>(r.read<std::int16_t>());
    case Primitive::UInt16: return static_cast<std::uint64_t>(r.read<std::uint16_t>());
    case Primitive::Int32: return static_cast<std::int64_t>(r.read<std::int32_t>());
    case Primitive::UInt32: return static_cast<std::uint64_t>(r.read<std::uint32_t>());
    case Primitive::Int64: return r.read<std::int64_t>();
    case Primitive::UInt64: return r.read<std::uint64_t>();
    case Primitive::Float32: return r.read<float>();
    case Primitive::Float64: return r.read<double>();
    case Primitive::String: return r.read_string();
    case Primitive::Time: {
      const auto sec = r.read<std::uint32_t>();
      return Time{sec, r.read<std::uint32_t>()};
    }
    case Primitive::Duration: {
      const auto sec = r.read<std::int32_t>();
      return Duration{sec, r.read<std::int32_t>()};
    }
  }
  return {};
}

Value read_message(const SchemaSet& schemas, const MessageSchema& schema, Reader& r);

Value read_element(const SchemaSet& schemas, const FieldType& t, Reader& r) {
  if (t.is_nested()) return read_message(schemas, schemas.at(t.nested_type()), r);
  return read_primitive(r, t.primitive());
}

Value read_message(const SchemaSet& schemas, const MessageSchema& schema, Reader& r) {
  Record rec;
  rec.reserve(schema.fields.size());
  for (const auto& f : schema.fields) {
    if (!f.type.is_array()) {
      rec.emplace_back(f.name, read_element(schemas, f.type, r));
      continue;
    }
    std::size_t count = f.type.fixed_length;
    if (f.type.array == ArrayKind::Variable) {
      count = r.read<std::uint32_t>();
      // Cheap sanity bound: every element takes at least one byte unless it is
      // an empty nested message.
      if (!f.type.is_nested()) {
        const auto width = primitive_size(f.type.primitive());
        r.need(count * (width == 0 ? 4 : width));
      }
    }
    Array arr;
    arr.reserve(count);
    for (std::size_t i = 0; i < count; ++i) arr.push_back(read_element(schemas, f.type, r));
    rec.emplace_back(f.name, std::move(arr));
  }
  return rec;
}

class Writer {
 public:
  template <typename T>
  void write(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void write_bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

[[noreturn]] void shape_error(std::string_view where, std::string_view expected) {
  throw Error(Errc::ShapeMismatch, fmt::format("value for '{}' does not fit: expected {}", where, expected));
}

template <typename Int>
Int checked_integer(const Value& v, std::string_view where) {
  if (v.is<std::int64_t>()) {
    const auto x = v.as<std::int64_t>();
    if (std::in_range<Int>(x)) return static_cast<Int>(x);
  } else if (v.is<std::uint64_t>()) {
    const auto x = v.as<std::uint64_t>();
    if (std::in_range<Int>(x)) return static_cast<Int>(x);
  } else if (v.is<bool>()) {
    return static_cast<Int>(v.as<bool>() ? 1 : 0);
  }
  shape_error(where, fmt::format("an integer in range of {}-bit {}", sizeof(Int) * 8,
                                 std::is_signed_v<Int> ? "signed" : "unsigned"));
}

template <typename Real>
Real real_value(const Value& v, std::string_view where) {
  if (v.is<float>()) return static_cast<Real>(v.as<float>());
  if (v.is<double>()) return static_cast<Real>(v.as<double>());
  if (v.is<std::int64_t>()) return static_cast<Real>(v.as<std::int64_t>());
  if (v.is<std::uint64_t>()) return static_cast<Real>(v.as<std::uint64_t>());
  shape_error(where, "a number");
}

void write_primitive(Writer& w, Primitive p, const Value& v, std::string_view where) {
  switch (p) {
    case Primitive::Bool:
      if (!v.is<bool>()) shape_error(where, "a boolean");
      w.write<std::uint8_t>(v.as<bool>() ? 1 : 0);
      return;
    case Primitive::Int8: w.write(checked_integer<std::int8_t>(v, where)); return;
    case Primitive::UInt8: w.write(checked_integer<std::uint8_t>(v, where)); return;
    case Primitive::Int16: w.write(checked_integer<std::int16_t>(v, where)); return;
    case Primitive::UInt16: w.write(checked_integer<std::uint16_t>(v, where)); return;
    case Primitive::Int32: w.write(checked_integer<std::int32_t>(v, where)); return;
    case Primitive::UInt32: w.write(checked_integer<std::uint32_t>(v, where)); return;
    case Primitive::Int64: w.write(checked_integer<std::int64_t>(v, where)); return;
    case Primitive::UInt64: w.write(checked_integer<std::uint64_t>(v, where)); return;
    case Primitive::Float32: w.write(real_value<float>(v, where)); return;
    case Primitive::Float64: w.write(real_value<double>(v, where)); return;
    case Primitive::String: {
      if (!v.is<std::string>()) shape_error(where, "a string");
      const auto& s = v.as<std::string>();
      w.write(static_cast<std::uint32_t>(s.size()));
      w.write_bytes(s);
      return;
    }
    case Primitive::Time:
      if (!v.is<Time>()) shape_error(where, "a time");
      w.write(v.as<Time>().sec);
      w.write(v.as<Time>().nsec);
      return;
    case Primitive::Duration:
      if (!v.is<Duration>()) shape_error(where, "a duration");
      w.write(v.as<Duration>().sec);
      w.write(v.as<Duration>().nsec);
      return;
  }
}

void write_message(const SchemaSet& schemas, const MessageSchema& schema, const Value& v, Writer& w,
                   const std::string& where);

void write_element(const SchemaSet& schemas, const FieldType& t, const Value& v, Writer& w, const std::string& where) {
  if (t.is_nested()) {
    write_message(schemas, schemas.at(t.nested_type()), v, w, where);
  } else {
    write_primitive(w, t.primitive(), v, where);
  }
}

void write_message(const SchemaSet& schemas, const MessageSchema& schema, const Value& v, Writer& w,
                   const std::string& where) {
  if (!v.is_record()) shape_error(where, fmt::format("a {} record", schema.type_name));
  const auto& rec = v.as<Record>();
  if (rec.size() != schema.fields.size()) {
    shape_error(where, fmt::format("{} fields for {}, got {}", schema.fields.size(), schema.type_name, rec.size()));
  }
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const auto& f = schema.fields[i];
    const auto& [name, child] = rec[i];
    const auto child_where = where.empty() ? f.name : where + "." + f.name;
    if (name != f.name) shape_error(child_where, fmt::format("field '{}' at position {}, found '{}'", f.name, i, name));
    if (!f.type.is_array()) {
      write_element(schemas, f.type, child, w, child_where);
      continue;
    }
    if (!child.is_array()) shape_error(child_where, "an array");
    const auto& arr = child.as<Array>();
    if (f.type.array == ArrayKind::Fixed) {
      if (arr.size() != f.type.fixed_length) {
        shape_error(child_where, fmt::format("exactly {} elements, got {}", f.type.fixed_length, arr.size()));
      }
    } else {
      w.write(static_cast<std::uint32_t>(arr.size()));
    }
    for (const auto& e : arr) write_element(schemas, f.type, e, w, child_where);
  }
}

}  // namespace

Value decode(const SchemaSet& schemas, std::string_view type_name, std::span<const std::uint8_t> payload,
             DecodeDiagnostics* diagnostics) {
  Reader r(payload, type_name, diagnostics);
  auto value = read_message(schemas, schemas.at(type_name), r);
  if (r.remaining() != 0) {
    throw Error(Errc::TrailingBytes, fmt::format("payload for {} has {} unread bytes after offset {}", type_name,
                                                 r.remaining(), r.position()));
  }
  return value;
}

std::vector<std::uint8_t> encode(const SchemaSet& schemas, std::string_view type_name, const Value& value) {
  Writer w;
  write_message(schemas, schemas.at(type_name), value, w, "");
  return w.take();
}

}  // namespace bagpilot::msg
