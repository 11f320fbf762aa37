// SPDX-License-Identifier: Apache-2.0
#include "record.hpp"

#include <fmt/format.h>

#include "bagpilot/error.hpp"

namespace bagpilot::bag::detail {

namespace {

[[noreturn]] void corrupt(std::string_view context, std::string_view what) {
  throw Error(Errc::CorruptRecord, fmt::format("{}: {}", context, what));
}

}  // namespace

const Bytes& FieldList::require(std::string_view name, std::string_view context) const {
  if (const auto* v = find(name)) return *v;
  corrupt(context, fmt::format("missing mandatory header field '{}'", name));
}

std::uint8_t FieldList::u8(std::string_view name, std::string_view context) const {
  const auto& v = require(name, context);
  if (v.size() != 1) corrupt(context, fmt::format("field '{}' should be 1 byte, is {}", name, v.size()));
  return v[0];
}

std::uint32_t FieldList::u32(std::string_view name, std::string_view context) const {
  const auto& v = require(name, context);
  if (v.size() != 4) corrupt(context, fmt::format("field '{}' should be 4 bytes, is {}", name, v.size()));
  return load_le<std::uint32_t>(v.data());
}

std::uint64_t FieldList::u64(std::string_view name, std::string_view context) const {
  const auto& v = require(name, context);
  if (v.size() != 8) corrupt(context, fmt::format("field '{}' should be 8 bytes, is {}", name, v.size()));
  return load_le<std::uint64_t>(v.data());
}

TimeNs FieldList::time(std::string_view name, std::string_view context) const {
  const auto& v = require(name, context);
  if (v.size() != 8) corrupt(context, fmt::format("time field '{}' should be 8 bytes, is {}", name, v.size()));
  return decode_time(v);
}

std::string FieldList::str(std::string_view name, std::string_view context) const {
  const auto& v = require(name, context);
  return {reinterpret_cast<const char*>(v.data()), v.size()};
}

TimeNs decode_time(Bytes b) {
  const auto sec = load_le<std::uint32_t>(b.data());
  const auto nsec = load_le<std::uint32_t>(b.data() + 4);
  return static_cast<TimeNs>(sec) * kNsPerSec + nsec;
}

FieldList parse_fields(Bytes header, std::string_view context) {
  FieldList out;
  std::size_t i = 0;
  while (i < header.size()) {
    if (header.size() - i < 4) corrupt(context, "header field length prefix is cut short");
    const auto len = load_le<std::uint32_t>(header.data() + i);
    i += 4;
    if (header.size() - i < len) corrupt(context, "header field extends past the header");
    const auto* begin = header.data() + i;
    const auto* eq = static_cast<const std::uint8_t*>(std::memchr(begin, '=', len));
    if (!eq) corrupt(context, "header field has no '=' separator");
    const auto name_len = static_cast<std::size_t>(eq - begin);
    out.fields.emplace_back(std::string_view(reinterpret_cast<const char*>(begin), name_len),
                            Bytes(eq + 1, len - name_len - 1));
    i += len;
  }
  return out;
}

Op Record::op() const { return static_cast<Op>(header.u8("op", "record")); }

Record parse_record(Bytes buf, std::uint64_t pos, std::string_view context) {
  auto truncated = [&](std::string_view what) {
    throw Error(Errc::Truncated,
                fmt::format("{}: record at byte {} extends past end of file ({} bytes): {}", context, pos,
                            buf.size(), what));
  };
  if (pos > buf.size() || buf.size() - pos < 4) truncated("header length");
  const auto hlen = load_le<std::uint32_t>(buf.data() + pos);
  std::uint64_t p = pos + 4;
  if (buf.size() - p < hlen) truncated("header");
  Record r;
  r.pos = pos;
  r.header = parse_fields(buf.subspan(p, hlen), context);
  p += hlen;
  if (buf.size() - p < 4) truncated("data length");
  const auto dlen = load_le<std::uint32_t>(buf.data() + p);
  p += 4;
  if (buf.size() - p < dlen) truncated("data");
  r.data = buf.subspan(p, dlen);
  r.data_pos = p;
  r.end = p + dlen;
  return r;
}

Bytes record_data(Bytes buf, std::uint64_t pos, std::string_view context) {
  auto truncated = [&] {
    throw Error(Errc::Truncated, fmt::format("{}: record at byte {} extends past end of data", context, pos));
  };
  if (pos > buf.size() || buf.size() - pos < 4) truncated();
  const auto hlen = load_le<std::uint32_t>(buf.data() + pos);
  std::uint64_t p = pos + 4;
  if (buf.size() - p < static_cast<std::uint64_t>(hlen) + 4) truncated();
  p += hlen;
  const auto dlen = load_le<std::uint32_t>(buf.data() + p);
  p += 4;
  if (buf.size() - p < dlen) truncated();
  return buf.subspan(p, dlen);
}

void check_compression(const Record& chunk) {
  const auto compression = chunk.header.str("compression", "chunk record");
  if (compression != "none") {
    throw Error(Errc::UnsupportedCompression,
                fmt::format("chunk at byte {} uses '{}' compression; only uncompressed ('none') chunks are "
                            "supported. Decompress the bag first (e.g. `rosbag decompress`).",
                            chunk.pos, compression));
  }
  const auto size = chunk.header.u32("size", "chunk record");
  if (size != chunk.data.size()) {
    throw Error(Errc::CorruptRecord, fmt::format("chunk at byte {} declares {} bytes but holds {}", chunk.pos, size,
                                                 chunk.data.size()));
  }
}

ConnectionRecord parse_connection(const Record& rec) {
  constexpr std::string_view ctx = "connection record";
  ConnectionRecord c;
  c.conn_id = rec.header.u32("conn", ctx);
  c.topic = rec.header.str("topic", ctx);
  const auto body = parse_fields(rec.data, "connection data");
  if (c.topic.empty() && body.find("topic")) c.topic = body.str("topic", ctx);
  c.type_name = body.str("type", "connection data");
  c.md5sum = body.str("md5sum", "connection data");
  c.message_definition = body.str("message_definition", "connection data");
  if (body.find("callerid")) c.callerid = body.str("callerid", ctx);
  if (body.find("latching")) c.latching = body.str("latching", ctx) == "1";
  return c;
}

HeaderBuilder& HeaderBuilder::bytes(std::string_view name, std::span<const std::uint8_t> value) {
  append_u32(out_, static_cast<std::uint32_t>(name.size() + 1 + value.size()));
  out_.insert(out_.end(), name.begin(), name.end());
  out_.push_back('=');
  out_.insert(out_.end(), value.begin(), value.end());
  return *this;
}

HeaderBuilder& HeaderBuilder::op(Op op) {
  const auto b = static_cast<std::uint8_t>(op);
  return bytes("op", std::span(&b, 1));
}

HeaderBuilder& HeaderBuilder::str(std::string_view name, std::string_view value) {
  return bytes(name, std::span(reinterpret_cast<const std::uint8_t*>(value.data()), value.size()));
}

HeaderBuilder& HeaderBuilder::u32(std::string_view name, std::uint32_t value) {
  return bytes(name, std::span(reinterpret_cast<const std::uint8_t*>(&value), sizeof value));
}

HeaderBuilder& HeaderBuilder::u64(std::string_view name, std::uint64_t value) {
  return bytes(name, std::span(reinterpret_cast<const std::uint8_t*>(&value), sizeof value));
}

HeaderBuilder& HeaderBuilder::time(std::string_view name, TimeNs value) {
  std::vector<std::uint8_t> b;
  append_time(b, value);
  return bytes(name, b);
}

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + 4);
}

void append_time(std::vector<std::uint8_t>& out, TimeNs t) {
  if (t < 0 || t / kNsPerSec > 0xFFFFFFFFLL) {
    throw Error(Errc::InvalidArgument, fmt::format("timestamp {} ns cannot be stored as a ROS time", t));
  }
  append_u32(out, static_cast<std::uint32_t>(t / kNsPerSec));
  append_u32(out, static_cast<std::uint32_t>(t % kNsPerSec));
}

void append_record(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> header,
                   std::span<const std::uint8_t> data) {
  append_u32(out, static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  append_u32(out, static_cast<std::uint32_t>(data.size()));
  out.insert(out.end(), data.begin(), data.end());
}

std::vector<std::uint8_t> connection_record(const ConnectionRecord& c) {
  HeaderBuilder body;
  body.str("topic", c.topic).str("type", c.type_name).str("md5sum", c.md5sum);
  body.str("message_definition", c.message_definition);
  if (c.callerid) body.str("callerid", *c.callerid);
  if (c.latching) body.str("latching", *c.latching ? "1" : "0");
  HeaderBuilder head;
  head.op(Op::Connection).u32("conn", c.conn_id).str("topic", c.topic);
  std::vector<std::uint8_t> out;
  append_record(out, head.data(), body.data());
  return out;
}

}  // namespace bagpilot::bag::detail
