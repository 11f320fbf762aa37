// SPDX-License-Identifier: Apache-2.0
// Record-level helpers for the ROS1 bag v2.0 grammar. Private to the bag module.
#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bagpilot/bag/format.hpp"

namespace bagpilot::bag::detail {

using Bytes = std::span<const std::uint8_t>;

template <typename T>
T load_le(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

struct FieldList {
  std::vector<std::pair<std::string_view, Bytes>> fields;

  const Bytes* find(std::string_view name) const noexcept {
    for (const auto& [k, v] : fields) {
      if (k == name) return &v;
    }
    return nullptr;
  }
  const Bytes& require(std::string_view name, std::string_view context) const;
  std::uint8_t u8(std::string_view name, std::string_view context) const;
  std::uint32_t u32(std::string_view name, std::string_view context) const;
  std::uint64_t u64(std::string_view name, std::string_view context) const;
  TimeNs time(std::string_view name, std::string_view context) const;
  std::string str(std::string_view name, std::string_view context) const;
};

/// Parses `name=value` fields from a header block. Throws CorruptRecord.
FieldList parse_fields(Bytes header, std::string_view context);

struct Record {
  std::uint64_t pos = 0;
  std::uint64_t end = 0;  // one past the record
  FieldList header;
  Bytes data;
  std::uint64_t data_pos = 0;

  Op op() const;
};

/// Parses the record starting at `pos` of `buf`. Throws Truncated when the
/// record extends past the buffer, CorruptRecord for malformed headers.
Record parse_record(Bytes buf, std::uint64_t pos, std::string_view context);

/// Returns the data span of the record at `pos` without parsing its fields.
Bytes record_data(Bytes buf, std::uint64_t pos, std::string_view context);

void check_compression(const Record& chunk);

ConnectionRecord parse_connection(const Record& rec);

TimeNs decode_time(Bytes eight_bytes);

class HeaderBuilder {
 public:
  HeaderBuilder& op(Op op);
  HeaderBuilder& bytes(std::string_view name, std::span<const std::uint8_t> value);
  HeaderBuilder& str(std::string_view name, std::string_view value);
  HeaderBuilder& u32(std::string_view name, std::uint32_t value);
  HeaderBuilder& u64(std::string_view name, std::uint64_t value);
  HeaderBuilder& time(std::string_view name, TimeNs value);
  const std::vector<std::uint8_t>& data() const noexcept { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void append_time(std::vector<std::uint8_t>& out, TimeNs t);
/// Appends header_len, header, data_len, data.
void append_record(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> header,
                   std::span<const std::uint8_t> data);
std::vector<std::uint8_t> connection_record(const ConnectionRecord& c);

}  // namespace bagpilot::bag::detail
