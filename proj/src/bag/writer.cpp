// SPDX-License-Identifier: Apache-2.0
#include <fmt/format.h>

#include <fstream>
#include <map>
#include <set>

#include "bagpilot/bag/format.hpp"
#include "bagpilot/error.hpp"
#include "record.hpp"

namespace bagpilot::bag {

using detail::append_record;
using detail::append_time;
using detail::append_u32;
using detail::HeaderBuilder;

namespace {

std::vector<std::uint8_t> bag_header_record(std::uint64_t index_pos, std::uint32_t conn_count,
                                            std::uint32_t chunk_count) {
  HeaderBuilder h;
  h.op(Op::BagHeader).u64("index_pos", index_pos).u32("conn_count", conn_count).u32("chunk_count", chunk_count);
  const auto used = 4 + h.data().size() + 4;
  std::vector<std::uint8_t> padding(kBagHeaderRecordSize - used, ' ');
  std::vector<std::uint8_t> out;
  append_record(out, h.data(), padding);
  return out;
}

// op + conn + time fields plus the two length prefixes.
constexpr std::size_t kMessageRecordOverhead = 4 + (4 + 4) + (4 + 5 + 4) + (4 + 5 + 8) + 4;

}  // namespace

struct BagWriter::Impl {
  std::filesystem::path path;
  WriterOptions options;
  std::ofstream out;
  std::map<std::uint32_t, ConnectionRecord> connections;
  std::set<std::uint32_t> emitted;  // connection record already placed in a chunk

  std::vector<std::uint8_t> chunk;
  std::map<std::uint32_t, std::vector<std::pair<TimeNs, std::uint32_t>>> chunk_index;
  TimeNs chunk_start = 0;
  TimeNs chunk_end = 0;

  std::vector<ChunkInfo> infos;
  std::optional<TimeNs> last_time;
  WrittenBagStats stats;
  bool closed = false;

  void put(std::span<const std::uint8_t> bytes) {
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::IoFailure, fmt::format("write to '{}' failed", path.string()));
  }

  std::uint64_t position() { return static_cast<std::uint64_t>(out.tellp()); }

  void flush_chunk() {
    if (chunk_index.empty()) return;
    ChunkInfo info;
    info.chunk_pos = position();
    info.start_ns = chunk_start;
    info.end_ns = chunk_end;

    HeaderBuilder h;
    h.op(Op::Chunk).str("compression", "none").u32("size", static_cast<std::uint32_t>(chunk.size()));
    std::vector<std::uint8_t> rec;
    append_record(rec, h.data(), chunk);
    for (const auto& [conn, entries] : chunk_index) {
      HeaderBuilder ih;
      ih.op(Op::IndexData).u32("ver", 1).u32("conn", conn).u32("count", static_cast<std::uint32_t>(entries.size()));
      std::vector<std::uint8_t> data;
      data.reserve(entries.size() * 12);
      for (const auto& [t, offset] : entries) {
        append_time(data, t);
        append_u32(data, offset);
      }
      append_record(rec, ih.data(), data);
      info.counts[conn] = static_cast<std::uint32_t>(entries.size());
    }
    put(rec);
    infos.push_back(std::move(info));
    chunk.clear();
    chunk_index.clear();
  }
};

BagWriter::BagWriter(const std::filesystem::path& path, WriterOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->path = path;
  impl_->options = options;
  impl_->out.open(path, std::ios::binary | std::ios::trunc);
  if (!impl_->out) throw Error(Errc::IoFailure, fmt::format("cannot create '{}'", path.string()));
  impl_->put(std::span(reinterpret_cast<const std::uint8_t*>(kMagic.data()), kMagic.size()));
  impl_->put(bag_header_record(0, 0, 0));
}

BagWriter::~BagWriter() {
  if (impl_ && !impl_->closed) {
    try {
      close();
    } catch (...) {
    }
  }
}

void BagWriter::add_connection(const ConnectionRecord& connection) {
  if (impl_->closed) throw Error(Errc::InvalidArgument, "writer is closed");
  if (connection.topic.empty() || connection.topic.front() != '/') {
    throw Error(Errc::InvalidArgument, fmt::format("topic '{}' must begin with '/'", connection.topic));
  }
  const auto [it, inserted] = impl_->connections.emplace(connection.conn_id, connection);
  if (!inserted && it->second != connection) {
    throw Error(Errc::InvalidArgument,
                fmt::format("connection id {} registered twice with different contents", connection.conn_id));
  }
}

bool BagWriter::has_connection(std::uint32_t conn_id) const noexcept { return impl_->connections.count(conn_id) > 0; }

void BagWriter::write(std::uint32_t conn_id, TimeNs time_ns, std::span<const std::uint8_t> payload) {
  auto& s = *impl_;
  if (s.closed) throw Error(Errc::InvalidArgument, "writer is closed");
  const auto conn = s.connections.find(conn_id);
  if (conn == s.connections.end()) {
    throw Error(Errc::UnknownConnection, fmt::format("message references unregistered connection {}", conn_id));
  }
  if (s.last_time && time_ns < *s.last_time) {
    throw Error(Errc::UnsortedInput,
                fmt::format("message at {} ns precedes the previous message at {} ns", time_ns, *s.last_time));
  }

  std::vector<std::uint8_t> conn_rec;
  if (!s.emitted.count(conn_id)) conn_rec = detail::connection_record(conn->second);
  const auto need = conn_rec.size() + kMessageRecordOverhead + payload.size();
  if (!s.chunk.empty() && s.chunk.size() + need > s.options.chunk_size) {
    s.flush_chunk();
  }

  if (!conn_rec.empty()) {
    s.chunk.insert(s.chunk.end(), conn_rec.begin(), conn_rec.end());
    s.emitted.insert(conn_id);
  }
  const auto offset = static_cast<std::uint32_t>(s.chunk.size());
  HeaderBuilder h;
  h.op(Op::MessageData).u32("conn", conn_id).time("time", time_ns);
  append_record(s.chunk, h.data(), payload);

  if (s.chunk_index.empty()) s.chunk_start = time_ns;
  s.chunk_end = time_ns;
  s.chunk_index[conn_id].emplace_back(time_ns, offset);
  s.last_time = time_ns;
  ++s.stats.message_count;
}

WrittenBagStats BagWriter::close() {
  auto& s = *impl_;
  if (s.closed) return s.stats;
  s.flush_chunk();
  const auto index_pos = s.position();
  std::vector<std::uint8_t> tail;
  for (const auto& [_, c] : s.connections) {
    const auto rec = detail::connection_record(c);
    tail.insert(tail.end(), rec.begin(), rec.end());
  }
  for (const auto& info : s.infos) {
    HeaderBuilder h;
    h.op(Op::ChunkInfo)
        .u32("ver", 1)
        .u64("chunk_pos", info.chunk_pos)
        .time("start_time", info.start_ns)
        .time("end_time", info.end_ns)
        .u32("count", static_cast<std::uint32_t>(info.counts.size()));
    std::vector<std::uint8_t> data;
    for (const auto& [conn, count] : info.counts) {
      append_u32(data, conn);
      append_u32(data, count);
    }
    append_record(tail, h.data(), data);
  }
  s.put(tail);
  s.stats.file_size = s.position();
  s.stats.chunk_count = static_cast<std::uint32_t>(s.infos.size());

  s.out.seekp(static_cast<std::streamoff>(kMagic.size()));
  s.put(bag_header_record(index_pos, static_cast<std::uint32_t>(s.connections.size()), s.stats.chunk_count));
  s.out.close();
  if (!s.out) throw Error(Errc::IoFailure, fmt::format("closing '{}' failed", s.path.string()));
  s.closed = true;
  return s.stats;
}

WrittenBagStats write_bag(const std::filesystem::path& path, std::span<const ConnectionRecord> connections,
                          std::span<const RawMessage> messages, WriterOptions options) {
  for (std::size_t i = 1; i < messages.size(); ++i) {
    if (messages[i].time_ns < messages[i - 1].time_ns) {
      throw Error(Errc::UnsortedInput, fmt::format("message {} is earlier than message {}", i, i - 1));
    }
  }
  BagWriter writer(path, options);
  for (const auto& c : connections) writer.add_connection(c);
  for (const auto& m : messages) writer.write(m);
  return writer.close();
}

}  // namespace bagpilot::bag
