// SPDX-License-Identifier: Apache-2.0
#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fmt/format.h>

#include "bagpilot/bag/format.hpp"
#include "bagpilot/error.hpp"
#include "record.hpp"
#include "storage.hpp"

namespace bagpilot::bag {

using detail::Bytes;
using detail::parse_record;
using detail::Record;

MappedFile::MappedFile(const std::filesystem::path& path) {
  const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) {
    throw Error(Errc::IoFailure, fmt::format("cannot open '{}': {}", path.string(), std::strerror(errno)));
  }
  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    const int err = errno;
    ::close(fd);
    throw Error(Errc::IoFailure, fmt::format("cannot stat '{}': {}", path.string(), std::strerror(err)));
  }
  size_ = static_cast<std::size_t>(st.st_size);
  if (size_ > 0) {
    void* p = ::mmap(nullptr, size_, PROT_READ, MAP_PRIVATE, fd, 0);
    if (p == MAP_FAILED) {
      const int err = errno;
      ::close(fd);
      throw Error(Errc::IoFailure, fmt::format("cannot map '{}': {}", path.string(), std::strerror(err)));
    }
    data_ = static_cast<const std::uint8_t*>(p);
  }
  ::close(fd);
}

MappedFile::~MappedFile() {
  if (data_) ::munmap(const_cast<std::uint8_t*>(data_), size_);
}

std::span<const std::uint8_t> Ros1Storage::payload(const MessageLocator& locator) const {
  const auto it = chunk_data_.find(locator.chunk_pos);
  if (it == chunk_data_.end()) {
    throw Error(Errc::CorruptRecord, fmt::format("no chunk at byte {}", locator.chunk_pos));
  }
  const auto chunk = bytes().subspan(it->second.first, it->second.second);
  return detail::record_data(chunk, locator.offset, "message data");
}

std::uint64_t BagIndex::total_messages() const noexcept {
  std::uint64_t n = 0;
  for (const auto& c : chunks) {
    for (const auto& [_, count] : c.counts) n += count;
  }
  return n;
}

class Ros1Loader {
 public:
  Ros1Loader(BagHandle& handle, const OpenOptions& options) : h_(handle), options_(options) {}

  void load() {
    auto storage = std::make_unique<Ros1Storage>(h_.path_);
    storage_ = storage.get();
    h_.storage_ = std::move(storage);
    buf_ = storage_->bytes();
    if (buf_.size() < kMagic.size() || std::memcmp(buf_.data(), kMagic.data(), kMagic.size()) != 0) {
      throw Error(Errc::NotABag, fmt::format("'{}' is not a ROS bag v2.0 file (missing '#ROSBAG V2.0' magic)",
                                             h_.path_.string()));
    }
    const auto header = parse_record(buf_, kMagic.size(), "bag header");
    if (header.op() != Op::BagHeader) {
      throw Error(Errc::CorruptRecord, "first record after the magic is not a bag header (op=0x03)");
    }
    h_.header_.index_pos = header.header.u64("index_pos", "bag header");
    h_.header_.conn_count = header.header.u32("conn_count", "bag header");
    h_.header_.chunk_count = header.header.u32("chunk_count", "bag header");
    h_.header_.file_size = buf_.size();
    records_start_ = header.end;

    bool indexed = false;
    if (!options_.force_scan && h_.header_.index_pos != 0) {
      try {
        read_indexed();
        indexed = true;
      } catch (const Error& e) {
        if (e.code() == Errc::UnsupportedCompression) throw;
      }
    }
    if (!indexed) {
      reset();
      scan();
      h_.reindexed_ = true;
      h_.header_.conn_count = static_cast<std::uint32_t>(h_.connections_.size());
      h_.header_.chunk_count = static_cast<std::uint32_t>(h_.index_.chunks.size());
    }
    h_.finish_index();
  }

 private:
  void reset() {
    h_.connections_.clear();
    h_.index_ = {};
  }

  void add_connection(ConnectionRecord c) {
    for (const auto& existing : h_.connections_) {
      if (existing.conn_id == c.conn_id) return;
    }
    h_.connections_.push_back(std::move(c));
  }

  void read_indexed() {
    const auto index_pos = h_.header_.index_pos;
    if (index_pos < records_start_ || index_pos > buf_.size()) {
      throw Error(Errc::CorruptRecord, "index_pos points outside the record area");
    }
    std::uint64_t pos = index_pos;
    while (pos < buf_.size()) {
      const auto rec = parse_record(buf_, pos, "index section");
      switch (rec.op()) {
        case Op::Connection:
          add_connection(detail::parse_connection(rec));
          break;
        case Op::ChunkInfo: {
          constexpr std::string_view ctx = "chunk info record";
          if (rec.header.u32("ver", ctx) != 1) throw Error(Errc::CorruptRecord, "unsupported chunk info version");
          ChunkInfo info;
          info.chunk_pos = rec.header.u64("chunk_pos", ctx);
          info.start_ns = rec.header.time("start_time", ctx);
          info.end_ns = rec.header.time("end_time", ctx);
          const auto count = rec.header.u32("count", ctx);
          if (rec.data.size() != static_cast<std::size_t>(count) * 8) {
            throw Error(Errc::CorruptRecord, "chunk info data size does not match its count");
          }
          for (std::uint32_t i = 0; i < count; ++i) {
            info.counts[detail::load_le<std::uint32_t>(rec.data.data() + 8 * i)] =
                detail::load_le<std::uint32_t>(rec.data.data() + 8 * i + 4);
          }
          h_.index_.chunks.push_back(std::move(info));
          break;
        }
        default:
          throw Error(Errc::CorruptRecord, fmt::format("unexpected record in index section at byte {}", pos));
      }
      pos = rec.end;
    }
    if (h_.connections_.size() != h_.header_.conn_count || h_.index_.chunks.size() != h_.header_.chunk_count) {
      throw Error(Errc::CorruptRecord, "index section counts disagree with the bag header");
    }

    for (const auto& info : h_.index_.chunks) {
      const auto chunk = parse_record(buf_, info.chunk_pos, "chunk record");
      if (chunk.op() != Op::Chunk) throw Error(Errc::CorruptRecord, "chunk_pos does not point at a chunk");
      detail::check_compression(chunk);
      storage_->set_chunk_data(info.chunk_pos, chunk.data_pos, chunk.data.size());
      std::map<std::uint32_t, std::uint32_t> seen;
      std::uint64_t p = chunk.end;
      while (p < index_pos) {
        const auto rec = parse_record(buf_, p, "index data record");
        if (rec.op() != Op::IndexData) break;
        constexpr std::string_view ctx = "index data record";
        if (rec.header.u32("ver", ctx) != 1) throw Error(Errc::CorruptRecord, "unsupported index data version");
        const auto conn = rec.header.u32("conn", ctx);
        const auto count = rec.header.u32("count", ctx);
        if (rec.data.size() != static_cast<std::size_t>(count) * 12) {
          throw Error(Errc::CorruptRecord, "index data size does not match its count");
        }
        auto& list = h_.index_.by_connection[conn];
        for (std::uint32_t i = 0; i < count; ++i) {
          const auto* e = rec.data.data() + 12 * i;
          const auto offset = detail::load_le<std::uint32_t>(e + 8);
          if (offset >= chunk.data.size()) throw Error(Errc::CorruptRecord, "index offset outside its chunk");
          list.push_back({detail::decode_time(Bytes(e, 8)), info.chunk_pos, offset});
        }
        seen[conn] += count;
        p = rec.end;
      }
      if (seen != info.counts) throw Error(Errc::CorruptRecord, "index data disagrees with chunk info counts");
    }
    for (const auto& [conn, _] : h_.index_.by_connection) {
      if (std::none_of(h_.connections_.begin(), h_.connections_.end(),
                       [&](const auto& c) { return c.conn_id == conn; })) {
        throw Error(Errc::CorruptRecord, fmt::format("index references unknown connection {}", conn));
      }
    }
  }

  void scan() {
    std::uint64_t pos = records_start_;
    while (pos < buf_.size()) {
      const auto rec = parse_record(buf_, pos, "record");
      const auto op = rec.op();
      if (op == Op::Connection) {
        add_connection(detail::parse_connection(rec));
      } else if (op == Op::Chunk) {
        detail::check_compression(rec);
        storage_->set_chunk_data(rec.pos, rec.data_pos, rec.data.size());
        ChunkInfo info;
        info.chunk_pos = rec.pos;
        bool first = true;
        std::uint64_t q = 0;
        while (q < rec.data.size()) {
          const auto inner = parse_record(rec.data, q, "chunk contents");
          const auto inner_op = inner.op();
          if (inner_op == Op::Connection) {
            add_connection(detail::parse_connection(inner));
          } else if (inner_op == Op::MessageData) {
            const auto conn = inner.header.u32("conn", "message data record");
            const auto t = inner.header.time("time", "message data record");
            h_.index_.by_connection[conn].push_back({t, rec.pos, static_cast<std::uint32_t>(q)});
            ++info.counts[conn];
            info.start_ns = first ? t : std::min(info.start_ns, t);
            info.end_ns = first ? t : std::max(info.end_ns, t);
            first = false;
          }
          q = inner.end;
        }
        if (!info.counts.empty()) h_.index_.chunks.push_back(std::move(info));
      }
      pos = rec.end;
    }
    for (const auto& [conn, _] : h_.index_.by_connection) {
      if (std::none_of(h_.connections_.begin(), h_.connections_.end(),
                       [&](const auto& c) { return c.conn_id == conn; })) {
        throw Error(Errc::CorruptRecord, fmt::format("message references connection {} with no record", conn));
      }
    }
  }

  BagHandle& h_;
  OpenOptions options_;
  Ros1Storage* storage_ = nullptr;
  Bytes buf_;
  std::uint64_t records_start_ = 0;
};

// Defined in jsonl.cpp.
void load_jsonl(BagHandle& handle, std::unique_ptr<Storage>& storage, std::vector<ConnectionRecord>& connections,
                BagIndex& index);

class JsonlLoader {
 public:
  static void load(BagHandle& h) {
    load_jsonl(h, h.storage_, h.connections_, h.index_);
    h.header_.conn_count = static_cast<std::uint32_t>(h.connections_.size());
    h.header_.chunk_count = static_cast<std::uint32_t>(h.index_.chunks.size());
    h.header_.file_size = std::filesystem::file_size(h.path_);
    h.finish_index();
  }
};

BagHandle::~BagHandle() = default;

std::shared_ptr<const BagHandle> BagHandle::open(const std::filesystem::path& path, const OpenOptions& options) {
  std::shared_ptr<BagHandle> h(new BagHandle());
  h->path_ = path;
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(Errc::IoFailure, fmt::format("'{}' is not a readable file", path.string()));
  }
  if (path.extension() == ".jsonl") {
    h->format_ = StorageFormat::Jsonl;
    JsonlLoader::load(*h);
  } else {
    Ros1Loader(*h, options).load();
  }
  return h;
}

void BagHandle::finish_index() {
  std::sort(connections_.begin(), connections_.end(),
            [](const auto& a, const auto& b) { return a.conn_id < b.conn_id; });
  for (auto& [_, list] : index_.by_connection) std::sort(list.begin(), list.end());
  std::sort(index_.chunks.begin(), index_.chunks.end(),
            [](const auto& a, const auto& b) { return a.chunk_pos < b.chunk_pos; });
  start_ns_.reset();
  end_ns_.reset();
  for (const auto& [_, list] : index_.by_connection) {
    if (list.empty()) continue;
    start_ns_ = start_ns_ ? std::min(*start_ns_, list.front().time_ns) : list.front().time_ns;
    end_ns_ = end_ns_ ? std::max(*end_ns_, list.back().time_ns) : list.back().time_ns;
  }
}

const ConnectionRecord* BagHandle::connection(std::uint32_t conn_id) const noexcept {
  const auto it = std::lower_bound(connections_.begin(), connections_.end(), conn_id,
                                   [](const auto& c, std::uint32_t id) { return c.conn_id < id; });
  return it != connections_.end() && it->conn_id == conn_id ? &*it : nullptr;
}

std::vector<const ConnectionRecord*> BagHandle::connections_for_topic(std::string_view topic) const {
  std::vector<const ConnectionRecord*> out;
  for (const auto& c : connections_) {
    if (c.topic == topic) out.push_back(&c);
  }
  return out;
}

std::vector<std::string> BagHandle::topics() const {
  std::vector<std::string> out;
  for (const auto& c : connections_) out.push_back(c.topic);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::uint64_t BagHandle::message_count(std::string_view topic) const {
  std::uint64_t n = 0;
  for (const auto* c : connections_for_topic(topic)) {
    if (const auto it = index_.by_connection.find(c->conn_id); it != index_.by_connection.end()) {
      n += it->second.size();
    }
  }
  return n;
}

void BagHandle::for_each(const MessageQuery& query, const std::function<bool(const MessageView&)>& visit) const {
  if (query.start_ns && query.end_ns && *query.start_ns > *query.end_ns) return;
  std::vector<std::pair<MessageLocator, const ConnectionRecord*>> selected;
  for (const auto& c : connections_) {
    if (query.topics && !query.topics->count(c.topic)) continue;
    const auto it = index_.by_connection.find(c.conn_id);
    if (it == index_.by_connection.end()) continue;
    const auto& list = it->second;
    auto first = list.begin();
    auto last = list.end();
    if (query.start_ns) {
      first = std::lower_bound(list.begin(), list.end(), *query.start_ns,
                               [](const MessageLocator& l, TimeNs t) { return l.time_ns < t; });
    }
    if (query.end_ns) {
      last = std::upper_bound(first, list.end(), *query.end_ns,
                              [](TimeNs t, const MessageLocator& l) { return t < l.time_ns; });
    }
    for (auto i = first; i != last; ++i) selected.emplace_back(*i, &c);
  }
  std::sort(selected.begin(), selected.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [loc, conn] : selected) {
    if (!visit(MessageView{conn, loc.time_ns, storage_->payload(loc)})) return;
  }
}

std::vector<RawMessage> BagHandle::stream_messages(const MessageQuery& query) const {
  std::vector<RawMessage> out;
  for_each(query, [&](const MessageView& m) {
    out.push_back(m.to_raw());
    return true;
  });
  return out;
}

std::vector<std::pair<MessageLocator, const ConnectionRecord*>> BagHandle::locators(std::string_view topic) const {
  std::vector<std::pair<MessageLocator, const ConnectionRecord*>> out;
  for (const auto* c : connections_for_topic(topic)) {
    const auto it = index_.by_connection.find(c->conn_id);
    if (it == index_.by_connection.end()) continue;
    for (const auto& l : it->second) out.emplace_back(l, c);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

MessageView BagHandle::read(const MessageLocator& locator, const ConnectionRecord& connection) const {
  return MessageView{&connection, locator.time_ns, storage_->payload(locator)};
}

std::vector<RawMessage> linear_scan(const std::filesystem::path& path) {
  MappedFile file(path);
  const auto buf = file.bytes();
  if (buf.size() < kMagic.size() || std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0) {
    throw Error(Errc::NotABag, fmt::format("'{}' is not a ROS bag v2.0 file", path.string()));
  }
  std::vector<RawMessage> out;
  std::uint64_t pos = kMagic.size();
  while (pos < buf.size()) {
    const auto rec = parse_record(buf, pos, "record");
    if (rec.op() == Op::Chunk) {
      detail::check_compression(rec);
      std::uint64_t q = 0;
      while (q < rec.data.size()) {
        const auto inner = parse_record(rec.data, q, "chunk contents");
        if (inner.op() == Op::MessageData) {
          out.push_back({inner.header.u32("conn", "message"), inner.header.time("time", "message"),
                         {inner.data.begin(), inner.data.end()}});
        }
        q = inner.end;
      }
    }
    pos = rec.end;
  }
  return out;
}

}  // namespace bagpilot::bag
