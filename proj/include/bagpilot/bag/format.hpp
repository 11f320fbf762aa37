// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bagpilot/util.hpp"

namespace bagpilot::bag {

inline constexpr std::string_view kMagic = "#ROSBAG V2.0\n";
inline constexpr std::size_t kBagHeaderRecordSize = 4096;
inline constexpr std::size_t kDefaultChunkSize = 768 * 1024;

enum class Op : std::uint8_t {
  MessageData = 0x02,
  BagHeader = 0x03,
  IndexData = 0x04,
  Chunk = 0x05,
  ChunkInfo = 0x06,
  Connection = 0x07,
};

struct BagHeaderInfo {
  std::uint64_t index_pos = 0;
  std::uint32_t conn_count = 0;
  std::uint32_t chunk_count = 0;
  std::uint64_t file_size = 0;
};

struct ConnectionRecord {
  std::uint32_t conn_id = 0;
  std::string topic;
  std::string type_name;
  std::string md5sum;
  std::string message_definition;
  std::optional<std::string> callerid;
  std::optional<bool> latching;

  bool operator==(const ConnectionRecord&) const = default;
};

struct RawMessage {
  std::uint32_t conn_id = 0;
  TimeNs time_ns = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const RawMessage&) const = default;
};

struct MessageLocator {
  TimeNs time_ns = 0;
  std::uint64_t chunk_pos = 0;
  std::uint32_t offset = 0;  // into the chunk's uncompressed data

  auto operator<=>(const MessageLocator&) const = default;
};

struct ChunkInfo {
  std::uint64_t chunk_pos = 0;
  TimeNs start_ns = 0;
  TimeNs end_ns = 0;
  std::map<std::uint32_t, std::uint32_t> counts;  // conn_id -> messages
};

struct BagIndex {
  std::map<std::uint32_t, std::vector<MessageLocator>> by_connection;  // each sorted by time
  std::vector<ChunkInfo> chunks;                                       // sorted by chunk_pos

  std::uint64_t total_messages() const noexcept;
};

/// A message as seen while streaming. `payload` points into storage owned by
/// the handle and stays valid for the handle's lifetime.
struct MessageView {
  const ConnectionRecord* connection = nullptr;
  TimeNs time_ns = 0;
  std::span<const std::uint8_t> payload;

  RawMessage to_raw() const {
    return {connection->conn_id, time_ns, {payload.begin(), payload.end()}};
  }
};

struct MessageQuery {
  std::optional<std::set<std::string, std::less<>>> topics;
  std::optional<TimeNs> start_ns;  // inclusive
  std::optional<TimeNs> end_ns;    // inclusive
};

enum class StorageFormat { Ros1, Jsonl };

struct OpenOptions {
  /// Ignore the trailing index and rebuild it from a linear scan.
  bool force_scan = false;
};

class Storage;

/// An opened bag. Immutable after open; safe to share between readers.
class BagHandle {
 public:
  /// Opens a ROS1 v2.0 bag, or a JSONL debug file when the extension is
  /// ".jsonl". Throws Error with NotABag, Truncated, UnsupportedCompression,
  /// CorruptRecord or IoFailure.
  static std::shared_ptr<const BagHandle> open(const std::filesystem::path& path, const OpenOptions& options = {});

  ~BagHandle();
  BagHandle(const BagHandle&) = delete;
  BagHandle& operator=(const BagHandle&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  StorageFormat format() const noexcept { return format_; }
  const BagHeaderInfo& header() const noexcept { return header_; }
  /// Sorted by conn_id.
  const std::vector<ConnectionRecord>& connections() const noexcept { return connections_; }
  const ConnectionRecord* connection(std::uint32_t conn_id) const noexcept;
  std::vector<const ConnectionRecord*> connections_for_topic(std::string_view topic) const;
  /// Distinct topic names, sorted.
  std::vector<std::string> topics() const;
  const BagIndex& index() const noexcept { return index_; }
  /// True when the index was rebuilt by a linear scan.
  bool reindexed() const noexcept { return reindexed_; }

  std::uint64_t message_count() const noexcept { return index_.total_messages(); }
  std::uint64_t message_count(std::string_view topic) const;
  std::optional<TimeNs> start_time() const noexcept { return start_ns_; }
  std::optional<TimeNs> end_time() const noexcept { return end_ns_; }

  /// Visits matching messages in non-decreasing time order (ties in storage
  /// order). Return false from the callback to stop early.
  void for_each(const MessageQuery& query, const std::function<bool(const MessageView&)>& visit) const;
  std::vector<RawMessage> stream_messages(const MessageQuery& query = {}) const;

  /// Time-sorted locators of every message on `topic` (all its connections),
  /// paired with the owning connection.
  std::vector<std::pair<MessageLocator, const ConnectionRecord*>> locators(std::string_view topic) const;
  MessageView read(const MessageLocator& locator, const ConnectionRecord& connection) const;

 private:
  BagHandle() = default;
  void finish_index();

  std::filesystem::path path_;
  StorageFormat format_ = StorageFormat::Ros1;
  BagHeaderInfo header_;
  std::vector<ConnectionRecord> connections_;
  BagIndex index_;
  bool reindexed_ = false;
  std::optional<TimeNs> start_ns_;
  std::optional<TimeNs> end_ns_;
  std::unique_ptr<Storage> storage_;

  friend class Ros1Loader;
  friend class JsonlLoader;
};

using BagPtr = std::shared_ptr<const BagHandle>;

/// Record-by-record walk over a ROS1 bag file without consulting any index:
/// every message-data record in file order. Used as an independent oracle.
std::vector<RawMessage> linear_scan(const std::filesystem::path& path);

struct WriterOptions {
  std::size_t chunk_size = kDefaultChunkSize;
};

struct WrittenBagStats {
  std::uint64_t message_count = 0;
  std::uint32_t chunk_count = 0;
  std::uint64_t file_size = 0;
};

/// Streaming ROS1 v2.0 writer with uncompressed chunks. Single owner.
class BagWriter {
 public:
  explicit BagWriter(const std::filesystem::path& path, WriterOptions options = {});
  ~BagWriter();
  BagWriter(const BagWriter&) = delete;
  BagWriter& operator=(const BagWriter&) = delete;

  /// Registers a connection; may be called any time before its first message.
  void add_connection(const ConnectionRecord& connection);
  bool has_connection(std::uint32_t conn_id) const noexcept;
  /// Messages must arrive in non-decreasing time order.
  void write(std::uint32_t conn_id, TimeNs time_ns, std::span<const std::uint8_t> payload);
  void write(const RawMessage& message) { write(message.conn_id, message.time_ns, message.payload); }
  /// Writes index records and back-patches the bag header. Idempotent.
  WrittenBagStats close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper over BagWriter. Throws Error with UnsortedInput,
/// UnknownConnection or IoFailure.
WrittenBagStats write_bag(const std::filesystem::path& path, std::span<const ConnectionRecord> connections,
                          std::span<const RawMessage> messages, WriterOptions options = {});

/// Writes the JSONL debug format: one {"topic","type","time_ns","value"}
/// object per line. Payloads are decoded with each connection's definition.
void write_jsonl(const std::filesystem::path& path, std::span<const ConnectionRecord> connections,
                 std::span<const RawMessage> messages);

}  // namespace bagpilot::bag
