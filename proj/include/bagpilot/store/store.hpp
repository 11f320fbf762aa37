// SPDX-License-Identifier: Apache-2.0
// Session state, bag discovery and message retrieval.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <list>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bagpilot/bag/format.hpp"
#include "bagpilot/msg/schema.hpp"
#include "bagpilot/msg/value.hpp"

namespace bagpilot::store {

namespace fs = std::filesystem;

/// True for the extensions the store treats as bags (.bag, .jsonl).
bool is_bag_file(const fs::path& path);

struct BagEntry {
  std::string name;
  fs::path path;
  std::uint64_t size_bytes = 0;
  double modified_time = 0.0;  // unix seconds
};

/// Non-recursive listing of bag files in `dir`, sorted by name.
std::vector<BagEntry> list_bag_files(const fs::path& dir);

struct SetPathResult {
  fs::path resolved;
  bool is_directory = false;
  std::size_t bag_count = 0;
  /// Set when a directory holds no bags; the path is still recorded.
  std::optional<std::string> warning;
};

struct ResolvedBag {
  bag::BagPtr bag;
  fs::path path;
  /// Non-empty when the bag was picked from a directory.
  std::string note;
};

class Session {
 public:
  explicit Session(std::size_t cache_capacity = 4);

  /// Throws Error(PathNotFound).
  SetPathResult set_bag_path(const fs::path& path);
  const std::optional<fs::path>& current_path() const noexcept { return current_; }

  /// Resolves an optional per-call path against the session. A relative
  /// `bag_path` that does not exist as given is tried against the current
  /// directory. Directories resolve to their most recently modified bag.
  /// Throws Error(NoPathConfigured), Error(PathNotFound),
  /// Error(NoBagsInDirectory) or an open error.
  ResolvedBag resolve(const std::optional<std::string>& bag_path);

  /// Directory to list: the given path, or the session path (its parent when
  /// the session points at a file).
  fs::path listing_dir(const std::optional<std::string>& path) const;

  std::size_t cache_size() const noexcept { return cache_.size(); }
  std::size_t cache_capacity() const noexcept { return capacity_; }

 private:
  struct CacheEntry {
    fs::path path;
    fs::file_time_type mtime;
    std::uintmax_t size = 0;
    bag::BagPtr bag;
  };

  bag::BagPtr open_cached(const fs::path& file);
  fs::path locate(const std::string& text) const;

  std::size_t capacity_;
  std::optional<fs::path> current_;
  std::list<CacheEntry> cache_;  // most recently used first
};

/// Schema of a connection's embedded definition, cached process-wide.
/// Throws message-codec parse errors for undecodable connections.
std::shared_ptr<const msg::SchemaSet> schema_for(const bag::ConnectionRecord& connection);
msg::Value decode_message(const bag::MessageView& message);

/// Maps a user-supplied topic to one in the bag: exact name, then with a
/// leading '/', then a unique suffix match on a '/' boundary. Throws
/// Error(UnknownTopic) or Error(AmbiguousTopic) listing the candidates.
std::string resolve_topic(const bag::BagHandle& bag, std::string_view name);

/// Inclusive nanosecond window for bounds given in unix seconds; see
/// seconds_resolution_ns.
struct TimeWindow {
  TimeNs start_ns = std::numeric_limits<TimeNs>::min();
  TimeNs end_ns = std::numeric_limits<TimeNs>::max();

  static TimeWindow from_seconds(std::optional<double> start, std::optional<double> end);
  bool contains(TimeNs t) const noexcept { return start_ns <= t && t <= end_ns; }
};

// --- bag_info -------------------------------------------------------------

struct TopicSummary {
  std::string topic;
  std::string type_name;
  std::uint64_t message_count = 0;
  double mean_rate_hz = 0.0;
};

struct BagSummary {
  fs::path path;
  std::uint64_t file_size = 0;
  double start_time = 0.0;
  double end_time = 0.0;
  double duration = 0.0;
  std::uint64_t message_count = 0;
  bool reindexed = false;
  std::vector<TopicSummary> topics;
};

/// mean_rate_hz = count / bag duration, 0 when the duration is 0.
BagSummary summarize(const bag::BagHandle& bag);
nlohmann::json to_json(const BagSummary& s);

// --- message retrieval ----------------------------------------------------

struct TimedMessage {
  TimeNs time_ns = 0;
  std::string type_name;
  msg::Value value;
};

struct MessageAtTime {
  std::string topic;
  TimedMessage message;
  double requested_time = 0.0;
  double delta = 0.0;  // message time minus requested time, seconds
};

inline constexpr double kDefaultTolerance = 1.0;

/// Nearest message by |t - time|; ties go to the earlier message. Throws
/// Error(UnknownTopic) or Error(NoMessageWithinTolerance).
MessageAtTime message_at_time(const bag::BagHandle& bag, std::string_view topic, double time,
                              double tolerance = kDefaultTolerance);

struct RangeResult {
  std::string topic;
  double start_time = 0.0;
  double end_time = 0.0;
  std::uint64_t total_in_range = 0;
  bool truncated = false;
  std::vector<TimedMessage> messages;
};

inline constexpr std::size_t kDefaultMaxMessages = 100;

/// Inclusive range. When more than `max_messages` match, picks indices
/// floor(k * total / max) for k < max. nullopt means no cap. Throws
/// Error(InvalidRange), Error(InvalidArgument) or Error(UnknownTopic).
RangeResult messages_in_range(const bag::BagHandle& bag, std::string_view topic, double start_time,
                              double end_time, std::optional<std::size_t> max_messages = kDefaultMaxMessages);

// --- search ---------------------------------------------------------------

enum class ConditionType { Equals, NotEquals, GreaterThan, LessThan, Contains, Regex, NearPosition };

std::string_view condition_name(ConditionType t) noexcept;
std::optional<ConditionType> parse_condition_type(std::string_view name) noexcept;
std::vector<std::string> condition_names();

struct SearchCondition {
  ConditionType type = ConditionType::Equals;
  std::optional<std::string> field;
  std::string value;
};

struct SearchMatch {
  TimeNs time_ns = 0;
  nlohmann::json field_value;  // null for whole-message matches
  nlohmann::json excerpt;
  std::optional<double> distance;  // near_position only
};

struct ClosestApproach {
  double distance = 0.0;
  double x = 0.0;
  double y = 0.0;
  TimeNs time_ns = 0;
};

struct SearchResult {
  std::string topic;
  SearchCondition condition;
  std::uint64_t scanned = 0;
  std::uint64_t total_matches = 0;
  std::vector<SearchMatch> matches;  // at most `limit`
  std::optional<ClosestApproach> closest;  // near_position only, over all messages
  double target_x = 0.0, target_y = 0.0, radius = 0.0;  // near_position only
};

inline constexpr std::size_t kDefaultSearchLimit = 10;

/// Scalar and text conditions return the first `limit` matches in time order.
/// near_position returns matches within the radius ordered by distance, plus
/// the closest approach over every message in the window. Throws
/// Error(BadCondition), Error(FieldNotNumeric), Error(NoSuchField),
/// Error(UnsupportedPoseType) or Error(UnknownTopic).
SearchResult search_messages(const bag::BagHandle& bag, std::string_view topic, const SearchCondition& condition,
                             std::size_t limit = kDefaultSearchLimit, std::optional<double> start_time = {},
                             std::optional<double> end_time = {});

nlohmann::json to_json(const MessageAtTime& m);
nlohmann::json to_json(const RangeResult& r);
nlohmann::json to_json(const SearchResult& r);

}  // namespace bagpilot::store
