// SPDX-License-Identifier: Apache-2.0
// Filtered copies of bags by topic, time window and per-topic rate.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace bagpilot::filter {

namespace fs = std::filesystem;

struct FilterSpec {
  fs::path source;
  /// Empty selects `<stem>_filtered.bag` next to the source. Relative paths
  /// resolve against the source directory.
  fs::path destination;
  std::optional<std::set<std::string>> topics;
  std::optional<double> start_time;  // unix seconds, inclusive
  std::optional<double> end_time;    // unix seconds, inclusive
  std::optional<double> max_rate_hz;  // per topic
};

/// Messages closer than 1/max_rate_hz minus this many seconds are dropped.
inline constexpr double kRateEpsilon = 1e-9;

struct TopicCounts {
  std::string topic;
  std::uint64_t input_count = 0;
  std::uint64_t output_count = 0;
};

struct FilterReport {
  fs::path source;
  fs::path destination;
  std::vector<TopicCounts> topics;  // every source topic
  std::uint64_t total_in = 0;
  std::uint64_t total_out = 0;
  std::uint64_t output_file_size = 0;
  std::uint32_t output_chunks = 0;
  double output_duration = 0.0;
};

fs::path resolve_destination(const FilterSpec& spec);

/// A message survives iff its topic is selected, its time lies in the window
/// and, per topic, it is the first kept message or at least
/// 1/max_rate_hz - kRateEpsilon seconds after the last kept one. Payloads are
/// copied verbatim; only connections with surviving messages are written.
/// Throws Error(SameSourceDest), Error(InvalidArgument), Error(InvalidRange),
/// Error(UnknownTopic) and open/write errors.
FilterReport filter_bag(const FilterSpec& spec);

nlohmann::json to_json(const FilterReport& r);

}  // namespace bagpilot::filter
