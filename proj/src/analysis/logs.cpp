// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include <fmt/format.h>

#include "bagpilot/analysis/analysis.hpp"
#include "bagpilot/error.hpp"
#include "bagpilot/store/store.hpp"

namespace bagpilot::analysis {

namespace {

std::string string_field(const msg::Value& v, std::string_view name) {
  const auto* f = v.find(name);
  return f && f->is<std::string>() ? f->as<std::string>() : std::string();
}

std::string_view strip_slash(std::string_view s) { return s.starts_with('/') ? s.substr(1) : s; }

LogEntry entry_from_value(const msg::Value& v, TimeNs time_ns) {
  LogEntry e;
  e.time_ns = time_ns;
  if (const auto* l = v.find("level")) e.level = static_cast<int>(msg::to_real(*l).value_or(0));
  e.node = string_field(v, "name");
  e.message = string_field(v, "msg");
  e.file = string_field(v, "file");
  e.function = string_field(v, "function");
  if (const auto* l = v.find("line")) e.line = static_cast<std::uint32_t>(msg::to_real(*l).value_or(0));
  return e;
}

}  // namespace

LogReport analyze_logs(const bag::BagHandle& bag, const LogQuery& query) {
  if (query.start_time && query.end_time && *query.start_time > *query.end_time) {
    throw Error(Errc::InvalidRange,
                fmt::format("start_time {:.6f} is after end_time {:.6f}", *query.start_time, *query.end_time));
  }
  LogReport r;
  r.query = query;
  for (const auto& c : bag.connections()) {
    if (c.type_name == msg::kLog && std::find(r.topics.begin(), r.topics.end(), c.topic) == r.topics.end()) {
      r.topics.push_back(c.topic);
    }
  }
  if (r.topics.empty()) {
    throw Error(Errc::NoLogTopic,
                fmt::format("no rosgraph_msgs/Log topic in this bag; topics are: {}", fmt::join(bag.topics(), ", ")));
  }
  // /rosout_agg repeats /rosout; read only /rosout when both are present.
  if (std::find(r.topics.begin(), r.topics.end(), "/rosout") != r.topics.end()) r.topics = {"/rosout"};
  std::sort(r.topics.begin(), r.topics.end());

  for (const int level : {1, 2, 4, 8, 16}) r.counts_by_level[msg::log_level_name(level)] = 0;
  const auto w = store::TimeWindow::from_seconds(query.start_time, query.end_time);
  bag::MessageQuery q{.topics = std::set<std::string, std::less<>>(r.topics.begin(), r.topics.end()),
                      .start_ns = {}, .end_ns = {}};
  if (query.start_time) q.start_ns = w.start_ns;
  if (query.end_time) q.end_ns = w.end_ns;
  const int min_level = query.min_level ? static_cast<int>(*query.min_level) : 0;
  bag.for_each(q, [&](const bag::MessageView& m) {
    auto e = entry_from_value(store::decode_message(m), m.time_ns);
    ++r.total;
    ++r.counts_by_level[msg::log_level_name(e.level)];
    ++r.counts_by_node[e.node];
    const bool level_ok = e.level >= min_level;
    const bool node_ok = !query.node || strip_slash(*query.node) == strip_slash(e.node);
    if (level_ok && node_ok) {
      ++r.filtered_total;
      if (r.entries.size() < query.limit) r.entries.push_back(std::move(e));
    }
    return true;
  });
  return r;
}

nlohmann::json to_json(const LogReport& r) {
  auto entries = nlohmann::json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"time", ns_to_seconds(e.time_ns)},
                       {"level", msg::log_level_name(e.level)},
                       {"node", e.node},
                       {"message", e.message}});
  }
  nlohmann::json filters = nlohmann::json::object();
  if (r.query.min_level) filters["level"] = msg::log_level_name(static_cast<int>(*r.query.min_level));
  if (r.query.node) filters["node"] = *r.query.node;
  if (r.query.start_time) filters["start_time"] = *r.query.start_time;
  if (r.query.end_time) filters["end_time"] = *r.query.end_time;
  return {{"topics", r.topics},
          {"filters", filters},
          {"total", r.total},
          {"counts_by_level", r.counts_by_level},
          {"counts_by_node", r.counts_by_node},
          {"filtered_count", r.filtered_total},
          {"returned", r.entries.size()},
          {"truncated", r.entries.size() < r.filtered_total},
          {"entries", entries}};
}

}  // namespace bagpilot::analysis
