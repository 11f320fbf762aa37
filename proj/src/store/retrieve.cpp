// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bagpilot/error.hpp"
#include "bagpilot/store/store.hpp"

namespace bagpilot::store {

namespace {

constexpr std::size_t kJsonArrayLimit = 16;

nlohmann::json message_json(const TimedMessage& m) {
  return {{"time", ns_to_seconds(m.time_ns)}, {"data", msg::to_json(m.value, {.max_array_elements = kJsonArrayLimit})}};
}

}  // namespace

BagSummary summarize(const bag::BagHandle& bag) {
  BagSummary s;
  s.path = bag.path();
  s.file_size = bag.header().file_size;
  s.message_count = bag.message_count();
  s.reindexed = bag.reindexed();
  if (bag.start_time() && bag.end_time()) {
    s.start_time = ns_to_seconds(*bag.start_time());
    s.end_time = ns_to_seconds(*bag.end_time());
    s.duration = static_cast<double>(*bag.end_time() - *bag.start_time()) * 1e-9;
  }
  for (const auto& topic : bag.topics()) {
    TopicSummary t;
    t.topic = topic;
    const auto conns = bag.connections_for_topic(topic);
    t.type_name = conns.front()->type_name;
    for (const auto* c : conns) {
      if (c->type_name != t.type_name) t.type_name += "|" + c->type_name;
    }
    t.message_count = bag.message_count(topic);
    t.mean_rate_hz = s.duration > 0 ? static_cast<double>(t.message_count) / s.duration : 0.0;
    s.topics.push_back(std::move(t));
  }
  return s;
}

nlohmann::json to_json(const BagSummary& s) {
  auto topics = nlohmann::json::array();
  for (const auto& t : s.topics) {
    topics.push_back({{"topic", t.topic}, {"type", t.type_name}, {"message_count", t.message_count},
                      {"mean_rate_hz", t.mean_rate_hz}});
  }
  return {{"path", s.path.string()},  {"file_size", s.file_size}, {"start_time", s.start_time},
          {"end_time", s.end_time},   {"duration", s.duration},   {"message_count", s.message_count},
          {"reindexed", s.reindexed}, {"topics", topics}};
}

MessageAtTime message_at_time(const bag::BagHandle& bag, std::string_view topic_name, double time,
                              double tolerance) {
  if (!std::isfinite(time)) throw Error(Errc::InvalidArgument, "time must be a finite number of seconds");
  if (!(tolerance >= 0)) throw Error(Errc::InvalidArgument, "tolerance must be a non-negative number of seconds");
  const auto topic = resolve_topic(bag, topic_name);
  const auto locs = bag.locators(topic);
  if (locs.empty()) throw Error(Errc::NoMessageWithinTolerance, fmt::format("topic '{}' has no messages", topic));

  const TimeNs target = seconds_to_ns(time);
  auto it = std::lower_bound(locs.begin(), locs.end(), target,
                             [](const auto& l, TimeNs t) { return l.first.time_ns < t; });
  std::size_t best;
  if (it == locs.end()) {
    best = locs.size() - 1;
  } else if (it == locs.begin()) {
    best = 0;
  } else {
    const auto i = static_cast<std::size_t>(it - locs.begin());
    const TimeNs after = locs[i].first.time_ns - target;
    const TimeNs before = target - locs[i - 1].first.time_ns;
    best = before <= after ? i - 1 : i;
    // Among equal timestamps the first stored message wins.
    while (best > 0 && locs[best - 1].first.time_ns == locs[best].first.time_ns) --best;
  }
  const auto& [loc, conn] = locs[best];
  const double actual = ns_to_seconds(loc.time_ns);
  const double delta = actual - time;
  const TimeNs gap = loc.time_ns > target ? loc.time_ns - target : target - loc.time_ns;
  if (gap > seconds_to_ns(tolerance) + seconds_resolution_ns(time)) {
    throw Error(Errc::NoMessageWithinTolerance,
                fmt::format("no message on '{}' within {} s of {:.6f}; nearest is at {:.6f} ({:+.6f} s); topic "
                            "spans {:.6f} to {:.6f}",
                            topic, tolerance, time, actual, delta, ns_to_seconds(locs.front().first.time_ns),
                            ns_to_seconds(locs.back().first.time_ns)));
  }
  const auto view = bag.read(loc, *conn);
  return {topic, {loc.time_ns, conn->type_name, decode_message(view)}, time, delta};
}

RangeResult messages_in_range(const bag::BagHandle& bag, std::string_view topic_name, double start_time,
                              double end_time, std::optional<std::size_t> max_messages) {
  if (!std::isfinite(start_time) || !std::isfinite(end_time)) {
    throw Error(Errc::InvalidRange, "start_time and end_time must be finite numbers of seconds");
  }
  if (start_time > end_time) {
    throw Error(Errc::InvalidRange,
                fmt::format("start_time {:.6f} is after end_time {:.6f}", start_time, end_time));
  }
  if (max_messages && *max_messages == 0) throw Error(Errc::InvalidArgument, "max_messages must be at least 1");
  RangeResult r;
  r.topic = resolve_topic(bag, topic_name);
  r.start_time = start_time;
  r.end_time = end_time;
  const auto w = TimeWindow::from_seconds(start_time, end_time);
  const auto locs = bag.locators(r.topic);
  const auto lo = std::lower_bound(locs.begin(), locs.end(), w.start_ns,
                                   [](const auto& l, TimeNs t) { return l.first.time_ns < t; });
  const auto hi = std::upper_bound(lo, locs.end(), w.end_ns,
                                   [](TimeNs t, const auto& l) { return t < l.first.time_ns; });
  const auto total = static_cast<std::size_t>(hi - lo);
  r.total_in_range = total;
  const std::size_t take = max_messages ? std::min(*max_messages, total) : total;
  r.truncated = take < total;
  r.messages.reserve(take);
  for (std::size_t k = 0; k < take; ++k) {
    const std::size_t idx = r.truncated ? k * total / take : k;
    const auto& [loc, conn] = *(lo + static_cast<std::ptrdiff_t>(idx));
    r.messages.push_back({loc.time_ns, conn->type_name, decode_message(bag.read(loc, *conn))});
  }
  return r;
}

nlohmann::json to_json(const MessageAtTime& m) {
  return {{"topic", m.topic},
          {"type", m.message.type_name},
          {"requested_time", m.requested_time},
          {"actual_time", ns_to_seconds(m.message.time_ns)},
          {"delta", m.delta},
          {"message", msg::to_json(m.message.value, {.max_array_elements = kJsonArrayLimit})}};
}

nlohmann::json to_json(const RangeResult& r) {
  auto messages = nlohmann::json::array();
  for (const auto& m : r.messages) messages.push_back(message_json(m));
  return {{"topic", r.topic},
          {"type", r.messages.empty() ? "" : r.messages.front().type_name},
          {"start_time", r.start_time},
          {"end_time", r.end_time},
          {"total_in_range", r.total_in_range},
          {"returned", r.messages.size()},
          {"truncated", r.truncated},
          {"messages", messages}};
}

}  // namespace bagpilot::store
