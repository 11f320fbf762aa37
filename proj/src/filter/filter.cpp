// SPDX-License-Identifier: Apache-2.0
#include "bagpilot/filter/filter.hpp"

#include <cmath>
#include <map>

#include <fmt/format.h>

#include "bagpilot/bag/format.hpp"
#include "bagpilot/error.hpp"
#include "bagpilot/store/store.hpp"

namespace bagpilot::filter {

namespace {

void validate(const FilterSpec& spec) {
  if (spec.max_rate_hz && !(*spec.max_rate_hz > 0 && std::isfinite(*spec.max_rate_hz))) {
    throw Error(Errc::InvalidArgument, fmt::format("max_rate_hz must be a positive number, got {}", *spec.max_rate_hz));
  }
  if (spec.start_time && spec.end_time && *spec.start_time > *spec.end_time) {
    throw Error(Errc::InvalidRange,
                fmt::format("start_time {:.6f} is after end_time {:.6f}", *spec.start_time, *spec.end_time));
  }
  if (spec.topics && spec.topics->empty()) throw Error(Errc::InvalidArgument, "topics must not be empty when given");
}

}  // namespace

fs::path resolve_destination(const FilterSpec& spec) {
  if (spec.destination.empty()) {
    return spec.source.parent_path() / (spec.source.stem().string() + "_filtered.bag");
  }
  if (spec.destination.is_relative()) return spec.source.parent_path() / spec.destination;
  return spec.destination;
}

FilterReport filter_bag(const FilterSpec& spec) {
  validate(spec);
  const auto source = bag::BagHandle::open(spec.source);
  const auto dest = resolve_destination(spec);
  if (dest.extension() != ".bag") {
    throw Error(Errc::InvalidArgument, fmt::format("output '{}' must have the .bag extension", dest.string()));
  }
  std::error_code ec;
  if (fs::weakly_canonical(dest, ec) == fs::weakly_canonical(spec.source)) {
    throw Error(Errc::SameSourceDest, fmt::format("output '{}' is the source bag; choose another output_path",
                                                  dest.string()));
  }

  std::set<std::string, std::less<>> selected;
  if (spec.topics) {
    for (const auto& t : *spec.topics) selected.insert(store::resolve_topic(*source, t));
  }
  const auto window = store::TimeWindow::from_seconds(spec.start_time, spec.end_time);
  const double min_gap = spec.max_rate_hz ? 1.0 / *spec.max_rate_hz - kRateEpsilon : 0.0;

  FilterReport report;
  report.source = spec.source;
  report.destination = dest;
  std::map<std::string, TopicCounts> counts;
  for (const auto& t : source->topics()) counts[t] = {t, source->message_count(t), 0};

  const auto tmp = fs::path(dest.string() + ".partial");
  std::map<std::string, TimeNs, std::less<>> last_kept;
  std::optional<TimeNs> first_out, last_out;
  try {
    bag::BagWriter writer(tmp);
    source->for_each({}, [&](const bag::MessageView& m) {
      const auto& topic = m.connection->topic;
      if (spec.topics && !selected.count(topic)) return true;
      if (!window.contains(m.time_ns)) return true;
      if (spec.max_rate_hz) {
        auto it = last_kept.find(topic);
        if (it != last_kept.end() && static_cast<double>(m.time_ns - it->second) * 1e-9 < min_gap) return true;
        last_kept[topic] = m.time_ns;
      }
      if (!writer.has_connection(m.connection->conn_id)) writer.add_connection(*m.connection);
      writer.write(m.connection->conn_id, m.time_ns, m.payload);
      ++counts[topic].output_count;
      if (!first_out) first_out = m.time_ns;
      last_out = m.time_ns;
      return true;
    });
    const auto stats = writer.close();
    report.output_file_size = stats.file_size;
    report.output_chunks = stats.chunk_count;
    report.total_out = stats.message_count;
    fs::rename(tmp, dest);
  } catch (...) {
    fs::remove(tmp, ec);
    throw;
  }
  for (auto& [t, c] : counts) {
    report.total_in += c.input_count;
    report.topics.push_back(c);
  }
  if (first_out) report.output_duration = static_cast<double>(*last_out - *first_out) * 1e-9;
  return report;
}

nlohmann::json to_json(const FilterReport& r) {
  auto topics = nlohmann::json::array();
  for (const auto& t : r.topics) {
    topics.push_back({{"topic", t.topic}, {"input_count", t.input_count}, {"output_count", t.output_count}});
  }
  return {{"source", r.source.string()},
          {"output_path", r.destination.string()},
          {"total_in", r.total_in},
          {"total_out", r.total_out},
          {"output_file_size", r.output_file_size},
          {"output_chunks", r.output_chunks},
          {"output_duration", r.output_duration},
          {"topics", topics}};
}

}  // namespace bagpilot::filter
