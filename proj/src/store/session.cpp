// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <chrono>
#include <map>
#include <mutex>

#include <fmt/format.h>

#include "bagpilot/error.hpp"
#include "bagpilot/msg/codec.hpp"
#include "bagpilot/store/store.hpp"

namespace bagpilot::store {

namespace {

double to_unix_seconds(fs::file_time_type t) {
  const auto sys = std::chrono::file_clock::to_sys(t);
  return std::chrono::duration<double>(sys.time_since_epoch()).count();
}

fs::path normalize(const fs::path& p) {
  std::error_code ec;
  auto abs = fs::weakly_canonical(p, ec);
  return ec ? fs::absolute(p).lexically_normal() : abs;
}

}  // namespace

bool is_bag_file(const fs::path& path) {
  const auto ext = path.extension();
  return ext == ".bag" || ext == ".jsonl";
}

std::vector<BagEntry> list_bag_files(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(Errc::PathNotFound, fmt::format("'{}' is not a directory", dir.string()));
  }
  std::vector<BagEntry> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_bag_file(entry.path())) continue;
    out.push_back({entry.path().filename().string(), entry.path(), entry.file_size(),
                   to_unix_seconds(entry.last_write_time())});
  }
  std::sort(out.begin(), out.end(), [](const BagEntry& a, const BagEntry& b) { return a.name < b.name; });
  return out;
}

Session::Session(std::size_t cache_capacity) : capacity_(std::max<std::size_t>(cache_capacity, 1)) {}

SetPathResult Session::set_bag_path(const fs::path& path) {
  std::error_code ec;
  if (path.empty() || !fs::exists(path, ec)) {
    throw Error(Errc::PathNotFound, fmt::format("path '{}' does not exist", path.string()));
  }
  SetPathResult r;
  r.resolved = normalize(path);
  r.is_directory = fs::is_directory(r.resolved);
  if (r.is_directory) {
    r.bag_count = list_bag_files(r.resolved).size();
    if (r.bag_count == 0) r.warning = fmt::format("no .bag or .jsonl files in '{}'", r.resolved.string());
  } else {
    r.bag_count = 1;
  }
  current_ = r.resolved;
  return r;
}

fs::path Session::locate(const std::string& text) const {
  std::error_code ec;
  const fs::path p(text);
  if (fs::exists(p, ec)) return normalize(p);
  if (p.is_relative() && current_) {
    const auto base = fs::is_directory(*current_) ? *current_ : current_->parent_path();
    if (fs::exists(base / p, ec)) return normalize(base / p);
  }
  throw Error(Errc::PathNotFound, fmt::format("path '{}' does not exist", text));
}

fs::path Session::listing_dir(const std::optional<std::string>& path) const {
  if (path && !path->empty()) return locate(*path);
  if (!current_) {
    throw Error(Errc::NoPathConfigured,
                "no bag path configured; call set_bag_path with a bag file or directory first, or pass a path");
  }
  return fs::is_directory(*current_) ? *current_ : current_->parent_path();
}

ResolvedBag Session::resolve(const std::optional<std::string>& bag_path) {
  fs::path target;
  if (bag_path && !bag_path->empty()) {
    target = locate(*bag_path);
  } else if (current_) {
    target = *current_;
  } else {
    throw Error(Errc::NoPathConfigured,
                "no bag path configured; call set_bag_path with a bag file or directory first, or pass bag_path");
  }
  ResolvedBag out;
  if (fs::is_directory(target)) {
    const auto bags = list_bag_files(target);
    if (bags.empty()) {
      throw Error(Errc::NoBagsInDirectory, fmt::format("no .bag or .jsonl files in '{}'", target.string()));
    }
    const auto newest = std::max_element(bags.begin(), bags.end(), [](const BagEntry& a, const BagEntry& b) {
      return a.modified_time != b.modified_time ? a.modified_time < b.modified_time : a.name > b.name;
    });
    out.path = normalize(newest->path);
    out.note = fmt::format("'{}' is a directory with {} bag(s); using the most recently modified: {}",
                           target.string(), bags.size(), newest->name);
  } else {
    out.path = target;
  }
  out.bag = open_cached(out.path);
  return out;
}

bag::BagPtr Session::open_cached(const fs::path& file) {
  const auto mtime = fs::last_write_time(file);
  const auto size = fs::file_size(file);
  for (auto it = cache_.begin(); it != cache_.end(); ++it) {
    if (it->path != file) continue;
    if (it->mtime == mtime && it->size == size) {
      cache_.splice(cache_.begin(), cache_, it);
      return cache_.front().bag;
    }
    cache_.erase(it);
    break;
  }
  auto handle = bag::BagHandle::open(file);
  cache_.push_front({file, mtime, size, handle});
  while (cache_.size() > capacity_) cache_.pop_back();
  return handle;
}

std::shared_ptr<const msg::SchemaSet> schema_for(const bag::ConnectionRecord& connection) {
  static std::mutex mutex;
  static std::map<std::pair<std::string, std::string>, std::shared_ptr<const msg::SchemaSet>> cache;
  auto key = std::make_pair(connection.type_name, connection.message_definition);
  std::lock_guard lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto schemas = std::make_shared<const msg::SchemaSet>(
      msg::parse_definition(connection.message_definition, connection.type_name));
  cache.emplace(std::move(key), schemas);
  return schemas;
}

msg::Value decode_message(const bag::MessageView& message) {
  return msg::decode(*schema_for(*message.connection), message.payload);
}

std::string resolve_topic(const bag::BagHandle& bag, std::string_view name) {
  const auto topics = bag.topics();
  const auto has = [&](std::string_view t) { return std::binary_search(topics.begin(), topics.end(), t); };
  if (has(name)) return std::string(name);
  std::string slashed = "/" + std::string(name);
  if (!name.starts_with('/') && has(slashed)) return slashed;
  if (!name.starts_with('/')) name = slashed;
  std::vector<std::string> candidates;
  for (const auto& t : topics) {
    if (t.size() > name.size() && t.ends_with(name)) candidates.push_back(t);
  }
  if (candidates.size() == 1) return candidates.front();
  if (candidates.size() > 1) {
    throw Error(Errc::AmbiguousTopic,
                fmt::format("topic '{}' matches several topics: {}", name, fmt::join(candidates, ", ")));
  }
  throw Error(Errc::UnknownTopic, fmt::format("topic '{}' not found; available topics: {}", name,
                                              topics.empty() ? "(none)" : fmt::format("{}", fmt::join(topics, ", "))));
}

TimeWindow TimeWindow::from_seconds(std::optional<double> start, std::optional<double> end) {
  TimeWindow w;
  if (start) w.start_ns = seconds_to_ns(*start) - seconds_resolution_ns(*start);
  if (end) w.end_ns = seconds_to_ns(*end) + seconds_resolution_ns(*end);
  return w;
}

}  // namespace bagpilot::store
