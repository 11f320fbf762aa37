// SPDX-License-Identifier: Apache-2.0
// JSONL debug format: one {"topic","type","time_ns","value"} object per line.
// Non-builtin types carry their definition in an optional "definition" key.
#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

#include "bagpilot/bag/format.hpp"
#include "bagpilot/error.hpp"
#include "bagpilot/msg/builtin.hpp"
#include "bagpilot/msg/codec.hpp"
#include "storage.hpp"

namespace bagpilot::bag {

namespace {

struct PendingMessage {
  std::uint32_t conn_id;
  TimeNs time_ns;
  std::vector<std::uint8_t> payload;
};

}  // namespace

void load_jsonl(BagHandle& handle, std::unique_ptr<Storage>& storage, std::vector<ConnectionRecord>& connections,
                BagIndex& index) {
  std::ifstream in(handle.path());
  if (!in) throw Error(Errc::IoFailure, fmt::format("cannot open '{}'", handle.path().string()));

  std::map<std::pair<std::string, std::string>, std::uint32_t> ids;
  std::map<std::uint32_t, msg::SchemaSet> schemas;
  std::vector<PendingMessage> pending;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto bad = [&](std::string_view what) {
      return Error(Errc::CorruptRecord, fmt::format("{}:{}: {}", handle.path().filename().string(), lineno, what));
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw bad(e.what());
    }
    if (!j.is_object() || !j.contains("topic") || !j.contains("type") || !j.contains("time_ns") ||
        !j.contains("value")) {
      throw bad("expected an object with topic, type, time_ns and value");
    }
    if (!j["topic"].is_string() || !j["type"].is_string() || !j["time_ns"].is_number_integer()) {
      throw bad("topic and type must be strings and time_ns an integer");
    }
    const auto topic = j["topic"].get<std::string>();
    const auto type = j["type"].get<std::string>();
    const auto t = j["time_ns"].get<std::int64_t>();
    if (t < 0) throw bad("time_ns must be non-negative");

    auto [it, inserted] = ids.try_emplace({topic, type}, static_cast<std::uint32_t>(ids.size()));
    const auto conn_id = it->second;
    if (inserted) {
      ConnectionRecord c;
      c.conn_id = conn_id;
      c.topic = topic;
      c.type_name = type;
      if (j.contains("definition")) {
        c.message_definition = j["definition"].get<std::string>();
        c.md5sum = "*";
      } else if (const auto b = msg::find_builtin(type)) {
        c.message_definition = b->definition;
        c.md5sum = b->md5sum;
      } else {
        throw bad(fmt::format("type '{}' is not built in and the line has no \"definition\"", type));
      }
      schemas.emplace(conn_id, msg::parse_definition(c.message_definition, type));
      connections.push_back(std::move(c));
    }
    const auto& set = schemas.at(conn_id);
    try {
      pending.push_back({conn_id, t, msg::encode(set, msg::from_json(set, type, j["value"]))});
    } catch (const Error& e) {
      throw bad(e.what());
    }
  }

  std::stable_sort(pending.begin(), pending.end(),
                   [](const auto& a, const auto& b) { return a.time_ns < b.time_ns; });
  auto mem = std::make_unique<MemoryStorage>();
  ChunkInfo info;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    auto& m = pending[i];
    index.by_connection[m.conn_id].push_back({m.time_ns, 0, static_cast<std::uint32_t>(i)});
    ++info.counts[m.conn_id];
    mem->payloads.push_back(std::move(m.payload));
  }
  if (!pending.empty()) {
    info.start_ns = pending.front().time_ns;
    info.end_ns = pending.back().time_ns;
    index.chunks.push_back(std::move(info));
  }
  storage = std::move(mem);
}

void write_jsonl(const std::filesystem::path& path, std::span<const ConnectionRecord> connections,
                 std::span<const RawMessage> messages) {
  std::map<std::uint32_t, std::pair<const ConnectionRecord*, msg::SchemaSet>> by_id;
  for (const auto& c : connections) by_id.emplace(c.conn_id, std::pair{&c, msg::parse_definition(c.message_definition, c.type_name)});
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, fmt::format("cannot create '{}'", path.string()));
  for (const auto& m : messages) {
    const auto it = by_id.find(m.conn_id);
    if (it == by_id.end()) {
      throw Error(Errc::UnknownConnection, fmt::format("message references unregistered connection {}", m.conn_id));
    }
    const auto& [conn, set] = it->second;
    nlohmann::json j;
    j["topic"] = conn->topic;
    j["type"] = conn->type_name;
    j["time_ns"] = m.time_ns;
    j["value"] = msg::to_json(msg::decode(set, m.payload));
    if (!msg::find_builtin(conn->type_name)) j["definition"] = conn->message_definition;
    out << j.dump() << '\n';
  }
  if (!out) throw Error(Errc::IoFailure, fmt::format("write to '{}' failed", path.string()));
}

}  // namespace bagpilot::bag
