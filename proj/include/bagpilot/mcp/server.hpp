// SPDX-License-Identifier: Apache-2.0
// MCP tool server: tool registry, JSON-RPC dispatch, stdio and HTTP transports.
#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "bagpilot/store/store.hpp"

namespace bagpilot::mcp {

using nlohmann::json;

inline constexpr std::string_view kProtocolVersion = "2024-11-05";
inline constexpr std::string_view kServerName = "rosbags-mcp-lite";
inline constexpr std::string_view kServerVersion = "0.1.0";
inline constexpr int kDefaultPort = 8711;

namespace rpc {
inline constexpr int kParseError = -32700;
inline constexpr int kInvalidRequest = -32600;
inline constexpr int kMethodNotFound = -32601;
inline constexpr int kInvalidParams = -32602;
inline constexpr int kInternalError = -32603;
inline constexpr int kNotInitialized = -32002;
}  // namespace rpc

struct ToolDescriptor {
  std::string name;
  std::string description;
  json input_schema;
};

/// MCP tool result: ordered content blocks plus the error flag.
struct ToolResult {
  json content = json::array();
  bool is_error = false;

  json to_json() const;
};

/// The fifteen tools, in registry order.
const std::vector<ToolDescriptor>& tool_descriptors();

/// Tool state shared by every connection: one bag-store session, accessed
/// under a lock so calls are serialized.
class ToolServer {
 public:
  explicit ToolServer(std::optional<std::string> initial_bag_path = {});

  /// Unknown names are the caller's concern; this returns an error result.
  /// Arguments are validated against the schema before any tool body runs.
  ToolResult call(const std::string& name, const json& arguments);

  /// Number of tool bodies entered so far.
  std::uint64_t dispatch_count() const noexcept { return dispatched_.load(); }
  bool has_tool(std::string_view name) const;

 private:
  std::mutex mutex_;
  store::Session session_;
  std::atomic<std::uint64_t> dispatched_{0};
};

/// JSON-RPC protocol state for one client: the initialize handshake gates
/// every other method.
class Connection {
 public:
  explicit Connection(ToolServer& tools) : tools_(tools) {}

  /// Response envelope, or nullopt for notifications.
  std::optional<json> handle(const json& envelope);
  /// Parses one text message; malformed JSON yields a -32700 response.
  std::optional<std::string> handle_text(std::string_view text);

  bool initialized() const noexcept { return initialized_; }

 private:
  json dispatch(const std::string& method, const json& params);

  ToolServer& tools_;
  bool initialized_ = false;
};

/// Newline-delimited JSON-RPC over the given streams until end of input.
void serve_stdio(ToolServer& tools, std::istream& in, std::ostream& out);

/// POST /rpc with one envelope per request, GET /healthz. Each client is a
/// separate Connection keyed by the Mcp-Session-Id header that the
/// initialize response hands out.
class HttpTransport {
 public:
  explicit HttpTransport(ToolServer& tools);
  ~HttpTransport();
  HttpTransport(const HttpTransport&) = delete;
  HttpTransport& operator=(const HttpTransport&) = delete;

  /// Binds and serves on a background thread; port 0 picks a free port.
  /// Returns the bound port. Throws Error(IoFailure) when binding fails.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace bagpilot::mcp
