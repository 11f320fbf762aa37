// SPDX-License-Identifier: Apache-2.0
// MCP client side: the harness and agents only see the server through this.
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace bagpilot::mcp {
class ToolServer;
}

namespace bagpilot::bench {

using nlohmann::json;

/// A JSON-RPC error returned by the server.
struct RpcFailure : std::runtime_error {
  RpcFailure(int c, const std::string& message) : std::runtime_error(message), code(c) {}
  int code;
};

class McpClient {
 public:
  virtual ~McpClient() = default;

  /// Returns the result member. Throws RpcFailure for error responses and
  /// Error(IoFailure) when the server cannot be reached.
  virtual json request(const std::string& method, const json& params) = 0;
  virtual void notify(const std::string& method, const json& params) = 0;

  /// initialize + notifications/initialized; returns the tools/list array.
  json open(const std::string& client_name);
};

using Connector = std::function<std::unique_ptr<McpClient>()>;

/// A fresh in-process connection to `tools` per call of the connector.
Connector local_endpoint(mcp::ToolServer& tools);
/// POSTs to <base_url>/rpc, carrying the Mcp-Session-Id it is handed.
Connector http_endpoint(const std::string& base_url, double timeout_s);

/// The JSON data block of a tool result's text content, if any.
std::optional<json> data_block(const json& content);
/// Text blocks joined by blank lines, each image replaced by a short note.
std::string content_text(const json& content);

}  // namespace bagpilot::bench
