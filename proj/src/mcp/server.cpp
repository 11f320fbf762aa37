// SPDX-License-Identifier: Apache-2.0
#include "bagpilot/mcp/server.hpp"

#include <chrono>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace bagpilot::mcp {

namespace {

struct RpcError {
  int code;
  std::string message;
};

json error_envelope(const json& id, int code, const std::string& message) {
  return {{"jsonrpc", "2.0"}, {"id", id}, {"error", {{"code", code}, {"message", message}}}};
}

std::string tool_names() {
  std::vector<std::string> names;
  for (const auto& t : tool_descriptors()) names.push_back(t.name);
  return fmt::format("{}", fmt::join(names, ", "));
}

}  // namespace

std::optional<json> Connection::handle(const json& envelope) {
  if (!envelope.is_object()) return error_envelope(nullptr, rpc::kInvalidRequest, "request must be a JSON object");
  const bool has_id = envelope.contains("id");
  const json id = has_id ? envelope["id"] : json();
  if (has_id && !(id.is_string() || id.is_number() || id.is_null())) {
    return error_envelope(nullptr, rpc::kInvalidRequest, "id must be a string or a number");
  }
  if (envelope.value("jsonrpc", json()) != "2.0") {
    return has_id ? std::optional(error_envelope(id, rpc::kInvalidRequest, "jsonrpc must be \"2.0\"")) : std::nullopt;
  }
  if (!envelope.contains("method") || !envelope["method"].is_string()) {
    // A response object from the client, or a malformed request.
    return has_id ? std::optional(error_envelope(id, rpc::kInvalidRequest, "method must be a string")) : std::nullopt;
  }
  const auto method = envelope["method"].get<std::string>();
  const json params = envelope.contains("params") ? envelope["params"] : json::object();
  const auto started = std::chrono::steady_clock::now();
  try {
    auto result = dispatch(method, params);
    if (!has_id) return std::nullopt;
    spdlog::debug("{} handled in {:.1f} ms", method,
                  std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count());
    return json{{"jsonrpc", "2.0"}, {"id", id}, {"result", std::move(result)}};
  } catch (const RpcError& e) {
    spdlog::debug("{} rejected: {} {}", method, e.code, e.message);
    if (!has_id) return std::nullopt;
    return error_envelope(id, e.code, e.message);
  }
}

json Connection::dispatch(const std::string& method, const json& params) {
  if (method == "initialize") {
    if (initialized_) throw RpcError{rpc::kInvalidRequest, "already initialized"};
    if (!params.is_object()) throw RpcError{rpc::kInvalidParams, "initialize params must be an object"};
    if (params.contains("protocolVersion") && !params["protocolVersion"].is_string()) {
      throw RpcError{rpc::kInvalidParams, "protocolVersion must be a string"};
    }
    if (params.contains("capabilities") && !params["capabilities"].is_object()) {
      throw RpcError{rpc::kInvalidParams, "capabilities must be an object"};
    }
    if (params.contains("clientInfo") && !params["clientInfo"].is_object()) {
      throw RpcError{rpc::kInvalidParams, "clientInfo must be an object"};
    }
    initialized_ = true;
    spdlog::info("client initialized ({})", params.contains("clientInfo") ? params["clientInfo"].dump() : "anonymous");
    return {{"protocolVersion", kProtocolVersion},
            {"capabilities", {{"tools", json::object()}}},
            {"serverInfo", {{"name", kServerName}, {"version", kServerVersion}}}};
  }
  if (method == "ping") return json::object();
  if (!initialized_) throw RpcError{rpc::kNotInitialized, "server not initialized"};
  if (method == "notifications/initialized" || method.starts_with("notifications/")) return json::object();
  if (method == "tools/list") {
    auto tools = json::array();
    for (const auto& t : tool_descriptors()) {
      tools.push_back({{"name", t.name}, {"description", t.description}, {"inputSchema", t.input_schema}});
    }
    return {{"tools", tools}};
  }
  if (method == "tools/call") {
    if (!params.is_object() || !params.contains("name") || !params["name"].is_string()) {
      throw RpcError{rpc::kInvalidParams, "tools/call needs params.name (string)"};
    }
    const auto name = params["name"].get<std::string>();
    if (!tools_.has_tool(name)) {
      throw RpcError{rpc::kMethodNotFound, fmt::format("unknown tool '{}'; available tools: {}", name, tool_names())};
    }
    const json args = params.contains("arguments") && !params["arguments"].is_null() ? params["arguments"]
                                                                                      : json::object();
    const auto started = std::chrono::steady_clock::now();
    const auto result = tools_.call(name, args);
    spdlog::info("tools/call {} -> {} in {:.1f} ms", name, result.is_error ? "error" : "ok",
                 std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count());
    return result.to_json();
  }
  throw RpcError{rpc::kMethodNotFound, fmt::format("method '{}' not found", method)};
}

std::optional<std::string> Connection::handle_text(std::string_view text) {
  json envelope;
  try {
    envelope = json::parse(text);
  } catch (const json::parse_error& e) {
    return error_envelope(nullptr, rpc::kParseError, fmt::format("parse error: {}", e.what())).dump();
  }
  auto response = handle(envelope);
  if (!response) return std::nullopt;
  return response->dump(-1, ' ', false, json::error_handler_t::replace);
}

void serve_stdio(ToolServer& tools, std::istream& in, std::ostream& out) {
  Connection connection(tools);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (auto response = connection.handle_text(line)) {
      out << *response << '\n';
      out.flush();
    }
  }
}

}  // namespace bagpilot::mcp
