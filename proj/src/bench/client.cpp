// SPDX-License-Identifier: Apache-2.0
#include "bagpilot/bench/client.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include "bagpilot/error.hpp"
#include "bagpilot/mcp/server.hpp"

namespace bagpilot::bench {

namespace {

json unwrap(const json& response) {
  if (!response.is_object()) throw Error(Errc::IoFailure, "server sent a non-object response");
  if (response.contains("error")) {
    const auto& e = response["error"];
    throw RpcFailure(e.value("code", 0), e.value("message", std::string("unknown error")));
  }
  if (!response.contains("result")) throw Error(Errc::IoFailure, "server response has neither result nor error");
  return response["result"];
}

class LocalClient final : public McpClient {
 public:
  explicit LocalClient(mcp::ToolServer& tools) : connection_(tools) {}

  json request(const std::string& method, const json& params) override {
    const auto response = connection_.handle({{"jsonrpc", "2.0"}, {"id", ++id_}, {"method", method}, {"params", params}});
    if (!response) throw Error(Errc::IoFailure, fmt::format("no response to {}", method));
    return unwrap(*response);
  }

  void notify(const std::string& method, const json& params) override {
    connection_.handle({{"jsonrpc", "2.0"}, {"method", method}, {"params", params}});
  }

 private:
  mcp::Connection connection_;
  int id_ = 0;
};

class HttpClient final : public McpClient {
 public:
  HttpClient(std::string base_url, double timeout_s) : client_(strip_rpc(base_url)) {
    const auto secs = static_cast<time_t>(timeout_s);
    const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
    client_.set_connection_timeout(secs, usecs);
    client_.set_read_timeout(secs, usecs);
    client_.set_write_timeout(secs, usecs);
    if (!client_.is_valid()) throw Error(Errc::InvalidArgument, fmt::format("bad server URL '{}'", base_url));
  }

  json request(const std::string& method, const json& params) override {
    const auto body = post({{"jsonrpc", "2.0"}, {"id", ++id_}, {"method", method}, {"params", params}});
    try {
      return unwrap(json::parse(body));
    } catch (const json::parse_error& e) {
      throw Error(Errc::IoFailure, fmt::format("server sent malformed JSON: {}", e.what()));
    }
  }

  void notify(const std::string& method, const json& params) override {
    post({{"jsonrpc", "2.0"}, {"method", method}, {"params", params}});
  }

 private:
  static std::string strip_rpc(std::string url) {
    while (!url.empty() && url.back() == '/') url.pop_back();
    if (url.ends_with("/rpc")) url.resize(url.size() - 4);
    return url;
  }

  std::string post(const json& envelope) {
    httplib::Headers headers;
    if (!session_.empty()) headers.emplace(mcp_session_header, session_);
    const auto res = client_.Post("/rpc", headers, envelope.dump(), "application/json");
    if (!res) throw Error(Errc::IoFailure, fmt::format("MCP server unreachable: {}", httplib::to_string(res.error())));
    if (res->status != 200 && res->status != 202) {
      throw Error(Errc::IoFailure, fmt::format("MCP server answered HTTP {}", res->status));
    }
    if (res->has_header(mcp_session_header)) session_ = res->get_header_value(mcp_session_header);
    return res->body;
  }

  static constexpr const char* mcp_session_header = "Mcp-Session-Id";
  httplib::Client client_;
  std::string session_;
  int id_ = 0;
};

}  // namespace

json McpClient::open(const std::string& client_name) {
  request("initialize", {{"protocolVersion", mcp::kProtocolVersion},
                         {"capabilities", json::object()},
                         {"clientInfo", {{"name", client_name}, {"version", mcp::kServerVersion}}}});
  notify("notifications/initialized", json::object());
  const auto listed = request("tools/list", json::object());
  if (!listed.contains("tools") || !listed["tools"].is_array()) {
    throw Error(Errc::IoFailure, "tools/list result has no tools array");
  }
  return listed["tools"];
}

Connector local_endpoint(mcp::ToolServer& tools) {
  return [&tools] { return std::unique_ptr<McpClient>(std::make_unique<LocalClient>(tools)); };
}

Connector http_endpoint(const std::string& base_url, double timeout_s) {
  return [base_url, timeout_s] { return std::unique_ptr<McpClient>(std::make_unique<HttpClient>(base_url, timeout_s)); };
}

std::optional<json> data_block(const json& content) {
  if (!content.is_array()) return std::nullopt;
  for (const auto& block : content) {
    if (block.value("type", "") != "text" || !block.contains("text") || !block["text"].is_string()) continue;
    const auto& text = block["text"].get_ref<const std::string&>();
    const auto open = text.find("```json\n");
    if (open == std::string::npos) continue;
    const auto begin = open + 8;
    const auto close = text.find("\n```", begin);
    if (close == std::string::npos) continue;
    try {
      return json::parse(text.substr(begin, close - begin));
    } catch (const json::parse_error&) {
      continue;
    }
  }
  return std::nullopt;
}

std::string content_text(const json& content) {
  std::string out;
  if (!content.is_array()) return out;
  for (const auto& block : content) {
    if (!out.empty()) out += "\n\n";
    const auto type = block.value("type", "");
    if (type == "text") {
      out += block.value("text", "");
    } else if (type == "image") {
      out += fmt::format("[{} image, {} base64 characters, not shown]", block.value("mimeType", "unknown"),
                         block.value("data", "").size());
    } else {
      out += fmt::format("[{} content]", type);
    }
  }
  return out;
}

}  // namespace bagpilot::bench
