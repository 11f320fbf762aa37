// SPDX-License-Identifier: Apache-2.0
// Chat-completions agent: the model sees the server's tools as functions and
// the harness relays each tool call to MCP.
#include <cstdlib>
#include <fstream>
#include <regex>

#include <fmt/format.h>
#include <httplib.h>

#include "bagpilot/bench/agent.hpp"
#include "bagpilot/bench/client.hpp"
#include "bagpilot/error.hpp"

namespace bagpilot::bench {

namespace {

constexpr const char* kDefaultSystemPrompt =
    "You analyze robot recordings (ROS bag files) with the provided tools. Call tools to gather facts, then answer "
    "the user's question concisely. Times are Unix timestamps in seconds.";

[[noreturn]] void bad_config(const std::string& what) { throw Error(Errc::InvalidArgument, "http agent config: " + what); }

class HttpChatAgent final : public Agent {
 public:
  explicit HttpChatAgent(HttpChatConfig config) : config_(std::move(config)) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, url)) bad_config(fmt::format("endpoint '{}' is not an http(s) URL", config_.endpoint));
    base_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/";
    if (!config_.api_key_env.empty()) {
      const char* key = std::getenv(config_.api_key_env.c_str());
      if (!key || !*key) bad_config(fmt::format("environment variable {} is not set", config_.api_key_env));
      api_key_ = key;
    }
  }

  std::string name() const override { return "http:" + config_.model; }

  void begin(const TaskContext& context) override {
    const auto system = config_.system_prompt.empty() ? std::string(kDefaultSystemPrompt) : config_.system_prompt;
    messages_ = json::array({{{"role", "system"}, {"content", fmt::format("{} The active bag is {}.", system,
                                                                          context.bag.string())}},
                             {{"role", "user"}, {"content", context.prompt}}});
    functions_ = json::array();
    for (const auto& t : context.tools) {
      functions_.push_back({{"type", "function"},
                            {"function",
                             {{"name", t.value("name", "")},
                              {"description", t.value("description", "")},
                              {"parameters", t.value("inputSchema", json::object())}}}});
    }
    pending_.clear();
  }

  AgentTurn next(const std::vector<ToolOutcome>& results) override {
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      std::string text = i < results.size() ? content_text(results[i].content) : "Tool was not run.";
      if (i < results.size() && results[i].is_error) text = "Tool error: " + text;
      messages_.push_back({{"role", "tool"}, {"tool_call_id", pending_[i]}, {"content", text}});
    }
    pending_.clear();

    json body{{"model", config_.model}, {"messages", messages_}};
    if (!functions_.empty()) {
      body["tools"] = functions_;
      body["tool_choice"] = "auto";
    }
    if (config_.temperature) body["temperature"] = *config_.temperature;

    const auto reply = post(body);
    if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty() ||
        !reply["choices"][0].contains("message")) {
      throw Error(Errc::AgentTransport, "chat response has no choices[0].message");
    }
    auto message = reply["choices"][0]["message"];
    message["role"] = "assistant";
    if (!message.contains("content")) message["content"] = nullptr;
    messages_.push_back(message);

    AgentTurn turn;
    if (message.contains("tool_calls") && message["tool_calls"].is_array()) {
      for (const auto& tc : message["tool_calls"]) {
        const auto& fn = tc.value("function", json::object());
        ToolCall call{fn.value("name", ""), json::object()};
        const auto raw = fn.value("arguments", json());
        if (raw.is_string()) {
          // Unparseable arguments go through as a string so the server's
          // schema check reports the problem back to the model.
          call.arguments = json::parse(raw.get<std::string>(), nullptr, false);
          if (call.arguments.is_discarded()) call.arguments = raw;
        } else if (raw.is_object()) {
          call.arguments = raw;
        }
        pending_.push_back(tc.value("id", fmt::format("call_{}", pending_.size())));
        turn.calls.push_back(std::move(call));
      }
    }
    if (turn.calls.empty()) turn.answer = message["content"].is_string() ? message["content"].get<std::string>() : "";
    return turn;
  }

 private:
  json post(const json& body) {
    httplib::Client client(base_);
    const auto secs = static_cast<time_t>(config_.timeout_s);
    const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    const auto res = client.Post(path_, headers, body.dump(-1, ' ', false, json::error_handler_t::replace),
                                 "application/json");
    if (!res) throw Error(Errc::AgentTransport, fmt::format("{}: {}", config_.endpoint, httplib::to_string(res.error())));
    if (res->status != 200) {
      throw Error(Errc::AgentTransport,
                  fmt::format("{} answered HTTP {}: {}", config_.endpoint, res->status, res->body.substr(0, 300)));
    }
    auto reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) throw Error(Errc::AgentTransport, "chat response is not JSON");
    return reply;
  }

  HttpChatConfig config_;
  std::string base_;
  std::string path_;
  std::string api_key_;
  json messages_ = json::array();
  json functions_ = json::array();
  std::vector<std::string> pending_;
};

}  // namespace

HttpChatConfig http_chat_config_from_json(const json& j) {
  if (!j.is_object()) bad_config("must be a JSON object");
  HttpChatConfig c;
  auto str = [&](const char* key, bool required) {
    if (!j.contains(key)) {
      if (required) bad_config(fmt::format("'{}' is required", key));
      return std::string();
    }
    if (!j[key].is_string()) bad_config(fmt::format("'{}' must be a string", key));
    return j[key].get<std::string>();
  };
  c.endpoint = str("endpoint", true);
  c.model = str("model", true);
  c.api_key_env = str("api_key_env", false);
  c.system_prompt = str("system_prompt", false);
  if (j.contains("timeout_s")) {
    if (!j["timeout_s"].is_number() || !(j["timeout_s"].get<double>() > 0)) bad_config("'timeout_s' must be positive");
    c.timeout_s = j["timeout_s"].get<double>();
  }
  if (j.contains("temperature")) {
    if (!j["temperature"].is_number()) bad_config("'temperature' must be a number");
    c.temperature = j["temperature"].get<double>();
  }
  return c;
}

HttpChatConfig load_http_chat_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) bad_config(fmt::format("cannot open '{}'", file.string()));
  const auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) bad_config(fmt::format("'{}' is not valid JSON", file.string()));
  return http_chat_config_from_json(j);
}

std::unique_ptr<Agent> http_chat_agent(HttpChatConfig config) {
  return std::make_unique<HttpChatAgent>(std::move(config));
}

}  // namespace bagpilot::bench
