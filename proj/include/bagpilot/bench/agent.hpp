// SPDX-License-Identifier: Apache-2.0
// Agents that turn a task prompt into MCP tool calls.
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace bagpilot::bench {

using nlohmann::json;

struct ToolCall {
  std::string name;
  json arguments = json::object();
};

struct ToolOutcome {
  ToolCall call;
  json content = json::array();
  bool is_error = false;
  std::string text;
  std::optional<json> data;
};

/// One agent turn: tool calls to run, or a final answer when `calls` is empty.
struct AgentTurn {
  std::vector<ToolCall> calls;
  std::string answer;
};

struct TaskContext {
  std::string prompt;
  std::filesystem::path bag;
  json tools = json::array();  // tools/list result
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual void begin(const TaskContext& context) = 0;
  /// `results` holds the outcomes of the previous turn's calls, in order.
  virtual AgentTurn next(const std::vector<ToolOutcome>& results) = 0;
};

/// Deterministic agents keyed on the prompt text:
///  perfect  issues exactly the required calls,
///  verbose  adds one extra call on the tasks where extra tools were observed,
///  lazy     answers without calling anything.
/// Throws Error(InvalidArgument) for other names.
std::unique_ptr<Agent> scripted_agent(const std::string& name);
std::vector<std::string> scripted_agent_names();

struct HttpChatConfig {
  std::string endpoint;  // full chat-completions URL
  std::string model;
  std::string api_key_env;  // environment variable holding the key; empty for none
  double timeout_s = 120.0;
  std::optional<double> temperature;
  std::string system_prompt;
};

/// Throws Error(InvalidArgument) on a malformed config.
HttpChatConfig load_http_chat_config(const std::filesystem::path& file);
HttpChatConfig http_chat_config_from_json(const json& j);

/// OpenAI-compatible chat-completions loop with tools from tools/list.
/// Transport failures throw Error(AgentTransport).
std::unique_ptr<Agent> http_chat_agent(HttpChatConfig config);

/// "scripted:<name>" or "http:<config file>".
std::unique_ptr<Agent> make_agent(const std::string& spec);

}  // namespace bagpilot::bench
