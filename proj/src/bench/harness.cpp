// SPDX-License-Identifier: Apache-2.0
#include "bagpilot/bench/harness.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "bagpilot/error.hpp"

namespace bagpilot::bench {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string digest(const json& arguments) {
  const auto text = arguments.dump();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  for (unsigned int i = 0; i < 8 && i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

/// Image payloads are replaced by their size so transcripts stay small.
json elide_images(json content) {
  if (!content.is_array()) return content;
  for (auto& block : content) {
    if (block.value("type", "") == "image" && block.contains("data") && block["data"].is_string()) {
      block["data"] = fmt::format("<{} base64 characters>", block["data"].get_ref<const std::string&>().size());
    }
  }
  return content;
}

ToolOutcome call_tool(McpClient& client, const ToolCall& call) {
  ToolOutcome o{call, json::array(), false, {}, std::nullopt};
  try {
    const auto result = client.request("tools/call", {{"name", call.name}, {"arguments", call.arguments}});
    o.content = result.value("content", json::array());
    o.is_error = result.value("isError", false);
  } catch (const RpcFailure& e) {
    // Protocol-level rejections, such as an unknown tool name, count as a failed call.
    o.content = json::array({{{"type", "text"}, {"text", fmt::format("Error ({}): {}", e.code, e.what())}}});
    o.is_error = true;
  }
  o.text = content_text(o.content);
  o.data = data_block(o.content);
  return o;
}

CheckOutcome run_check(const SuccessCheck& check, const std::vector<ToolOutcome>& outcomes, McpClient& client,
                       json& transcript) {
  switch (check.kind) {
    case SuccessCheck::Kind::FileExists: {
      std::error_code ec;
      const bool ok = fs::is_regular_file(check.path, ec);
      return {ok, ok ? fmt::format("{} exists", check.path) : fmt::format("{} does not exist", check.path)};
    }
    case SuccessCheck::Kind::JsonFieldNear: {
      const ToolOutcome* last = nullptr;
      for (const auto& o : outcomes) {
        if (o.call.name == check.tool && !o.is_error) last = &o;
      }
      if (!last) return {false, fmt::format("no successful {} call", check.tool)};
      if (!last->data) return {false, fmt::format("{} returned no data block", check.tool)};
      const json::json_pointer ptr(check.field);
      if (!last->data->contains(ptr)) return {false, fmt::format("{} has no field {}", check.tool, check.field)};
      const auto& v = (*last->data)[ptr];
      double actual;
      if (v.is_number()) {
        actual = v.get<double>();
      } else if (v.is_array()) {
        actual = static_cast<double>(v.size());
      } else {
        return {false, fmt::format("{}{} is not a number or array", check.tool, check.field)};
      }
      const bool ok = std::abs(actual - check.value) <= check.tol;
      return {ok, fmt::format("{}{} = {} (expected {} +/- {})", check.tool, check.field, actual, check.value, check.tol)};
    }
    case SuccessCheck::Kind::BagTopics: {
      const auto o = call_tool(client, {"bag_info", {{"bag_path", check.path}}});
      transcript.push_back({{"event", "check_call"}, {"name", "bag_info"}, {"is_error", o.is_error}, {"text", o.text}});
      if (o.is_error || !o.data) return {false, fmt::format("bag_info on {} failed: {}", check.path, o.text)};
      std::set<std::string> topics;
      for (const auto& t : (*o.data)["topics"]) topics.insert(t["topic"].get<std::string>());
      const bool ok = topics == check.topics;
      return {ok, fmt::format("{} holds topics [{}], expected [{}]", check.path, fmt::join(topics, ", "),
                              fmt::join(check.topics, ", "))};
    }
  }
  return {false, "unknown check"};
}

}  // namespace

TaskResult run_task(const TaskSpec& task, Agent& agent, const Connector& server, const RunOptions& options) {
  TaskResult r;
  r.task_id = task.id;
  r.agent = agent.name();
  auto& tr = r.transcript;
  tr.push_back({{"event", "prompt"}, {"task", task.id}, {"agent", r.agent}, {"text", task.prompt},
                {"bag", task.bag.string()}});

  std::unique_ptr<McpClient> client;
  json tools;
  try {
    client = server();
    tools = client->open("bagpilot-bench");
    const auto setup = call_tool(*client, {"set_bag_path", {{"path", task.bag.string()}}});
    tr.push_back({{"event", "setup"}, {"name", "set_bag_path"}, {"is_error", setup.is_error}, {"text", setup.text}});
    if (setup.is_error) r.abort = fmt::format("could not select the task bag: {}", setup.text);
  } catch (const std::exception& e) {
    r.abort = fmt::format("MCP server: {}", e.what());
  }

  std::vector<ToolOutcome> all;
  if (!r.abort) {
    const auto started = Clock::now();
    bool answered = false;
    try {
      agent.begin({task.prompt, task.bag, tools});
      std::vector<ToolOutcome> last;
      for (int round = 1; round <= options.max_rounds && !answered; ++round) {
        auto turn = agent.next(last);
        last.clear();
        if (turn.calls.empty()) {
          r.answer = turn.answer;
          answered = true;
          tr.push_back({{"event", "answer"}, {"round", round}, {"text", turn.answer}});
          break;
        }
        for (const auto& call : turn.calls) {
          const auto t0 = Clock::now();
          auto o = call_tool(*client, call);
          const double ms = ms_since(t0);
          r.tools_called.push_back({call.name, digest(call.arguments), ms, o.is_error});
          tr.push_back({{"event", "tool_call"},
                        {"round", round},
                        {"name", call.name},
                        {"arguments", call.arguments},
                        {"latency_ms", ms},
                        {"is_error", o.is_error},
                        {"content", elide_images(o.content)}});
          last.push_back(o);
          all.push_back(std::move(o));
        }
      }
      if (!answered) r.abort = fmt::format("no final answer within {} rounds", options.max_rounds);
    } catch (const Error& e) {
      r.abort = fmt::format("{}: {}", e.code_name(), e.what());
    } catch (const std::exception& e) {
      r.abort = e.what();
    }
    r.total_latency_ms = ms_since(started);
  }

  if (!r.abort) {
    for (const auto& check : task.checks) {
      try {
        r.checks.push_back(run_check(check, all, *client, tr));
      } catch (const std::exception& e) {
        r.checks.push_back({false, e.what()});
      }
      tr.push_back({{"event", "check"}, {"kind", check_kind_name(check.kind)}, {"passed", r.checks.back().passed},
                    {"detail", r.checks.back().detail}});
    }
  }
  r.success = evaluate(r, task);
  r.reason = explain(r, task);
  tr.push_back({{"event", "result"}, {"success", outcome_name(r.success)}, {"reason", r.reason},
                {"total_latency_ms", r.total_latency_ms}, {"tool_count", r.tools_called.size()}});
  spdlog::info("{} {} ({} call(s), {:.1f} ms){}", task.id, outcome_name(r.success), r.tools_called.size(),
               r.total_latency_ms, r.reason.empty() ? "" : ": " + r.reason);
  return r;
}

std::vector<TaskResult> run_suite(const std::vector<TaskSpec>& tasks, Agent& agent, const Connector& server,
                                  const RunOptions& options) {
  std::vector<TaskResult> results;
  results.reserve(tasks.size());
  for (const auto& t : tasks) results.push_back(run_task(t, agent, server, options));
  return results;
}

}  // namespace bagpilot::bench
