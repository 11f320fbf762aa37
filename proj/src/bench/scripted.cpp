// SPDX-License-Identifier: Apache-2.0
// Scripted agents. Each recognizes the suite's prompts with a regular
// expression and replays a fixed plan; later steps may read earlier results.
#include <functional>
#include <regex>

#include <fmt/format.h>

#include "bagpilot/bench/agent.hpp"
#include "bagpilot/error.hpp"

namespace bagpilot::bench {

namespace {

constexpr const char* kOdom = "/odom";
constexpr const char* kScan = "/scan";
constexpr const char* kCmdVel = "/cmd_vel";
constexpr const char* kNum = R"(([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?))";

enum class Mode { Perfect, Verbose, Lazy };

using Results = std::vector<ToolOutcome>;
using Step = std::function<std::vector<ToolCall>(const Results&)>;

struct Plan {
  std::vector<Step> steps;
};

Step fixed(std::vector<ToolCall> calls) {
  return [calls = std::move(calls)](const Results&) { return calls; };
}

const json* data_of(const Results& r, std::string_view tool) {
  for (auto it = r.rbegin(); it != r.rend(); ++it) {
    if (it->call.name == tool && !it->is_error && it->data) return &*it->data;
  }
  return nullptr;
}

double num(const std::smatch& m, std::size_t i) { return std::stod(m[i].str()); }

std::regex pattern(const std::string& text) { return std::regex(text, std::regex::ECMAScript | std::regex::icase); }

std::optional<Plan> plan_for(const std::string& prompt, Mode mode) {
  const bool verbose = mode == Mode::Verbose;
  std::smatch m;

  if (std::regex_search(prompt, m, pattern(R"(what bags do you have in\s+(\S+?)\??\s*$)"))) {
    Plan p{{fixed({{"list_bags", {{"path", m[1].str()}}}})}};
    if (verbose) {
      p.steps.push_back([](const Results& r) -> std::vector<ToolCall> {
        const auto* d = data_of(r, "list_bags");
        if (!d || !d->contains("bags") || (*d)["bags"].empty()) return {};
        return {{"set_bag_path", {{"path", (*d)["bags"][0]["path"]}}}};
      });
    }
    return p;
  }

  if (std::regex_search(prompt, m, pattern(fmt::format(R"(plot the velocity.*from t={}\s*s to t={}\s*s)", kNum, kNum)))) {
    return Plan{{fixed({{"plot_timeseries",
                         {{"fields", {fmt::format("{}.twist.twist.linear.x", kOdom),
                                      fmt::format("{}.twist.twist.angular.z", kOdom)}},
                          {"start_time", num(m, 1)},
                          {"end_time", num(m, 2)},
                          {"title", "Linear and angular velocity"}}}})}};
  }

  if (std::regex_search(prompt, pattern("trajectory summary"))) {
    return Plan{{fixed({{"analyze_trajectory", {{"pose_topic", kOdom}}}})}};
  }

  if (std::regex_search(prompt, pattern("^plot the trajectory"))) {
    Plan p;
    if (verbose) p.steps.push_back(fixed({{"analyze_trajectory", {{"pose_topic", kOdom}}}}));
    p.steps.push_back(fixed({{"plot_2d", {{"pose_topic", kOdom}}}}));
    return p;
  }

  if (std::regex_search(prompt, m,
                        pattern(fmt::format(R"(close by this position:\s*\(x=\s*{},\s*y=\s*{}\),\s*within\s*{})", kNum,
                                            kNum, kNum)))) {
    Plan p{{fixed({{"search_messages",
                    {{"topic", kOdom},
                     {"condition_type", "near_position"},
                     {"value", fmt::format("{},{},{}", m[1].str(), m[2].str(), m[3].str())}}}})}};
    if (verbose) {
      p.steps.push_back([](const Results& r) -> std::vector<ToolCall> {
        const auto* d = data_of(r, "search_messages");
        if (!d || !d->value("closest_approach", json()).is_object()) return {};
        const double t = (*d)["closest_approach"]["time"].get<double>();
        return {{"get_messages_in_range", {{"topic", kOdom}, {"start_time", t - 0.5}, {"end_time", t + 0.5}}}};
      });
    }
    return p;
  }

  if (std::regex_search(prompt, m, pattern(fmt::format(R"(first time the robot sees an obstacle within\s*{})", kNum)))) {
    const double range = num(m, 1);
    Plan p{{fixed({{"search_messages",
                    {{"topic", kScan},
                     {"condition_type", "less_than"},
                     {"field", "ranges"},
                     {"value", m[1].str()},
                     {"limit", 1}}}})}};
    p.steps.push_back([range](const Results& r) -> std::vector<ToolCall> {
      const auto* d = data_of(r, "search_messages");
      if (!d || (*d)["matches"].empty()) return {};
      return {{"analyze_lidar_scan",
               {{"scan_topic", kScan}, {"time", (*d)["matches"][0]["time"]}, {"obstacle_threshold", range}}}};
    });
    return p;
  }

  if (std::regex_search(prompt, m, pattern(fmt::format(R"(plot the lidar scan when t={}\s*s.*histogram)", kNum)))) {
    std::vector<ToolCall> calls{
        {"plot_lidar_scan", {{"scan_topic", kScan}, {"time", num(m, 1)}}},
        {"plot_timeseries",
         {{"fields", {fmt::format("{}.linear.x", kCmdVel)}}, {"style", "histogram"}, {"title", "cmd_vel linear x"}}}};
    if (verbose) calls.push_back({"get_message_at_time", {{"topic", kScan}, {"time", num(m, 1)}}});
    return Plan{{fixed(std::move(calls))}};
  }

  if (std::regex_search(prompt, pattern("list all the frames"))) {
    return Plan{{fixed({{"get_tf_tree", json::object()}})}};
  }

  if (std::regex_search(prompt, m, pattern(R"(filter the rosbag.*new rosbag at\s+(\S+)\s+with only cmd_vel and odom)"))) {
    return Plan{{fixed({{"filter_bag", {{"output_path", m[1].str()}, {"topics", {kCmdVel, kOdom}}}}})}};
  }

  if (std::regex_search(prompt, m,
                        pattern(fmt::format(R"(maximum commanded linear vel.*between t={}\s*s and t={}\s*s)", kNum,
                                            kNum)))) {
    Plan p;
    if (verbose) p.steps.push_back(fixed({{"bag_info", json::object()}}));
    p.steps.push_back(fixed({{"get_messages_in_range",
                              {{"topic", kCmdVel}, {"start_time", num(m, 1)}, {"end_time", num(m, 2)},
                               {"max_messages", 100000}}}}));
    p.steps.push_back([](const Results& r) -> std::vector<ToolCall> {
      const auto* d = data_of(r, "get_messages_in_range");
      if (!d || (*d)["messages"].empty()) return {};
      const json* best = nullptr;
      for (const auto& msg : (*d)["messages"]) {
        if (!best || msg["data"]["linear"]["x"].get<double>() > (*best)["data"]["linear"]["x"].get<double>()) {
          best = &msg;
        }
      }
      return {{"get_message_at_time", {{"topic", kOdom}, {"time", (*best)["time"]}}}};
    });
    return p;
  }
  return std::nullopt;
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

class ScriptedAgent final : public Agent {
 public:
  ScriptedAgent(std::string name, Mode mode) : name_(std::move(name)), mode_(mode) {}

  std::string name() const override { return "scripted:" + name_; }

  void begin(const TaskContext& context) override {
    plan_ = mode_ == Mode::Lazy ? std::nullopt : plan_for(context.prompt, mode_);
    step_ = 0;
    seen_.clear();
    notes_.clear();
  }

  AgentTurn next(const Results& results) override {
    for (const auto& r : results) {
      seen_.push_back(r);
      notes_.push_back(fmt::format("{}: {}", r.call.name, first_line(r.text)));
    }
    if (mode_ == Mode::Lazy) return {{}, "The recording looks normal; no further analysis is needed."};
    if (!plan_) return {{}, "I do not know how to answer that request."};
    while (step_ < plan_->steps.size()) {
      auto calls = plan_->steps[step_++](seen_);
      if (!calls.empty()) return {std::move(calls), {}};
    }
    return {{}, notes_.empty() ? std::string("Nothing to report.") : fmt::format("{}", fmt::join(notes_, "\n"))};
  }

 private:
  std::string name_;
  Mode mode_;
  std::optional<Plan> plan_;
  std::size_t step_ = 0;
  Results seen_;
  std::vector<std::string> notes_;
};

}  // namespace

std::vector<std::string> scripted_agent_names() { return {"perfect", "verbose", "lazy"}; }

std::unique_ptr<Agent> scripted_agent(const std::string& name) {
  if (name == "perfect") return std::make_unique<ScriptedAgent>(name, Mode::Perfect);
  if (name == "verbose") return std::make_unique<ScriptedAgent>(name, Mode::Verbose);
  if (name == "lazy") return std::make_unique<ScriptedAgent>(name, Mode::Lazy);
  throw Error(Errc::InvalidArgument,
              fmt::format("unknown scripted agent '{}'; known: {}", name, fmt::join(scripted_agent_names(), ", ")));
}

std::unique_ptr<Agent> make_agent(const std::string& spec) {
  if (spec.starts_with("scripted:")) return scripted_agent(spec.substr(9));
  if (spec.starts_with("http:")) return http_chat_agent(load_http_chat_config(spec.substr(5)));
  throw Error(Errc::InvalidArgument, fmt::format("agent '{}' must be scripted:<name> or http:<config file>", spec));
}

}  // namespace bagpilot::bench
