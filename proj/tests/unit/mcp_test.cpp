// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "bagpilot/mcp/schema.hpp"
#include "bagpilot/msg/codec.hpp"
#include "bagpilot/mcp/server.hpp"
#include "bagpilot/synth/synth.hpp"
#include "testing.hpp"

using namespace bagpilot;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const bool kQuiet = [] {
  spdlog::set_level(spdlog::level::warn);
  return true;
}();

const fs::path& patrol() {
  static testing::TempDir dir;
  static const fs::path p = [] {
    auto s = synth::named_scenario("patrol_5m");
    s.duration = 60;
    std::erase_if(s.script, [](const synth::Command& c) { return c.end_s > 60; });
    std::erase_if(s.logs, [](const synth::LogEvent& e) { return e.time_s > 60; });
    s.rates.camera_hz = 1;
    const auto path = dir / "patrol.bag";
    synth::write_fixture(synth::simulate(s), path);
    return path;
  }();
  return p;
}

double bag_start() { return ns_to_seconds(*bag::BagHandle::open(patrol())->start_time()); }

json request(int id, const std::string& method, json params = json::object()) {
  return {{"jsonrpc", "2.0"}, {"id", id}, {"method", method}, {"params", std::move(params)}};
}

json call(int id, const std::string& tool, json args) {
  return request(id, "tools/call", {{"name", tool}, {"arguments", std::move(args)}});
}

struct Client {
  mcp::ToolServer tools;
  mcp::Connection conn{tools};
  int next = 100;

  explicit Client(std::optional<std::string> bags = patrol().string()) : tools(std::move(bags)) {
    REQUIRE(conn.handle(request(1, "initialize", {{"protocolVersion", "2024-11-05"}}))->contains("result"));
  }
  json result(const std::string& tool, json args) {
    const auto r = conn.handle(call(next++, tool, std::move(args)));
    REQUIRE(r);
    REQUIRE(r->contains("result"));
    return (*r)["result"];
  }
};

// The machine-readable block embedded in a text content block.
json embedded_json(const json& result) {
  const auto text = result["content"][0]["text"].get<std::string>();
  const auto open = text.find("```json\n");
  const auto close = text.rfind("\n```");
  REQUIRE(open != std::string::npos);
  return json::parse(text.substr(open + 8, close - open - 8));
}

std::string first_text(const json& result) { return result["content"][0]["text"].get<std::string>(); }

const std::set<std::string> kToolNames{"set_bag_path",       "list_bags",       "bag_info",
                                       "get_message_at_time", "get_messages_in_range", "search_messages",
                                       "filter_bag",         "analyze_trajectory",    "analyze_lidar_scan",
                                       "analyze_logs",       "get_tf_tree",           "get_image_at_time",
                                       "plot_timeseries",    "plot_2d",               "plot_lidar_scan"};

}  // namespace

TEST_CASE("initialize handshake and lifecycle") {
  mcp::ToolServer tools;
  mcp::Connection c(tools);
  auto r = c.handle(request(1, "tools/list"));
  CHECK((*r)["error"]["code"] == mcp::rpc::kNotInitialized);
  CHECK((*r)["error"]["message"] == "server not initialized");

  r = c.handle(request(2, "initialize", json::array()));
  CHECK((*r)["error"]["code"] == mcp::rpc::kInvalidParams);
  CHECK_FALSE(c.initialized());

  r = c.handle(request(3, "initialize", {{"protocolVersion", "2024-11-05"}, {"clientInfo", {{"name", "t"}}}}));
  CHECK((*r)["id"] == 3);
  CHECK((*r)["result"]["protocolVersion"] == "2024-11-05");
  CHECK((*r)["result"]["serverInfo"]["name"] == "rosbags-mcp-lite");
  CHECK((*r)["result"]["capabilities"]["tools"].is_object());
  CHECK_FALSE(c.handle({{"jsonrpc", "2.0"}, {"method", "notifications/initialized"}}));

  r = c.handle(request(4, "initialize", json::object()));
  CHECK((*r)["error"]["code"] == mcp::rpc::kInvalidRequest);
  CHECK(c.initialized());
  CHECK(c.handle(request(5, "tools/list"))->contains("result"));

  r = c.handle(request(6, "resources/list"));
  CHECK((*r)["error"]["code"] == mcp::rpc::kMethodNotFound);
  r = c.handle({{"jsonrpc", "1.0"}, {"id", "x"}, {"method", "tools/list"}});
  CHECK((*r)["error"]["code"] == mcp::rpc::kInvalidRequest);
  CHECK((*r)["id"] == "x");
  CHECK_FALSE(c.handle({{"jsonrpc", "2.0"}, {"method", "no/such/notification"}}));
  const auto parsed = json::parse(*c.handle_text("{not json"));
  CHECK(parsed["error"]["code"] == mcp::rpc::kParseError);
  CHECK(parsed["id"].is_null());
}

TEST_CASE("tools/list publishes the fifteen tools") {
  Client c;
  const auto r = c.conn.handle(request(2, "tools/list"));
  const auto& tools = (*r)["result"]["tools"];
  REQUIRE(tools.size() == 15);
  std::set<std::string> names;
  for (const auto& t : tools) {
    names.insert(t["name"].get<std::string>());
    CHECK(!t["description"].get<std::string>().empty());
    const auto& s = t["inputSchema"];
    CHECK(s["type"] == "object");
    REQUIRE(s["properties"].is_object());
    for (const auto& req : s["required"]) CHECK(s["properties"].contains(req.get<std::string>()));
    for (const auto& [k, p] : s["properties"].items()) {
      INFO(t["name"], ".", k);
      CHECK(p["type"].is_string());
      CHECK(p["description"].is_string());
    }
    // Empty arguments satisfy the schema iff nothing is required.
    CHECK(mcp::validate(s, json::object()).has_value() == !s["required"].empty());
  }
  CHECK(names == kToolNames);

  const auto expected = json::parse(R"js({
    "type": "object",
    "properties": {
      "topic": {"type": "string", "description": "ROS topic name"},
      "start_time": {"type": "number", "description": "Start unix timestamp in seconds"},
      "end_time": {"type": "number", "description": "End unix timestamp in seconds"},
      "max_messages": {"type": "integer", "description": "Maximum messages to return (default: 100)"},
      "bag_path": {"type": "string", "description": "Optional: specific bag file or directory to search"}
    },
    "required": ["topic", "start_time", "end_time"]
  })js");
  for (const auto& t : tools) {
    if (t["name"] == "get_messages_in_range") {
      CHECK(t["inputSchema"] == expected);
      CHECK(t["description"] == "Get all messages from a topic within a time range");
    }
  }
}

TEST_CASE("schema violations are tool errors naming the field") {
  Client c;
  auto r = c.result("get_messages_in_range", {{"topic", "/cmd_vel"}, {"end_time", bag_start() + 5}});
  CHECK(r["isError"] == true);
  CHECK(first_text(r).find("start_time") != std::string::npos);
  CHECK(first_text(r).find("number") != std::string::npos);

  r = c.result("get_messages_in_range", {{"topic", "/cmd_vel"}, {"start_time", "soon"}, {"end_time", 1.0}});
  CHECK(r["isError"] == true);
  CHECK(first_text(r).find("start_time") != std::string::npos);

  r = c.result("plot_timeseries", {{"fields", {"cmd_vel.linear.x", 3}}});
  CHECK(first_text(r).find("fields[1]") != std::string::npos);
  r = c.result("plot_timeseries", {{"fields", {"cmd_vel.linear.x"}}, {"style", "bars"}});
  CHECK(first_text(r).find("histogram") != std::string::npos);
  r = c.result("plot_2d", {{"width", 10}});
  CHECK(first_text(r).find("width") != std::string::npos);

  const auto unknown = c.conn.handle(call(9, "teleport", json::object()));
  CHECK((*unknown)["error"]["code"] == mcp::rpc::kMethodNotFound);
  CHECK((*unknown)["error"]["message"].get<std::string>().find("plot_2d") != std::string::npos);
  const auto no_name = c.conn.handle(request(10, "tools/call", {{"arguments", json::object()}}));
  CHECK((*no_name)["error"]["code"] == mcp::rpc::kInvalidParams);
}

TEST_CASE("schema gate: invalid arguments never reach a tool body") {
  Client c;
  std::mt19937_64 rng(3);
  const auto wrong_value = [&](const json& p) -> json {
    if (p.contains("enum")) return "not-an-option";
    const auto type = p["type"].get<std::string>();
    if (type == "integer") return rng() % 2 ? json(1.5) : json("7");
    if (type == "number") return rng() % 2 ? json("1.0") : json(true);
    if (type == "string") return rng() % 2 ? json(42) : json::array();
    if (type == "boolean") return "yes";
    if (type == "array") return rng() % 2 ? json("cmd_vel.linear.x") : json::array({1});
    return json(nullptr);
  };
  std::size_t attempts = 0;
  for (const auto& t : mcp::tool_descriptors()) {
    const auto& props = t.input_schema["properties"];
    std::vector<std::string> keys;
    for (const auto& [k, _] : props.items()) keys.push_back(k);
    for (int round = 0; round < 40; ++round) {
      json args = json::object();
      for (const auto& r : t.input_schema["required"]) args[r.get<std::string>()] = "placeholder";
      // Fill required fields with well-typed values, then break one thing.
      for (auto& [k, v] : args.items()) {
        const auto type = props[k]["type"].get<std::string>();
        if (type == "number") v = 1.0;
        if (type == "array") v = json::array({"cmd_vel.linear.x"});
        if (props[k].contains("enum")) v = props[k]["enum"][0];
      }
      const auto& victim = keys[rng() % keys.size()];
      const bool drop = t.input_schema["required"].size() > 0 && rng() % 3 == 0;
      if (drop) {
        args.erase(t.input_schema["required"][rng() % t.input_schema["required"].size()].get<std::string>());
      } else {
        auto bad = wrong_value(props[victim]);
        if (bad.is_null()) continue;
        args[victim] = bad;
      }
      REQUIRE(mcp::validate(t.input_schema, args).has_value());
      const auto before = c.tools.dispatch_count();
      const auto r = c.result(t.name, args);
      ++attempts;
      CHECK(r["isError"] == true);
      CHECK(c.tools.dispatch_count() == before);
      CHECK(first_text(r).find("InvalidArguments") != std::string::npos);
    }
  }
  CHECK(attempts > 400);
}

TEST_CASE("domain failures are isError results with actionable text") {
  Client c;
  for (const auto& [tool, args] : std::vector<std::pair<std::string, json>>{
           {"get_message_at_time", {{"topic", "/nope"}, {"time", bag_start()}}},
           {"get_message_at_time", {{"topic", "/odom"}, {"time", 5.0}}},
           {"analyze_lidar_scan", {{"scan_topic", "/scan"}, {"time", 1.0}}},
           {"search_messages", {{"topic", "/odom"}, {"condition_type", "near_position"}, {"value", "1,2"}}},
           {"analyze_trajectory", {{"pose_topic", "/cmd_vel"}}},
           {"bag_info", {{"bag_path", "/definitely/missing"}}},
           {"filter_bag", {{"output_path", patrol().string()}}}}) {
    const auto r = c.result(tool, args);
    INFO(tool, " ", args.dump());
    CHECK(r["isError"] == true);
    const auto text = first_text(r);
    CHECK(text.rfind("Error (", 0) == 0);
    CHECK(embedded_json(r)["error"]["message"].get<std::string>().size() > 10);
  }
  mcp::ToolServer unset;
  mcp::Connection conn(unset);
  conn.handle(request(1, "initialize"));
  const auto r = (*conn.handle(call(2, "bag_info", json::object())))["result"];
  CHECK(r["isError"] == true);
  CHECK(first_text(r).find("set_bag_path") != std::string::npos);
}

TEST_CASE("search near_position reports the closest approach") {
  Client c;
  const auto r = c.result("search_messages", {{"bag_path", patrol().string()},
                                              {"topic", "/odom"},
                                              {"condition_type", "near_position"},
                                              {"value", "1.4,-1.4,0.5"},
                                              {"limit", 10}});
  CHECK(r["isError"] == false);
  const auto text = first_text(r);
  CHECK(text.find("Closest approach") != std::string::npos);
  const auto j = embedded_json(r);
  const auto& closest = j["closest_approach"];
  // Brute force over the decoded poses.
  double best = INFINITY;
  const auto bag = bag::BagHandle::open(patrol());
  bag->for_each({.topics = std::set<std::string, std::less<>>{"/odom"}, .start_ns = {}, .end_ns = {}},
                [&](const bag::MessageView& m) {
                  const auto v = msg::decode(msg::builtin_schema(msg::kOdometry), m.payload);
                  const auto p = *msg::extract_pose2d(msg::kOdometry, v);
                  best = std::min(best, std::hypot(p.x - 1.4, p.y + 1.4));
                  return true;
                });
  CHECK(closest["distance"].get<double>() == doctest::Approx(best).epsilon(1e-12));
  CHECK(j["matches"].size() == 10);
  for (std::size_t i = 1; i < j["matches"].size(); ++i) {
    CHECK(j["matches"][i - 1]["distance"].get<double>() <= j["matches"][i]["distance"].get<double>());
  }
}

TEST_CASE("images and plots come back as image blocks") {
  Client c;
  const double t0 = bag_start();
  auto r = c.result("plot_timeseries", {{"fields", {"cmd_vel.linear.x", "odom.twist.twist.linear.x"}},
                                        {"start_time", t0},
                                        {"end_time", t0 + 30},
                                        {"title", "Commanded vs Actual"},
                                        {"width", 640},
                                        {"height", 480}});
  CHECK(r["isError"] == false);
  REQUIRE(r["content"].size() == 2);
  CHECK(r["content"][0]["type"] == "text");
  CHECK(first_text(r).rfind("I've created a time series plot", 0) == 0);
  CHECK(r["content"][1]["type"] == "image");
  CHECK(r["content"][1]["mimeType"] == "image/png");
  const auto png = base64_decode(r["content"][1]["data"].get<std::string>());
  const auto info = testing::inspect_png(png);
  CHECK(info.valid);
  CHECK(info.width == 640);
  CHECK(info.height == 480);
  CHECK(embedded_json(r)["series"].size() == 2);

  for (const auto& [tool, args] : std::vector<std::pair<std::string, json>>{
           {"plot_2d", json::object()}, {"plot_lidar_scan", {{"scan_topic", "scan"}, {"time", t0 + 3}}}}) {
    r = c.result(tool, args);
    CHECK(r["isError"] == false);
    CHECK(testing::inspect_png(base64_decode(r["content"][1]["data"].get<std::string>())).valid);
  }

  r = c.result("get_image_at_time", {{"image_topic", "/camera/image_raw/compressed"}, {"time", t0 + 2.2}});
  REQUIRE(r["content"].size() == 2);
  const auto img = base64_decode(r["content"][1]["data"].get<std::string>());
  const auto tiny = synth::tiny_png();
  CHECK(img == std::vector<std::uint8_t>(tiny.begin(), tiny.end()));
  CHECK(r["content"][1]["mimeType"] == "image/png");
}

TEST_CASE("every tool answers on the fixture") {
  Client c;
  const double t0 = bag_start();
  testing::TempDir out;
  const std::vector<std::pair<std::string, json>> calls{
      {"set_bag_path", {{"path", patrol().parent_path().string()}}},
      {"list_bags", json::object()},
      {"bag_info", json::object()},
      {"get_message_at_time", {{"topic", "cmd_vel"}, {"time", t0 + 1.02}}},
      {"get_messages_in_range", {{"topic", "/cmd_vel"}, {"start_time", t0}, {"end_time", t0 + 30}, {"max_messages", 50}}},
      {"search_messages", {{"topic", "/cmd_vel"}, {"condition_type", "greater_than"}, {"field", "angular.z"}, {"value", "0.4"}}},
      {"filter_bag", {{"topics", {"/cmd_vel", "/odom"}}, {"output_path", (out / "f.bag").string()}}},
      {"analyze_trajectory", {{"pose_topic", "/odom"}, {"include_waypoints", true}}},
      {"analyze_lidar_scan", {{"scan_topic", "/scan"}, {"time", t0 + 5}}},
      {"analyze_logs", {{"level", "WARN"}}},
      {"get_tf_tree", json::object()},
      {"get_image_at_time", {{"image_topic", "/camera/image_raw/compressed"}, {"time", t0 + 5}}},
      {"plot_timeseries", {{"fields", {"cmd_vel.linear.x"}}, {"style", "histogram"}}},
      {"plot_2d", {{"x_field", "odom.pose.pose.position.x"}, {"y_field", "odom.pose.pose.position.y"}}},
      {"plot_lidar_scan", {{"scan_topic", "/scan"}, {"time", t0 + 5}}}};
  std::set<std::string> seen;
  for (const auto& [tool, args] : calls) {
    const auto r = c.result(tool, args);
    INFO(tool, ": ", first_text(r));
    CHECK(r["isError"] == false);
    CHECK_FALSE(embedded_json(r).is_null());
    seen.insert(tool);
  }
  CHECK(seen == kToolNames);
  CHECK(fs::exists(out / "f.bag"));
}

TEST_CASE("session path persists across calls and null optionals are absent") {
  testing::TempDir dir;
  fs::copy_file(patrol(), dir / "a.bag");
  Client c(std::nullopt);
  CHECK(c.result("set_bag_path", {{"path", (dir / "a.bag").string()}})["isError"] == false);
  for (int i = 0; i < 10; ++i) {
    const auto r = c.result("bag_info", {{"bag_path", nullptr}});
    REQUIRE(r["isError"] == false);
    CHECK(fs::path(embedded_json(r)["path"].get<std::string>()) == fs::weakly_canonical(dir / "a.bag"));
  }
}

TEST_CASE("stdio transport: ordered responses and parse errors") {
  mcp::ToolServer tools(patrol().string());
  std::stringstream in, out;
  in << request(1, "initialize").dump() << "\n"
     << json{{"jsonrpc", "2.0"}, {"method", "notifications/initialized"}}.dump() << "\n"
     << "this is not json\n"
     << request(2, "tools/list").dump() << "\n\n"
     << call(3, "list_bags", json::object()).dump() << "\r\n";
  mcp::serve_stdio(tools, in, out);
  std::vector<json> lines;
  for (std::string line; std::getline(out, line);) lines.push_back(json::parse(line));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0]["id"] == 1);
  CHECK(lines[1]["error"]["code"] == mcp::rpc::kParseError);
  CHECK(lines[2]["id"] == 2);
  CHECK(lines[2]["result"]["tools"].size() == 15);
  CHECK(lines[3]["id"] == 3);
  CHECK(lines[3]["result"]["isError"] == false);
}

TEST_CASE("HTTP transport matches stdio") {
  mcp::ToolServer tools(patrol().string());
  mcp::HttpTransport http(tools);
  const int port = http.start("127.0.0.1", 0);
  httplib::Client client("127.0.0.1", port);

  const auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(health->body == "ok");

  const std::vector<json> script{request(1, "initialize"), request(2, "tools/list"),
                                 call(3, "list_bags", json::object()),
                                 call(4, "get_messages_in_range",
                                      {{"topic", "/cmd_vel"}, {"start_time", bag_start()}, {"end_time", bag_start() + 2}})};

  // Before initialize, HTTP behaves like a fresh connection.
  auto pre = client.Post("/rpc", request(7, "tools/list").dump(), "application/json");
  REQUIRE(pre);
  CHECK(json::parse(pre->body)["error"]["code"] == mcp::rpc::kNotInitialized);

  std::vector<json> via_http;
  httplib::Headers headers;
  for (const auto& env : script) {
    const auto res = client.Post("/rpc", headers, env.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
    if (headers.empty()) headers.emplace("Mcp-Session-Id", res->get_header_value("Mcp-Session-Id"));
    via_http.push_back(json::parse(res->body));
  }
  CHECK(!headers.begin()->second.empty());
  const auto note = client.Post("/rpc", headers, json{{"jsonrpc", "2.0"}, {"method", "notifications/initialized"}}.dump(),
                                "application/json");
  CHECK(note->status == 202);
  const auto bad = client.Post("/rpc", headers, "{", "application/json");
  CHECK(json::parse(bad->body)["error"]["code"] == mcp::rpc::kParseError);

  mcp::Connection stdio_like(tools);
  for (std::size_t i = 0; i < script.size(); ++i) {
    const auto direct = stdio_like.handle(script[i]);
    CHECK((*direct)["result"] == via_http[i]["result"]);
    CHECK(via_http[i]["id"] == script[i]["id"]);
  }
  http.stop();
}
