// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one timed PASS/FAIL line per criterion. Every expected value
// comes from an independent computation (linear scans, brute-force predicates,
// the simulator's ground truth) or from a hand-written golden file.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "bagpilot/analysis/analysis.hpp"
#include "bagpilot/bench/harness.hpp"
#include "bagpilot/error.hpp"
#include "bagpilot/filter/filter.hpp"
#include "bagpilot/mcp/schema.hpp"
#include "bagpilot/mcp/server.hpp"
#include "bagpilot/msg/builtin.hpp"
#include "bagpilot/msg/codec.hpp"
#include "bagpilot/plot/plot.hpp"
#include "bagpilot/store/store.hpp"
#include "bagpilot/synth/synth.hpp"
#include "testing.hpp"

using namespace bagpilot;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path g_golden_dir = BAGPILOT_GOLDEN_DIR;
bool g_update_golden = false;

/// Collects failed expectations for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    ++count_;
    if (!ok) failures_.push_back(what);
  }
  template <typename... Args>
  void expectf(bool ok, fmt::format_string<Args...> f, Args&&... args) {
    ++count_;
    if (!ok) failures_.push_back(fmt::format(f, std::forward<Args>(args)...));
  }
  bool ok() const { return failures_.empty(); }
  std::size_t count() const { return count_; }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::size_t count_ = 0;
  std::vector<std::string> failures_;
};

struct Criterion {
  std::string name;
  double budget_s;
  std::function<void(Check&)> body;
};

fs::path make_fixture(const fs::path& dir, const synth::Scenario& s) {
  const auto path = dir / (s.name + ".bag");
  if (!fs::exists(path)) synth::write_fixture(synth::simulate(s), path);
  return path;
}

fs::path make_fixture(const fs::path& dir, const std::string& name) {
  return make_fixture(dir, synth::named_scenario(name));
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json request(int id, const std::string& method, json params = json::object()) {
  return {{"jsonrpc", "2.0"}, {"id", id}, {"method", method}, {"params", std::move(params)}};
}

json tool_call(int id, const std::string& name, json args) {
  return request(id, "tools/call", {{"name", name}, {"arguments", std::move(args)}});
}

struct Tagged {
  std::string topic;
  TimeNs time_ns;
  std::vector<std::uint8_t> payload;
  bool operator==(const Tagged&) const = default;
};

std::vector<Tagged> read_all(const fs::path& path) {
  const auto bag = bag::BagHandle::open(path);
  std::map<std::uint32_t, std::string> topic_of;
  for (const auto& c : bag->connections()) topic_of[c.conn_id] = c.topic;
  std::vector<Tagged> out;
  for (auto& m : bag::linear_scan(path)) out.push_back({topic_of.at(m.conn_id), m.time_ns, std::move(m.payload)});
  std::stable_sort(out.begin(), out.end(), [](const Tagged& a, const Tagged& b) { return a.time_ns < b.time_ns; });
  return out;
}

// --- tool surface -------------------------------------------------------------

void tool_surface(Check& c) {
  const auto golden = json::parse(read_text(g_golden_dir / "tool_surface.json"));
  mcp::ToolServer tools;
  mcp::Connection conn(tools);
  conn.handle(request(1, "initialize"));
  const auto listed = (*conn.handle(request(2, "tools/list")))["result"]["tools"];

  std::map<std::string, std::string> want, got;
  for (const auto& t : golden["tools"]) want[t["name"]] = t["description"];
  for (const auto& t : listed) {
    const auto name = t["name"].get<std::string>();
    c.expectf(!got.count(name), "{} listed twice", name);
    got[name] = t["description"];
    c.expectf(got[name].find('\n') == std::string::npos, "{} description spans lines", name);
  }
  c.expectf(want.size() == 15, "golden lists {} tools", want.size());
  c.expectf(listed.size() == 15, "tools/list returned {} tools", listed.size());
  for (const auto& [name, desc] : want) {
    if (!got.count(name)) {
      c.expect(false, "missing tool " + name);
    } else {
      c.expectf(got[name] == desc, "{}: description '{}' != '{}'", name, got[name], desc);
    }
  }
  for (const auto& [name, _] : got) c.expectf(want.count(name) == 1, "unexpected tool {}", name);

  const auto& want_schema = golden["get_messages_in_range"];
  for (const auto& t : listed) {
    if (t["name"] != "get_messages_in_range") continue;
    const auto& s = t["inputSchema"];
    c.expect(s["type"] == "object", "schema type is not object");
    c.expectf(s["properties"].size() == want_schema["properties"].size(), "schema has {} properties, golden has {}",
              s["properties"].size(), want_schema["properties"].size());
    for (const auto& [k, p] : want_schema["properties"].items()) {
      c.expectf(s["properties"].contains(k) && s["properties"][k] == p, "property {} differs: {}", k,
                s["properties"].value(k, json()).dump());
    }
    c.expectf(s["required"] == want_schema["required"], "required list {} != {}", s["required"].dump(), want_schema["required"].dump());
  }
}

// --- bag round trip -----------------------------------------------------------

std::vector<bag::RawMessage> reference_stream(const std::vector<bag::RawMessage>& scan,
                                              const std::vector<bag::ConnectionRecord>& conns,
                                              const bag::MessageQuery& q) {
  std::map<std::uint32_t, std::string> topic_of;
  for (const auto& c : conns) topic_of[c.conn_id] = c.topic;
  std::vector<bag::RawMessage> out;
  for (const auto& m : scan) {
    if (q.topics && !q.topics->count(topic_of.at(m.conn_id))) continue;
    if (q.start_ns && m.time_ns < *q.start_ns) continue;
    if (q.end_ns && m.time_ns > *q.end_ns) continue;
    out.push_back(m);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.time_ns < b.time_ns; });
  return out;
}

void bag_round_trip(Check& c) {
  testing::TempDir dir;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::uint32_t> chunk(256, 64 * 1024);
  std::vector<testing::RandomBag> inputs;
  for (int i = 0; i < 100; ++i) {
    auto input = testing::random_bag(rng, 300);
    const auto path = dir / fmt::format("rt{}.bag", i);
    bag::write_bag(path, input.connections, input.messages, {.chunk_size = chunk(rng)});
    const auto bag = bag::BagHandle::open(path);
    c.expectf(bag->stream_messages() == input.messages, "bag {}: payloads differ after the round trip", i);
    c.expectf(bag->message_count() == input.messages.size(), "bag {}: index total {} != {}", i,
              bag->message_count(), input.messages.size());
    std::map<std::string, std::uint64_t> per_topic;
    std::map<std::uint32_t, std::string> topic_of;
    for (const auto& conn : input.connections) topic_of[conn.conn_id] = conn.topic;
    for (const auto& m : input.messages) ++per_topic[topic_of[m.conn_id]];
    for (const auto& [topic, n] : per_topic) {
      c.expectf(bag->message_count(topic) == n, "bag {}: {} count {} != {}", i, topic, bag->message_count(topic), n);
    }
    c.expectf(bag::linear_scan(path).size() == input.messages.size(), "bag {}: linear scan size", i);
    inputs.push_back(std::move(input));
  }
  for (int q = 0; q < 50; ++q) {
    const auto i = static_cast<std::size_t>(rng() % inputs.size());
    const auto& input = inputs[i];
    const auto path = dir / fmt::format("rt{}.bag", i);
    bag::MessageQuery query;
    if (!input.messages.empty() && rng() % 4 != 0) {
      const auto a = input.messages[rng() % input.messages.size()].time_ns;
      const auto b = input.messages[rng() % input.messages.size()].time_ns;
      query.start_ns = std::min(a, b);
      query.end_ns = std::max(a, b);
    }
    if (rng() % 2 && !input.connections.empty()) {
      query.topics = std::set<std::string, std::less<>>{input.connections[rng() % input.connections.size()].topic};
    }
    const auto got = bag::BagHandle::open(path)->stream_messages(query);
    c.expectf(got == reference_stream(bag::linear_scan(path), input.connections, query),
              "query {} on bag {}: index stream differs from the linear scan", q, i);
  }
}

// --- codec --------------------------------------------------------------------

void codec_properties(Check& c) {
  testing::TempDir dir;
  std::size_t fixture_messages = 0;
  std::set<std::string> types_seen;
  for (const auto& name : synth::scenario_names()) {
    const auto path = make_fixture(dir.path(), name);
    const auto bag = bag::BagHandle::open(path);
    std::map<std::uint32_t, const bag::ConnectionRecord*> conns;
    for (const auto& conn : bag->connections()) conns[conn.conn_id] = &conn;
    for (const auto& m : bag::linear_scan(path)) {
      const auto* conn = conns.at(m.conn_id);
      const auto set = msg::parse_definition(conn->message_definition, conn->type_name);
      const auto bytes = msg::encode(set, msg::decode(set, m.payload));
      c.expectf(bytes == m.payload, "{} on {} in {}: re-encoded bytes differ", conn->type_name, conn->topic, name);
      types_seen.insert(conn->type_name);
      ++fixture_messages;
    }
  }
  c.expectf(fixture_messages > 1000, "only {} fixture messages", fixture_messages);
  for (auto t : {msg::kOdometry, msg::kTwist, msg::kLaserScan, msg::kTfMessage, msg::kLog}) {
    c.expectf(types_seen.count(std::string(t)) == 1, "fixtures carry no {}", t);
  }

  std::mt19937_64 rng(99);
  for (int i = 0; i < 1000; ++i) {
    const auto rc = testing::random_case(rng);
    const auto set = msg::parse_definition(rc.definition, rc.root_type());
    const auto payload = testing::random_payload(rc, rng);
    const auto bytes = msg::encode(set, msg::decode(set, payload));
    c.expectf(bytes == payload, "random case {}: re-encoded bytes differ for\n{}", i, rc.definition);
  }

  // Topic-qualified paths resolve on the built-in Odometry and Twist layouts.
  const auto path = make_fixture(dir.path(), "straight_line");
  const auto bag = bag::BagHandle::open(path);
  const std::map<std::string, std::pair<std::string, double>> expected{
      {"odom.twist.twist.linear.x", {"/odom", 0.5}}, {"cmd_vel.angular.z", {"/cmd_vel", 0.0}}};
  for (const auto& [qualified, want] : expected) {
    const auto ref = plot::resolve_field(*bag, qualified);
    c.expectf(ref.topic == want.first, "{} resolved to topic {}", qualified, ref.topic);
    const auto* conn = bag->connections_for_topic(ref.topic).front();
    const auto& schema = msg::builtin_schema(conn->type_name);
    const auto msgs = bag->stream_messages({.topics = std::set<std::string, std::less<>>{ref.topic}, .start_ns = {},
                                            .end_ns = {}});
    const auto value = msg::to_real(msg::get_field(msg::decode(schema, msgs.at(msgs.size() / 2).payload),
                                                   msg::FieldPath::parse(ref.field)));
    c.expectf(value && std::abs(*value - want.second) <= 1e-9, "{} mid-bag value {}", qualified, value.value_or(NAN));
  }
}

// --- trajectory ---------------------------------------------------------------

void trajectory_oracle(Check& c) {
  testing::TempDir dir;
  const auto line = analysis::analyze_trajectory(*bag::BagHandle::open(make_fixture(dir.path(), "straight_line")), "/odom");
  c.expectf(std::abs(line.total_distance - 5.0) <= 0.01 * 5.0, "straight line total_distance {}", line.total_distance);
  c.expectf(std::abs(line.mean_speed - 0.5) <= 0.02 * 0.5, "straight line mean_speed {}", line.mean_speed);

  const auto circle = analysis::analyze_trajectory(*bag::BagHandle::open(make_fixture(dir.path(), "circle")), "/odom");
  c.expectf(std::abs(circle.x_span - 4.0) <= 1e-3, "circle x_span {}", circle.x_span);
  c.expectf(std::abs(circle.y_span - 4.0) <= 1e-3, "circle y_span {}", circle.y_span);
  c.expect(circle.x_span == circle.x_max - circle.x_min, "x_span != x_max - x_min");
  c.expect(circle.y_span == circle.y_max - circle.y_min, "y_span != y_max - y_min");

  // Extents printed to millimetres give the printed spans
  // to within the rounding of the two ends.
  std::vector<analysis::PoseSample> poses;
  for (const auto& [t, x, y] : std::vector<std::tuple<double, double, double>>{
           {0, -2.074, 0.3}, {1, 2.168, -2.017}, {2, 0.5, 2.000}}) {
    poses.push_back({seconds_to_ns(t), {x, y, 0.0}});
  }
  const auto r = analysis::trajectory_from_poses(poses);
  c.expectf(std::abs(r.x_span - 4.243) <= 1e-3 + 1e-12, "printed x extents give span {}", r.x_span);
  c.expectf(std::abs(r.y_span - 4.017) <= 1e-3 + 1e-12, "printed y extents give span {}", r.y_span);
  c.expect(r.x_span == r.x_max - r.x_min && r.y_span == r.y_max - r.y_min, "span identity on printed extents");
}

// --- search -------------------------------------------------------------------

void search_oracle(Check& c) {
  testing::TempDir dir;
  std::mt19937_64 rng(11);
  int queries = 0;
  for (const auto& name : {"patrol_5m", "circle"}) {
    const auto path = make_fixture(dir.path(), name);
    const auto bag = bag::BagHandle::open(path);
    const auto& schema = msg::builtin_schema(msg::kOdometry);
    const auto* odom = bag->connections_for_topic("/odom").front();
    struct P {
      TimeNs t;
      double x, y;
    };
    std::vector<P> poses;
    for (const auto& m : bag::linear_scan(path)) {
      if (m.conn_id != odom->conn_id) continue;
      const auto j = msg::to_json(msg::decode(schema, m.payload));
      poses.push_back({m.time_ns, j["pose"]["pose"]["position"]["x"].get<double>(),
                       j["pose"]["pose"]["position"]["y"].get<double>()});
    }
    std::stable_sort(poses.begin(), poses.end(), [](const P& a, const P& b) { return a.t < b.t; });
    std::uniform_real_distribution<double> coord(-2.5, 2.5), rad(0.05, 1.0);
    for (int i = 0; i < 10; ++i, ++queries) {
      const double x = coord(rng), y = coord(rng), radius = rad(rng);
      const auto r = store::search_messages(
          *bag, "/odom", {store::ConditionType::NearPosition, std::nullopt, fmt::format("{},{},{}", x, y, radius)},
          1'000'000);
      std::vector<std::pair<double, TimeNs>> want;
      double best = INFINITY;
      TimeNs best_t = 0;
      for (const auto& p : poses) {
        const double d = std::hypot(p.x - x, p.y - y);
        if (d <= radius) want.emplace_back(d, p.t);
        if (d < best) best = d, best_t = p.t;
      }
      std::stable_sort(want.begin(), want.end(), [](auto& a, auto& b) { return a.first < b.first; });
      bool same = r.matches.size() == want.size();
      for (std::size_t k = 0; same && k < want.size(); ++k) {
        same = r.matches[k].time_ns == want[k].second && r.matches[k].distance &&
               std::abs(*r.matches[k].distance - want[k].first) <= 1e-9;
      }
      c.expectf(same, "{} query ({:.3f},{:.3f},{:.3f}): {} matches, expected {}", name, x, y, radius,
                r.matches.size(), want.size());
      c.expectf(r.closest && r.closest->time_ns == best_t && std::abs(r.closest->distance - best) <= 1e-9,
                "{} query ({:.3f},{:.3f}): closest approach differs", name, x, y);
    }
  }
  c.expectf(queries == 20, "{} query points", queries);

  const auto path = make_fixture(dir.path(), "patrol_5m");
  const auto truth = json::parse(read_text(synth::truth_path(path)));
  std::vector<double> expected;
  for (const auto& row : truth["cmd_vel"]) {
    if (row[2].get<double>() > 0.4) expected.push_back(row[0].get<double>());
  }
  const auto r = store::search_messages(*bag::BagHandle::open(path), "/cmd_vel",
                                        {store::ConditionType::GreaterThan, "angular.z", "0.4"}, 1'000'000);
  bool same = r.matches.size() == expected.size() && !expected.empty();
  for (std::size_t k = 0; same && k < expected.size(); ++k) {
    same = std::abs(ns_to_seconds(r.matches[k].time_ns) - expected[k]) <= 1e-6;
  }
  c.expectf(same, "greater_than angular.z 0.4: {} matches, script has {}", r.matches.size(), expected.size());
}

// --- lidar --------------------------------------------------------------------

void lidar_oracle(Check& c) {
  testing::TempDir dir;
  const auto bag = bag::BagHandle::open(make_fixture(dir.path(), "pillar_room"));
  const double start = ns_to_seconds(*bag->start_time());
  // Pillar of radius 0.2 centred 0.8 m ahead: nearest surface at 0.6 m.
  constexpr double kAnalytic = 0.8 - 0.2;
  for (double dt : {0.0, 0.5, 1.0, 1.5}) {
    const auto r = analysis::analyze_lidar_scan(*bag, "/scan", start + dt);
    c.expectf(r.obstacles.size() == 1, "t+{}: {} obstacles", dt, r.obstacles.size());
    if (r.obstacles.empty()) continue;
    const double beam_resolution = r.angle_increment * kAnalytic;
    c.expectf(std::abs(r.obstacles[0].min_range - kAnalytic) <= beam_resolution, "t+{}: min_range {}", dt,
              r.obstacles[0].min_range);
    c.expectf(std::abs(r.obstacles[0].bearing_of_min) <= r.angle_increment, "t+{}: bearing {}", dt,
              r.obstacles[0].bearing_of_min);
  }
}

// --- filter -------------------------------------------------------------------

std::vector<Tagged> brute_force(const std::vector<Tagged>& in, const filter::FilterSpec& spec) {
  std::vector<Tagged> out;
  std::map<std::string, double> last;
  for (const auto& m : in) {
    if (spec.topics && !spec.topics->count(m.topic)) continue;
    const double t = ns_to_seconds(m.time_ns);
    if (spec.start_time && t < *spec.start_time) continue;
    if (spec.end_time && t > *spec.end_time) continue;
    if (spec.max_rate_hz) {
      if (last.count(m.topic) && t - last[m.topic] < 1.0 / *spec.max_rate_hz - 1e-9) continue;
      last[m.topic] = t;
    }
    out.push_back(m);
  }
  return out;
}

void filter_oracle(Check& c) {
  testing::TempDir dir;
  auto s = synth::named_scenario("patrol_5m");
  s.name = "patrol_60s";
  s.duration = 60;
  std::erase_if(s.script, [](const synth::Command& cmd) { return cmd.end_s > 60; });
  std::erase_if(s.logs, [](const synth::LogEvent& e) { return e.time_s > 60; });
  s.rates.odom_hz = 50;
  const auto source = make_fixture(dir.path(), s);
  const auto input = read_all(source);
  const auto topics = bag::BagHandle::open(source)->topics();
  std::mt19937_64 rng(5);
  for (int i = 0; i < 24; ++i) {
    filter::FilterSpec spec{.source = source, .destination = dir / fmt::format("f{}.bag", i), .topics = {},
                            .start_time = {}, .end_time = {}, .max_rate_hz = {}};
    // Each of topic, time and rate is exercised alone and combined.
    const int mode = i % 8;
    if (mode & 1) {
      std::set<std::string> pick;
      for (const auto& t : topics) {
        if (rng() % 2) pick.insert(t);
      }
      if (pick.empty()) pick.insert(topics[rng() % topics.size()]);
      spec.topics = pick;
    }
    if (mode & 2) {
      spec.start_time = ns_to_seconds(input[rng() % input.size()].time_ns);
      spec.end_time = *spec.start_time + std::uniform_real_distribution<double>(0, 40)(rng);
    }
    if (mode & 4 || mode == 0) spec.max_rate_hz = std::uniform_real_distribution<double>(0.5, 30)(rng);
    filter::filter_bag(spec);
    const auto got = read_all(spec.destination);
    const auto want = brute_force(input, spec);
    c.expectf(got == want, "spec {}: {} messages, brute force gives {}", i, got.size(), want.size());
    if (spec.max_rate_hz) {
      std::map<std::string, TimeNs> last;
      for (const auto& m : got) {
        if (last.count(m.topic)) {
          const double gap = static_cast<double>(m.time_ns - last[m.topic]) * 1e-9;
          c.expectf(gap >= 1.0 / *spec.max_rate_hz - 1e-9, "spec {}: {} gap {} under the {} Hz bound", i, m.topic, gap,
                    *spec.max_rate_hz);
        }
        last[m.topic] = m.time_ns;
      }
    }
    std::set<std::string> surviving;
    for (const auto& m : want) surviving.insert(m.topic);
    const auto reopened = bag::BagHandle::open(spec.destination)->topics();
    c.expectf(std::set<std::string>(reopened.begin(), reopened.end()) == surviving, "spec {}: reopened topics differ",
              i);
  }

  // The filter task of the benchmark suite: cmd_vel and odom only.
  const auto out = dir / "cmd_vel_odom.bag";
  filter::filter_bag({.source = source, .destination = out, .topics = std::set<std::string>{"/cmd_vel", "/odom"},
                      .start_time = {}, .end_time = {}, .max_rate_hz = {}});
  c.expect(bag::BagHandle::open(out)->topics() == std::vector<std::string>{"/cmd_vel", "/odom"},
           "cmd_vel/odom copy holds other topics");
}

// --- plots --------------------------------------------------------------------

std::vector<double> brute_series(const fs::path& path, const std::string& topic, const std::string& field,
                                 std::optional<double> start = {}, std::optional<double> end = {}) {
  const auto bag = bag::BagHandle::open(path);
  std::map<std::uint32_t, const bag::ConnectionRecord*> conns;
  for (const auto& conn : bag->connections()) conns[conn.conn_id] = &conn;
  std::string pointer = "/" + field;
  std::replace(pointer.begin(), pointer.end(), '.', '/');
  std::vector<double> out;
  for (const auto& m : bag::linear_scan(path)) {
    const auto* conn = conns.at(m.conn_id);
    if (conn->topic != topic) continue;
    const double t = ns_to_seconds(m.time_ns);
    if ((start && t < *start) || (end && t > *end)) continue;
    const auto j = msg::to_json(msg::decode(msg::builtin_schema(conn->type_name), m.payload));
    out.push_back(j.at(json::json_pointer(pointer)).get<double>());
  }
  return out;
}

void check_png(Check& c, const std::string& what, std::span<const std::uint8_t> png, int w, int h) {
  const auto info = testing::inspect_png(png);
  c.expectf(info.valid, "{}: invalid PNG ({})", what, info.problem);
  c.expectf(info.width == static_cast<std::uint32_t>(w) && info.height == static_cast<std::uint32_t>(h),
            "{}: IHDR {}x{}, requested {}x{}", what, info.width, info.height, w, h);
}

void plot_validity(Check& c) {
  testing::TempDir dir;
  auto s = synth::named_scenario("patrol_5m");
  s.name = "patrol_40s";
  s.duration = 40;
  std::erase_if(s.script, [](const synth::Command& cmd) { return cmd.end_s > 40; });
  s.logs.clear();
  s.rates.camera_hz = 0;
  const auto path = make_fixture(dir.path(), s);
  const double t0 = ns_to_seconds(*bag::BagHandle::open(path)->start_time());

  // All three plot tools, through the MCP surface, at several sizes.
  mcp::ToolServer tools(path.string());
  for (auto [w, h] : {std::pair{800, 600}, std::pair{320, 200}, std::pair{1234, 321}}) {
    const std::vector<std::pair<std::string, json>> calls{
        {"plot_timeseries", {{"fields", {"cmd_vel.linear.x", "odom.twist.twist.linear.x"}}}},
        {"plot_2d", {{"pose_topic", "/odom"}}},
        {"plot_lidar_scan", {{"scan_topic", "/scan"}, {"time", t0 + 10}}}};
    for (auto [name, args] : calls) {
      args["width"] = w;
      args["height"] = h;
      const auto r = tools.call(name, args).to_json();
      const auto what = fmt::format("{} {}x{}", name, w, h);
      c.expectf(!r.value("isError", true), "{}: {}", what, r["content"].dump().substr(0, 200));
      bool found = false;
      for (const auto& block : r["content"]) {
        if (block.value("type", "") != "image") continue;
        found = true;
        c.expectf(block["mimeType"] == "image/png", "{}: mime {}", what, block["mimeType"].dump());
        check_png(c, what, base64_decode(block["data"].get<std::string>()), w, h);
      }
      c.expectf(found, "{}: no image block", what);
    }
  }

  // Summaries against a decode of every message, field path walker bypassed.
  const auto bag = bag::BagHandle::open(path);
  const std::vector<std::string> fields{"cmd_vel.linear.x", "odom.twist.twist.linear.x", "cmd_vel.angular.z",
                                        "odom.pose.pose.position.y"};
  const auto r = plot::plot_timeseries(*bag, {.fields = fields, .style = plot::Style::Line, .start_time = t0 + 3,
                                              .end_time = t0 + 30, .bins = plot::kDefaultBins, .canvas = {}});
  for (std::size_t i = 0; i < fields.size() && i < r.series.size(); ++i) {
    const auto dot = fields[i].find('.');
    const auto values = brute_series(path, "/" + fields[i].substr(0, dot), fields[i].substr(dot + 1), t0 + 3, t0 + 30);
    const auto& sm = r.series[i];
    double sum = 0;
    for (double v : values) sum += v;
    const bool ok = sm.point_count == values.size() && !values.empty() && sm.min && sm.max && sm.mean &&
                    *sm.min == *std::min_element(values.begin(), values.end()) &&
                    *sm.max == *std::max_element(values.begin(), values.end()) &&
                    std::abs(*sm.mean - sum / static_cast<double>(values.size())) <= 1e-12 * (1 + std::abs(*sm.mean));
    c.expectf(ok, "{}: summary differs from the brute-force recomputation", fields[i]);
  }
  c.expectf(r.series.size() == fields.size(), "{} series", r.series.size());

  // cmd_vel.linear.x takes only the values 0.0 and 0.5 here.
  synth::Scenario tv;
  tv.name = "two_valued";
  tv.duration = 10;
  tv.script = {{.start_s = 2, .end_s = 5, .v = 0.5, .omega = 0}, {.start_s = 7, .end_s = 8, .v = 0.5, .omega = 0}};
  const auto tv_path = make_fixture(dir.path(), tv);
  const auto values = brute_series(tv_path, "/cmd_vel", "linear.x");
  const auto zeros = static_cast<std::uint64_t>(std::count(values.begin(), values.end(), 0.0));
  const auto halves = static_cast<std::uint64_t>(std::count(values.begin(), values.end(), 0.5));
  c.expectf(zeros + halves == values.size() && zeros && halves, "fixture is not two-valued");
  const auto h = plot::plot_timeseries(*bag::BagHandle::open(tv_path),
                                       {.fields = {"cmd_vel.linear.x"}, .style = plot::Style::Histogram,
                                        .start_time = {}, .end_time = {}, .bins = plot::kDefaultBins, .canvas = {}});
  std::vector<std::uint64_t> populated;
  if (h.histogram && !h.histogram->counts.empty()) {
    for (auto n : h.histogram->counts[0]) {
      if (n) populated.push_back(n);
    }
  }
  c.expectf(populated == std::vector<std::uint64_t>{zeros, halves}, "histogram bins [{}], value counts [{}, {}]",
            fmt::join(populated, ", "), zeros, halves);
  check_png(c, "histogram", h.png, plot::kDefaultWidth, plot::kDefaultHeight);
}

// --- MCP transcript -----------------------------------------------------------

std::vector<std::string> session_script(double t0) {
  return {request(1, "initialize",
                  {{"protocolVersion", "2024-11-05"},
                   {"capabilities", json::object()},
                   {"clientInfo", {{"name", "acceptance"}, {"version", "1"}}}})
              .dump(),
          json{{"jsonrpc", "2.0"}, {"method", "notifications/initialized"}}.dump(),
          request(2, "tools/list").dump(),
          tool_call(3, "bag_info", json::object()).dump(),
          tool_call(4, "analyze_trajectory", {{"pose_topic", "/odom"}}).dump(),
          tool_call(5, "get_message_at_time", {{"topic", "/odom"}, {"time", t0 + 2.5}}).dump()};
}

std::vector<std::string> run_stdio(mcp::ToolServer& tools, const std::vector<std::string>& lines) {
  std::stringstream in, out;
  for (const auto& l : lines) in << l << "\n";
  mcp::serve_stdio(tools, in, out);
  std::vector<std::string> responses;
  for (std::string line; std::getline(out, line);) responses.push_back(line);
  return responses;
}

std::string normalize(std::string text, const std::string& dir) {
  for (std::size_t at; (at = text.find(dir)) != std::string::npos;) text.replace(at, dir.size(), "$FIXTURES");
  return text;
}

void mcp_transcript(Check& c) {
  testing::TempDir dir;
  const auto path = make_fixture(dir.path(), "straight_line");
  const double t0 = ns_to_seconds(*bag::BagHandle::open(path)->start_time());
  const auto script = session_script(t0);

  mcp::ToolServer tools(path.string());
  const auto responses = run_stdio(tools, script);
  std::string transcript;
  for (const auto& r : responses) transcript += normalize(json::parse(r).dump(), dir.path().string()) + "\n";
  const auto golden_path = g_golden_dir / "mcp_transcript.jsonl";
  if (g_update_golden) std::ofstream(golden_path, std::ios::binary) << transcript;
  const auto golden = read_text(golden_path);
  c.expectf(responses.size() == 5, "{} responses to 5 requests and 1 notification", responses.size());
  c.expect(transcript == golden, "stdio responses differ from " + golden_path.string());

  // Malformed JSON mid-session: -32700, and the session carries on.
  auto broken = script;
  broken.insert(broken.begin() + 3, "{\"jsonrpc\": \"2.0\", \"id\": 9, \"method\": ");
  const auto with_error = run_stdio(tools, broken);
  c.expectf(with_error.size() == responses.size() + 1, "{} responses with a malformed line", with_error.size());
  if (with_error.size() == responses.size() + 1) {
    const auto err = json::parse(with_error[2]);
    c.expectf(err["error"]["code"] == mcp::rpc::kParseError && err["id"].is_null(), "malformed line answered {}",
              err.dump());
    for (std::size_t i = 3; i < with_error.size(); ++i) {
      c.expectf(with_error[i] == responses[i - 1], "response {} changed after the parse error", i);
    }
  }

  // The same envelopes over HTTP.
  mcp::HttpTransport http(tools);
  const int port = http.start("127.0.0.1", 0);
  httplib::Client client("127.0.0.1", port);
  httplib::Headers headers;
  std::size_t k = 0;
  for (const auto& line : script) {
    const auto res = client.Post("/rpc", headers, line, "application/json");
    if (!res) {
      c.expect(false, "HTTP request failed: " + httplib::to_string(res.error()));
      break;
    }
    if (headers.empty() && res->has_header("Mcp-Session-Id")) {
      headers.emplace("Mcp-Session-Id", res->get_header_value("Mcp-Session-Id"));
    }
    if (json::parse(line).contains("id")) {
      c.expectf(k < responses.size() && json::parse(res->body) == json::parse(responses[k]),
                "HTTP response to {} differs from stdio", line.substr(0, 60));
      ++k;
    } else {
      c.expectf(res->status == 202, "notification answered HTTP {}", res->status);
    }
  }
  const auto bad = client.Post("/rpc", headers, "{", "application/json");
  c.expect(bad && json::parse(bad->body)["error"]["code"] == mcp::rpc::kParseError, "HTTP malformed JSON is not -32700");
  const auto after = client.Post("/rpc", headers, request(7, "tools/list").dump(), "application/json");
  c.expect(after && json::parse(after->body)["result"]["tools"].size() == 15, "HTTP server stopped answering");
  const auto health = client.Get("/healthz");
  c.expect(health && health->status == 200, "GET /healthz failed");
  http.stop();

  // Schema-invalid arguments: 200 cases spread over all fifteen schemas.
  mcp::Connection conn(tools);
  conn.handle(request(1, "initialize"));
  const auto& descriptors = mcp::tool_descriptors();
  c.expectf(descriptors.size() == 15, "{} tool schemas", descriptors.size());
  std::mt19937_64 rng(31);
  const auto well_typed = [](const json& p) -> json {
    if (p.contains("enum")) return p["enum"][0];
    const auto type = p["type"].get<std::string>();
    if (type == "number") return p.contains("minimum") ? p["minimum"].get<double>() + 1 : 1.0;
    if (type == "integer") return p.contains("minimum") ? p["minimum"].get<int>() + 1 : 1;
    if (type == "boolean") return true;
    if (type == "array") return json::array({"cmd_vel.linear.x"});
    if (type == "object") return json::object();
    return "x";
  };
  const auto ill_typed = [&](const json& p) -> json {
    const auto type = p["type"].get<std::string>();
    switch (rng() % 3) {
      case 0:
        if (p.contains("enum")) return "not-an-option";
        [[fallthrough]];
      case 1:
        if (p.contains("minimum")) return p["minimum"].get<double>() - 1;
        [[fallthrough]];
      default:
        if (type == "integer") return rng() % 2 ? json(2.5) : json("7");
        if (type == "number") return rng() % 2 ? json("1.0") : json(false);
        if (type == "string") return rng() % 2 ? json(42) : json::array({"x"});
        if (type == "boolean") return "yes";
        if (type == "array") return rng() % 2 ? json("cmd_vel.linear.x") : json::object();
        return json(3);
    }
  };
  int cases = 0, id = 1000;
  for (int i = 0; i < 200; ++i) {
    const auto& t = descriptors[static_cast<std::size_t>(i) % descriptors.size()];
    const auto& schema = t.input_schema;
    const auto& props = schema["properties"];
    json args = json::object();
    for (const auto& r : schema.value("required", json::array())) args[r.get<std::string>()] = well_typed(props[r.get<std::string>()]);
    std::string victim;
    const auto& required = schema.value("required", json::array());
    if (!required.empty() && rng() % 4 == 0) {
      victim = required[rng() % required.size()].get<std::string>();
      args.erase(victim);
    } else if (!props.empty()) {
      auto it = props.begin();
      std::advance(it, static_cast<long>(rng() % props.size()));
      victim = it.key();
      args[victim] = ill_typed(it.value());
    } else {
      victim = "unexpected_argument";
      args[victim] = 1;
    }
    const auto problem = mcp::validate(schema, args);
    c.expectf(problem.has_value(), "{} case {}: mutated arguments {} still validate", t.name, i, args.dump());
    const auto before = tools.dispatch_count();
    const auto r = (*conn.handle(tool_call(++id, t.name, args)))["result"];
    const auto text = r["content"][0].value("text", "");
    c.expectf(r.value("isError", false) == true, "{} {}: isError not set", t.name, args.dump());
    c.expectf(text.find(victim) != std::string::npos, "{} {}: error text does not name {}: {}", t.name, args.dump(),
              victim, text);
    c.expectf(tools.dispatch_count() == before, "{} {}: tool body ran", t.name, args.dump());
    ++cases;
  }
  c.expectf(cases == 200, "{} fuzz cases", cases);
}

// --- harness ------------------------------------------------------------------

std::string drop_column(const std::string& csv, std::size_t column) {
  std::istringstream in(csv);
  std::string out;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (column < cells.size()) cells.erase(cells.begin() + static_cast<long>(column));
    out += fmt::format("{}\n", fmt::join(cells, ","));
  }
  return out;
}

void harness_determinism(Check& c) {
  testing::TempDir dir;
  const auto fixtures = dir / "fx";
  fs::create_directories(fixtures);
  make_fixture(fixtures, "patrol_5m");
  mcp::ToolServer server;
  const auto connect = bench::local_endpoint(server);

  auto run = [&](const std::string& agent_name, const std::string& out_name) {
    const auto out = dir / out_name;
    fs::create_directories(out);
    const auto tasks = bench::load_tasks(bench::default_suite_path(), {fixtures, out});
    auto agent = bench::scripted_agent(agent_name);
    auto results = bench::run_suite(tasks, *agent, connect, {});
    bench::export_report(results, out);
    return std::make_pair(tasks, results);
  };

  const auto [tasks, perfect] = run("perfect", "perfect");
  c.expectf(tasks.size() == 10, "suite holds {} tasks", tasks.size());
  for (const auto& r : perfect) {
    c.expectf(r.success == bench::Outcome::Full, "perfect {}: {} ({})", r.task_id, bench::outcome_name(r.success), r.reason);
  }

  // Tasks where the verbose agent adds one tool beyond the required set.
  const std::set<std::string> decorated{"T01", "T04", "T05", "T07", "T10"};
  const auto verbose = run("verbose", "verbose").second;
  for (const auto& r : verbose) {
    const auto want = decorated.count(r.task_id) ? bench::Outcome::Partial : bench::Outcome::Full;
    c.expectf(r.success == want, "verbose {}: {} ({})", r.task_id, bench::outcome_name(r.success), r.reason);
  }
  const auto lazy = run("lazy", "lazy").second;
  for (const auto& r : lazy) {
    c.expectf(r.success == bench::Outcome::Fail, "lazy {}: {}", r.task_id, bench::outcome_name(r.success));
  }

  run("perfect", "perfect2");
  for (const auto& [file, latency_column] : {std::pair{"calls.csv", 2}, std::pair{"tasks.csv", 2}}) {
    const auto a = drop_column(read_text(dir / "perfect" / file), latency_column);
    const auto b = drop_column(read_text(dir / "perfect2" / file), latency_column);
    c.expectf(a == b, "{} differs between runs outside the latency column", file);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string only;
  app.add_option("--golden-dir", g_golden_dir, "Directory of golden files")->capture_default_str();
  app.add_flag("--update-golden", g_update_golden, "Rewrite generated golden files before comparing");
  app.add_option("--only", only, "Run criteria whose name contains this text");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);

  const std::vector<Criterion> criteria{
      {"tool surface parity", 1, tool_surface},
      {"bag round-trip", 30, bag_round_trip},
      {"codec property suite", 20, codec_properties},
      {"trajectory oracle", 5, trajectory_oracle},
      {"search oracle", 10, search_oracle},
      {"lidar oracle", 5, lidar_oracle},
      {"filter oracle", 10, filter_oracle},
      {"plot validity", 10, plot_validity},
      {"mcp conformance transcript", 20, mcp_transcript},
      {"harness determinism", 60, harness_determinism},
  };

  int failed = 0;
  for (const auto& cr : criteria) {
    if (!only.empty() && cr.name.find(only) == std::string::npos) continue;
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.body(check);
    } catch (const std::exception& e) {
      check.expect(false, fmt::format("exception: {}", e.what()));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs < cr.budget_s;
    const bool pass = check.ok() && in_budget;
    failed += pass ? 0 : 1;
    fmt::print("{}  {:<28} {:>7.3f} s (budget {} s)  {} checks\n", pass ? "PASS" : "FAIL", cr.name, secs, cr.budget_s,
               check.count());
    if (!in_budget) fmt::print("      over the time budget\n");
    const auto& f = check.failures();
    for (std::size_t i = 0; i < f.size() && i < 8; ++i) fmt::print("      {}\n", f[i]);
    if (f.size() > 8) fmt::print("      ... {} more\n", f.size() - 8);
  }
  std::cout.flush();
  return failed == 0 ? 0 : 1;
}
