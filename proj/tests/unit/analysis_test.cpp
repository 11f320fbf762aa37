// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bagpilot/analysis/analysis.hpp"
#include "bagpilot/error.hpp"
#include "bagpilot/msg/codec.hpp"
#include "bagpilot/store/store.hpp"
#include "bagpilot/synth/synth.hpp"
#include "testing.hpp"

using namespace bagpilot;
using namespace bagpilot::analysis;
namespace fs = std::filesystem;

namespace {

const fs::path& fixture(const std::string& name) {
  static testing::TempDir dir;
  static std::map<std::string, fs::path> made;
  auto it = made.find(name);
  if (it == made.end()) {
    const auto p = dir / (name + ".bag");
    synth::write_fixture(synth::simulate(synth::named_scenario(name)), p);
    it = made.emplace(name, p).first;
  }
  return it->second;
}

bag::ConnectionRecord builtin_connection(std::uint32_t id, std::string topic, std::string_view type) {
  const auto& b = msg::builtin(type);
  return {.conn_id = id, .topic = std::move(topic), .type_name = b.type_name, .md5sum = b.md5sum,
          .message_definition = b.definition, .callerid = std::nullopt, .latching = std::nullopt};
}

std::vector<std::uint8_t> encode_json(std::string_view type, const nlohmann::json& j) {
  const auto& s = msg::builtin_schema(type);
  return msg::encode(s, msg::from_json(s, type, j));
}

nlohmann::json tf_json(const std::string& parent, const std::string& child) {
  return {{"transforms",
           {{{"header", {{"seq", 0}, {"stamp", {{"sec", 1}, {"nsec", 0}}}, {"frame_id", parent}}},
             {"child_frame_id", child},
             {"transform",
              {{"translation", {{"x", 1.0}, {"y", 0.0}, {"z", 0.0}}},
               {"rotation", {{"x", 0.0}, {"y", 0.0}, {"z", 0.0}, {"w", 1.0}}}}}}}}};
}

ScanData uniform_scan(std::size_t n, float value) {
  ScanData s;
  s.angle_min = -std::numbers::pi;
  s.angle_increment = 2 * std::numbers::pi / static_cast<double>(n);
  s.angle_max = s.angle_min + static_cast<double>(n - 1) * s.angle_increment;
  s.range_min = 0.1;
  s.range_max = 10.0;
  s.ranges.assign(n, value);
  return s;
}

std::vector<PoseSample> poses_from(const std::vector<std::array<double, 3>>& txy) {
  std::vector<PoseSample> out;
  for (const auto& p : txy) out.push_back({seconds_to_ns(p[0]), {p[1], p[2], 0.0}});
  return out;
}

}  // namespace

TEST_CASE("trajectory: straight line fixture") {
  const auto bag = bag::BagHandle::open(fixture("straight_line"));
  const auto r = analyze_trajectory(*bag, "/odom");
  CHECK(std::abs(r.total_distance - 5.0) <= 0.05);
  CHECK(std::abs(r.mean_speed - 0.5) <= 0.01);
  CHECK(r.max_speed <= 0.55);
  CHECK(r.total_distance >= r.displacement);
  CHECK(r.max_speed >= r.mean_speed);
  const auto truth = nlohmann::json::parse(testing::read_file(synth::truth_path(fixture("straight_line"))));
  CHECK(std::abs(r.total_distance - truth["trajectory"]["total_distance"].get<double>()) <=
        0.01 * r.total_distance);
}

TEST_CASE("trajectory: circle spans") {
  const auto r = analyze_trajectory(*bag::BagHandle::open(fixture("circle")), "odom");
  CHECK(std::abs(r.x_span - 4.0) <= 1e-3);
  CHECK(std::abs(r.y_span - 4.0) <= 1e-3);
  CHECK(r.x_span == r.x_max - r.x_min);
  CHECK(r.displacement <= 0.5 / 20.0);  // last odometry sample precedes the closing instant
}

TEST_CASE("trajectory: span arithmetic on reported extents") {
  const auto r = trajectory_from_poses(poses_from({{0, -2.074, 0.3}, {1, 2.168, -2.017}, {2, 0.5, 2.000}}));
  CHECK(r.x_span == r.x_max - r.x_min);
  CHECK(std::abs(r.x_span - 4.242) <= 1e-12);
  CHECK(std::abs(r.y_span - 4.017) <= 1e-12);
}

TEST_CASE("trajectory: stationary, single pose and waypoints") {
  auto r = trajectory_from_poses(poses_from({{0, 1, 1}, {1, 1, 1}, {2, 1, 1}}));
  CHECK(r.total_distance == 0.0);
  CHECK(r.mean_speed == 0.0);
  CHECK(r.displacement == 0.0);

  r = trajectory_from_poses(poses_from({{5, 1, 2}}), true);
  CHECK(r.total_distance == 0.0);
  CHECK(r.duration == 0.0);
  REQUIRE(r.waypoints);
  CHECK(r.waypoints->size() == 1);

  std::vector<std::array<double, 3>> line;
  for (int i = 0; i < 101; ++i) line.push_back({i * 0.1, i * 0.05, 0.0});
  r = trajectory_from_poses(poses_from(line), true, 20);
  REQUIRE(r.waypoints->size() == 20);
  CHECK(r.waypoints->front().x == 0.0);
  CHECK(r.waypoints->back().x == line.back()[1]);
  r = trajectory_from_poses(poses_from(line), false);
  CHECK_FALSE(r.waypoints);
}

TEST_CASE("trajectory: additivity and isometry") {
  const auto bag = bag::BagHandle::open(fixture("patrol_5m"));
  const auto poses = load_poses(*bag, "/odom");
  const auto whole = trajectory_from_poses(poses);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 10; ++i) {
    const auto k = std::uniform_int_distribution<std::size_t>(1, poses.size() - 2)(rng);
    const std::vector<PoseSample> a(poses.begin(), poses.begin() + static_cast<std::ptrdiff_t>(k) + 1);
    const std::vector<PoseSample> b(poses.begin() + static_cast<std::ptrdiff_t>(k), poses.end());
    CHECK(std::abs(trajectory_from_poses(a).total_distance + trajectory_from_poses(b).total_distance -
                   whole.total_distance) <= 1e-9);
    // Through the bag with time bounds at the split message.
    const double t1 = ns_to_seconds(poses[k].time_ns);
    const auto left = analyze_trajectory(*bag, "/odom", std::nullopt, t1);
    const auto right = analyze_trajectory(*bag, "/odom", t1, std::nullopt);
    CHECK(std::abs(left.total_distance + right.total_distance - whole.total_distance) <= 1e-9);
  }
  const double angle = 0.7;
  auto rotated = poses;
  for (auto& p : rotated) {
    const double x = p.pose.x, y = p.pose.y;
    p.pose.x = std::cos(angle) * x - std::sin(angle) * y;
    p.pose.y = std::sin(angle) * x + std::cos(angle) * y;
  }
  const auto rot = trajectory_from_poses(rotated);
  CHECK(std::abs(rot.total_distance - whole.total_distance) <= 1e-9);
  CHECK(std::abs(rot.mean_speed - whole.mean_speed) <= 1e-9);
  CHECK(std::abs(rot.max_speed - whole.max_speed) <= 1e-9);
}

TEST_CASE("trajectory: errors") {
  const auto bag = bag::BagHandle::open(fixture("straight_line"));
  CHECK_THROWS_AS(analyze_trajectory(*bag, "/nope"), Error);
  try {
    analyze_trajectory(*bag, "/scan");
    FAIL("expected UnsupportedPoseType");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnsupportedPoseType);
  }
  try {
    analyze_trajectory(*bag, "/odom", 1.0, 2.0);
    FAIL("expected NoMessagesInWindow");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoMessagesInWindow);
  }
}

TEST_CASE("scan: uniform and all-invalid scans") {
  auto r = analyze_scan(uniform_scan(360, 5.0f));
  CHECK(r.obstacles.empty());
  REQUIRE(r.gaps.size() == 1);
  CHECK(r.gaps[0].first_beam == 0);
  CHECK(r.gaps[0].last_beam == 359);
  CHECK(r.gaps[0].angular_width == doctest::Approx(2 * std::numbers::pi));
  CHECK(r.stats->min == 5.0);
  CHECK(r.stats->max == 5.0);

  r = analyze_scan(uniform_scan(100, NAN));
  CHECK(r.valid_count == 0);
  CHECK_FALSE(r.stats);
  CHECK_FALSE(r.nearest);
  REQUIRE(r.gaps.size() == 1);
  CHECK(r.gaps[0].last_beam == 99);
}

TEST_CASE("scan: bridging across invalid beams") {
  auto s = uniform_scan(40, 2.0f);
  for (std::size_t i = 10; i < 15; ++i) s.ranges[i] = 0.5f;
  s.ranges[15] = s.ranges[16] = NAN;
  for (std::size_t i = 17; i < 20; ++i) s.ranges[i] = 0.4f;
  auto r = analyze_scan(s);
  REQUIRE(r.obstacles.size() == 1);
  CHECK(r.obstacles[0].first_beam == 10);
  CHECK(r.obstacles[0].last_beam == 19);
  CHECK(r.obstacles[0].min_range == doctest::Approx(0.4));
  CHECK(r.obstacles[0].bearing_of_min == doctest::Approx(s.bearing(17)));

  s.ranges[17] = NAN;  // three invalid beams now separate the runs
  r = analyze_scan(s);
  CHECK(r.obstacles.size() == 2);
  s.ranges[17] = 0.05f;  // below range_min is invalid too
  r = analyze_scan(s);
  CHECK(r.obstacles.size() == 2);
  s.ranges[16] = 2.5f;  // a far valid beam always splits
  s.ranges[17] = 0.4f;
  r = analyze_scan(s);
  CHECK(r.obstacles.size() == 2);
}

TEST_CASE("scan: partition properties on random scans") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<float> range(0.0f, 12.0f);
  std::bernoulli_distribution dropout(0.1);
  for (int iter = 0; iter < 200; ++iter) {
    auto s = uniform_scan(90, 0.0f);
    for (auto& r : s.ranges) r = dropout(rng) ? NAN : range(rng);
    const auto rep = analyze_scan(s);
    std::vector<int> in_obstacle(90, 0), in_gap(90, 0);
    for (const auto& o : rep.obstacles) {
      CHECK(o.min_range < rep.params.obstacle_threshold);
      for (auto i = o.first_beam; i <= o.last_beam; ++i) ++in_obstacle[i];
    }
    for (const auto& g : rep.gaps) {
      for (auto i = g.first_beam; i <= g.last_beam; ++i) ++in_gap[i];
    }
    for (std::size_t i = 0; i < 90; ++i) {
      CHECK(in_obstacle[i] <= 1);
      CHECK(in_gap[i] <= 1);
      const bool gap_beam = !s.valid(i) || s.ranges[i] > 3.0f;
      CHECK((in_gap[i] == 1) == gap_beam);
      if (s.valid(i) && s.ranges[i] < 1.0f) CHECK(in_obstacle[i] == 1);
    }
  }
}

TEST_CASE("scan: pillar fixture") {
  const auto bag = bag::BagHandle::open(fixture("pillar_room"));
  const auto start = ns_to_seconds(*bag->start_time());
  const auto r = analyze_lidar_scan(*bag, "/scan", start + 1.0);
  REQUIRE(r.obstacles.size() == 1);
  const double beam_resolution = r.angle_increment * 0.8;  // arc length per beam at the pillar distance
  CHECK(std::abs(r.obstacles[0].min_range - 0.6) <= beam_resolution);
  CHECK(std::abs(r.obstacles[0].bearing_of_min) <= r.angle_increment);
  CHECK(r.nearest->first == r.obstacles[0].min_range);
  CHECK(r.beam_count == 360);

  try {
    analyze_lidar_scan(*bag, "/scan", start - 100.0);
    FAIL("expected NoScanNearTime");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoScanNearTime);
  }
}

TEST_CASE("logs: level and node filters") {
  const auto bag = bag::BagHandle::open(fixture("patrol_5m"));
  auto r = analyze_logs(*bag, {.min_level = msg::LogLevel::Warn, .node = {}, .start_time = {}, .end_time = {}});
  CHECK(r.total == 13);
  CHECK(r.filtered_total == 3);
  CHECK(r.entries.size() == 3);
  CHECK(r.counts_by_level["INFO"] == 10);
  CHECK(r.counts_by_level["WARN"] == 2);
  CHECK(r.counts_by_level["ERROR"] == 1);
  std::uint64_t sum = 0;
  for (const auto& [k, v] : r.counts_by_level) sum += v;
  CHECK(sum == r.total);

  r = analyze_logs(*bag, {.min_level = {}, .node = "/silent", .start_time = {}, .end_time = {}});
  CHECK(r.total == 13);
  CHECK(r.entries.empty());

  const double start = ns_to_seconds(*bag->start_time());
  r = analyze_logs(*bag, {.min_level = {}, .node = {}, .start_time = start - 5, .end_time = start - 5});
  CHECK(r.total == 0);
  for (const auto& [k, v] : r.counts_by_level) CHECK(v == 0);

  r = analyze_logs(*bag, {.min_level = {}, .node = "controller", .start_time = {}, .end_time = {}, .limit = 1});
  CHECK(r.filtered_total == 2);
  CHECK(r.entries.size() == 1);

  const auto no_logs = bag::BagHandle::open(fixture("circle"));
  CHECK_NOTHROW(analyze_logs(*no_logs));
}

TEST_CASE("tf tree of the fixture") {
  const auto bag = bag::BagHandle::open(fixture("straight_line"));
  const auto t = get_tf_tree(*bag);
  CHECK(t.frames == std::vector<std::string>{"base_link", "laser", "odom"});
  REQUIRE(t.edges.size() == 2);
  CHECK(t.edges[0].parent == "base_link");
  CHECK(t.edges[0].child == "laser");
  CHECK(t.edges[0].is_static);
  CHECK(t.edges[1].parent == "odom");
  CHECK_FALSE(t.edges[1].is_static);
  CHECK(t.roots == std::vector<std::string>{"odom"});
  CHECK(t.multi_parent.empty());
  CHECK(t.cycles.empty());
  CHECK(to_json(t) == to_json(get_tf_tree(*bag)));
}

TEST_CASE("tf anomalies") {
  testing::TempDir dir;
  const std::vector<bag::ConnectionRecord> conns{builtin_connection(0, "/tf", msg::kTfMessage)};
  const std::vector<bag::RawMessage> msgs{{0, kNsPerSec, encode_json(msg::kTfMessage, tf_json("odom", "base_link"))},
                                          {0, kNsPerSec, encode_json(msg::kTfMessage, tf_json("/world", "base_link"))}};
  bag::write_bag(dir / "tf.bag", conns, msgs);
  const auto t = get_tf_tree(*bag::BagHandle::open(dir / "tf.bag"));
  CHECK(t.multi_parent == std::vector<std::string>{"base_link"});
  CHECK(t.roots == std::vector<std::string>{"odom", "world"});

  const auto c = build_tf_tree({{"a", "b"}, {"b", "c"}, {"c", "a"}, {"c", "d"}, {"e", "e"}});
  CHECK(c.cycles == std::vector<std::vector<std::string>>{{"a", "b", "c"}, {"e"}});

  const std::vector<bag::ConnectionRecord> none{builtin_connection(0, "/cmd", msg::kTwist)};
  bag::write_bag(dir / "none.bag", none, std::vector<bag::RawMessage>{});
  try {
    get_tf_tree(*bag::BagHandle::open(dir / "none.bag"));
    FAIL("expected NoTfTopic");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoTfTopic);
  }
}

TEST_CASE("image extraction") {
  const auto bag = bag::BagHandle::open(fixture("patrol_5m"));
  const double start = ns_to_seconds(*bag->start_time());
  auto img = get_image_at_time(*bag, "/camera/image_raw/compressed", start + 10.2);
  CHECK(img.mime_type == "image/png");
  const auto png = synth::tiny_png();
  CHECK(img.data == std::vector<std::uint8_t>(png.begin(), png.end()));
  CHECK(base64_decode(base64_encode(img.data)) == img.data);
  CHECK(std::abs(ns_to_seconds(img.time_ns) - (start + 10.0)) <= 1e-6);

  const double end = ns_to_seconds(*bag->end_time());
  img = get_image_at_time(*bag, "compressed", end + 0.5);
  CHECK(std::abs(ns_to_seconds(img.time_ns) - (start + 300.0)) <= 1e-6);

  testing::TempDir dir;
  const std::vector<bag::ConnectionRecord> conns{builtin_connection(0, "/camera/image_raw", msg::kImage)};
  bag::write_bag(dir / "raw.bag", conns, std::vector<bag::RawMessage>{});
  try {
    get_image_at_time(*bag::BagHandle::open(dir / "raw.bag"), "/camera/image_raw", 0.0);
    FAIL("expected UnsupportedImageEncoding");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnsupportedImageEncoding);
    CHECK(std::string(e.what()).find("CompressedImage") != std::string::npos);
  }
}
