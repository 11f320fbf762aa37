// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <map>
#include <random>

#include <fmt/format.h>

#include "bagpilot/error.hpp"
#include "bagpilot/filter/filter.hpp"
#include "bagpilot/store/store.hpp"
#include "bagpilot/synth/synth.hpp"
#include "testing.hpp"

using namespace bagpilot;
namespace fs = std::filesystem;

namespace {

struct Tagged {
  std::string topic;
  TimeNs time_ns;
  std::vector<std::uint8_t> payload;
  bool operator==(const Tagged&) const = default;
};

// Every message of a bag file, tagged with its topic, from an index-free walk.
std::vector<Tagged> read_all(const fs::path& path) {
  const auto bag = bag::BagHandle::open(path);
  std::map<std::uint32_t, std::string> topic_of;
  for (const auto& c : bag->connections()) topic_of[c.conn_id] = c.topic;
  std::vector<Tagged> out;
  for (auto& m : bag::linear_scan(path)) out.push_back({topic_of.at(m.conn_id), m.time_ns, std::move(m.payload)});
  std::stable_sort(out.begin(), out.end(), [](const Tagged& a, const Tagged& b) { return a.time_ns < b.time_ns; });
  return out;
}

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

const fs::path& patrol() {
  static testing::TempDir dir;
  static const fs::path p = [] {
    auto s = synth::named_scenario("patrol_5m");
    s.duration = 60;
    std::erase_if(s.script, [](const synth::Command& c) { return c.end_s > 60; });
    std::erase_if(s.logs, [](const synth::LogEvent& e) { return e.time_s > 60; });
    s.rates.odom_hz = 50;
    const auto path = dir / "patrol60.bag";
    synth::write_fixture(synth::simulate(s), path);
    return path;
  }();
  return p;
}

}  // namespace

TEST_CASE("topic filter keeps exactly the requested topics") {
  testing::TempDir out;
  const auto r = filter::filter_bag(
      {.source = patrol(), .destination = out / "two.bag", .topics = std::set<std::string>{"/cmd_vel", "odom"},
       .start_time = {}, .end_time = {}, .max_rate_hz = {}});
  const auto bag = bag::BagHandle::open(out / "two.bag");
  CHECK(bag->topics() == std::vector<std::string>{"/cmd_vel", "/odom"});
  const auto src = bag::BagHandle::open(patrol());
  CHECK(bag->message_count("/odom") == src->message_count("/odom"));
  CHECK(bag->message_count("/cmd_vel") == src->message_count("/cmd_vel"));
  for (const auto& t : r.topics) {
    if (t.topic != "/odom" && t.topic != "/cmd_vel") CHECK(t.output_count == 0);
    CHECK(t.output_count <= t.input_count);
  }
  CHECK(bag->connections().size() == 2);
}

TEST_CASE("empty spec is a pure copy") {
  testing::TempDir out;
  filter::filter_bag({.source = patrol(), .destination = out / "copy.bag", .topics = {}, .start_time = {},
                      .end_time = {}, .max_rate_hz = {}});
  CHECK(read_all(out / "copy.bag") == read_all(patrol()));
}

TEST_CASE("rate cap on a 50 Hz topic") {
  testing::TempDir out;
  const auto r = filter::filter_bag({.source = patrol(), .destination = out / "rate.bag",
                                     .topics = std::set<std::string>{"/odom"}, .start_time = {}, .end_time = {},
                                     .max_rate_hz = 10.0});
  const auto msgs = read_all(out / "rate.bag");
  for (std::size_t i = 1; i < msgs.size(); ++i) {
    CHECK(static_cast<double>(msgs[i].time_ns - msgs[i - 1].time_ns) * 1e-9 >= 0.1 - 1e-9);
  }
  const auto in = bag::BagHandle::open(patrol())->message_count("/odom");
  CHECK(std::llabs(static_cast<long long>(msgs.size()) - static_cast<long long>(in / 5)) <= 1);
  CHECK(r.total_out == msgs.size());
}

TEST_CASE("random specs equal the brute-force predicate") {
  const auto input = read_all(patrol());
  const auto topics = bag::BagHandle::open(patrol())->topics();
  const double t0 = ns_to_seconds(input.front().time_ns);
  std::mt19937_64 rng(17);
  testing::TempDir out;
  for (int i = 0; i < 25; ++i) {
    filter::FilterSpec spec{.source = patrol(), .destination = out / fmt::format("r{}.bag", i), .topics = {},
                            .start_time = {}, .end_time = {}, .max_rate_hz = {}};
    if (rng() % 2) {
      std::set<std::string> pick;
      for (const auto& t : topics) {
        if (rng() % 2) pick.insert(t);
      }
      if (pick.empty()) pick.insert(topics.front());
      spec.topics = pick;
    }
    if (rng() % 2) {
      // Bounds on exact message times exercise inclusivity.
      spec.start_time = ns_to_seconds(input[rng() % input.size()].time_ns);
      spec.end_time = *spec.start_time + std::uniform_real_distribution<double>(0, 40)(rng);
    } else if (rng() % 2) {
      spec.end_time = t0 + std::uniform_real_distribution<double>(0, 60)(rng);
    }
    if (rng() % 2) spec.max_rate_hz = std::uniform_real_distribution<double>(0.5, 30)(rng);
    filter::filter_bag(spec);
    const auto got = read_all(spec.destination);
    const auto want = brute_force(input, spec);
    CHECK(got.size() == want.size());
    CHECK(got == want);
    std::set<std::string> surviving;
    for (const auto& m : want) surviving.insert(m.topic);
    const auto reopened = bag::BagHandle::open(spec.destination)->topics();
    CHECK(std::set<std::string>(reopened.begin(), reopened.end()) == surviving);
  }
}

TEST_CASE("idempotence and composability") {
  testing::TempDir out;
  const double t0 = ns_to_seconds(*bag::BagHandle::open(patrol())->start_time());
  const std::set<std::string> topics{"/scan", "/tf"};
  filter::filter_bag({.source = patrol(), .destination = out / "once.bag", .topics = topics,
                      .start_time = t0 + 5, .end_time = t0 + 20, .max_rate_hz = {}});
  filter::filter_bag({.source = out / "once.bag", .destination = out / "twice.bag", .topics = topics,
                      .start_time = t0 + 5, .end_time = t0 + 20, .max_rate_hz = {}});
  CHECK(read_all(out / "once.bag") == read_all(out / "twice.bag"));

  filter::filter_bag({.source = patrol(), .destination = out / "topic.bag", .topics = topics, .start_time = {},
                      .end_time = {}, .max_rate_hz = {}});
  filter::filter_bag({.source = out / "topic.bag", .destination = out / "topic_time.bag", .topics = {},
                      .start_time = t0 + 5, .end_time = t0 + 20, .max_rate_hz = {}});
  filter::filter_bag({.source = patrol(), .destination = out / "time.bag", .topics = {}, .start_time = t0 + 5,
                      .end_time = t0 + 20, .max_rate_hz = {}});
  filter::filter_bag({.source = out / "time.bag", .destination = out / "time_topic.bag", .topics = topics,
                      .start_time = {}, .end_time = {}, .max_rate_hz = {}});
  CHECK(read_all(out / "topic_time.bag") == read_all(out / "time_topic.bag"));
  CHECK(read_all(out / "topic_time.bag") == read_all(out / "once.bag"));
}

TEST_CASE("destinations and argument errors") {
  testing::TempDir dir;
  fs::copy_file(patrol(), dir / "src.bag");
  const auto base = filter::FilterSpec{.source = dir / "src.bag", .destination = {}, .topics = {}, .start_time = {},
                                       .end_time = {}, .max_rate_hz = {}};
  CHECK(filter::resolve_destination(base) == dir / "src_filtered.bag");
  auto spec = base;
  spec.destination = "sub.bag";
  CHECK(filter::resolve_destination(spec) == dir / "sub.bag");

  const auto code_of = [](const filter::FilterSpec& s) {
    try {
      filter::filter_bag(s);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::IoFailure;
  };
  spec.destination = dir / "src.bag";
  CHECK(code_of(spec) == Errc::SameSourceDest);
  spec.destination = "./src.bag";
  CHECK(code_of(spec) == Errc::SameSourceDest);
  spec = base;
  spec.max_rate_hz = 0.0;
  CHECK(code_of(spec) == Errc::InvalidArgument);
  spec = base;
  spec.start_time = 10;
  spec.end_time = 5;
  CHECK(code_of(spec) == Errc::InvalidRange);
  spec = base;
  spec.topics = std::set<std::string>{"/nope"};
  CHECK(code_of(spec) == Errc::UnknownTopic);
  CHECK_FALSE(fs::exists(dir / "src_filtered.bag"));
  CHECK_FALSE(fs::exists(dir / "src_filtered.bag.partial"));
}
