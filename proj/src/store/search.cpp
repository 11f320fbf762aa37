// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <regex>

#include <fmt/format.h>

#include "bagpilot/error.hpp"
#include "bagpilot/msg/builtin.hpp"
#include "bagpilot/store/store.hpp"

namespace bagpilot::store {

namespace {

constexpr std::array<std::pair<ConditionType, std::string_view>, 7> kConditionNames{{
    {ConditionType::Equals, "equals"},
    {ConditionType::NotEquals, "not_equals"},
    {ConditionType::GreaterThan, "greater_than"},
    {ConditionType::LessThan, "less_than"},
    {ConditionType::Contains, "contains"},
    {ConditionType::Regex, "regex"},
    {ConditionType::NearPosition, "near_position"},
}};

constexpr std::size_t kExcerptArrayLimit = 8;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (s.starts_with('+')) s.remove_prefix(1);
  double v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool is_scalar(const msg::Value& v) { return !v.is_array() && !v.is_record(); }

// Field lookup that also accepts a leading topic alias ("cmd_vel.linear.x").
const msg::Value& lookup(const msg::Value& message, const msg::FieldPath& path, std::string_view topic) {
  try {
    return msg::get_field(message, path);
  } catch (const Error&) {
    const auto leaf = topic.substr(topic.rfind('/') + 1);
    if (path.segments.size() > 1 && path.segments.front() == leaf && !message.find(leaf)) {
      msg::FieldPath rest;
      rest.segments.assign(path.segments.begin() + 1, path.segments.end());
      return msg::get_field(message, rest);
    }
    throw;
  }
}

// Equality against the text of the condition. Numbers compare numerically;
// float32 fields compare at float32 precision.
bool scalar_equals(const msg::Value& v, std::string_view text) {
  if (v.is<std::string>()) return v.as<std::string>() == text;
  if (v.is<bool>()) {
    const auto t = to_lower(trim(text));
    if (t == "true") return v.as<bool>();
    if (t == "false") return !v.as<bool>();
  }
  const auto want = parse_real(text);
  const auto have = msg::to_real(v);
  if (!want || !have) return msg::to_display_string(v) == trim(text);
  if (v.is<float>()) return v.as<float>() == static_cast<float>(*want);
  return *have == *want;
}

class Matcher {
 public:
  explicit Matcher(const SearchCondition& c) : c_(c) {
    switch (c.type) {
      case ConditionType::Equals:
      case ConditionType::NotEquals:
        require_field();
        break;
      case ConditionType::GreaterThan:
      case ConditionType::LessThan:
        require_field();
        bound_ = parse_real(c.value);
        if (!bound_) {
          throw Error(Errc::BadCondition, fmt::format("{} needs a numeric value, got '{}'", condition_name(c.type),
                                                      c.value));
        }
        break;
      case ConditionType::Contains:
        break;
      case ConditionType::Regex:
        try {
          re_ = std::regex(c.value, std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
          throw Error(Errc::BadCondition, fmt::format("regex '{}' does not compile: {}", c.value, e.what()));
        }
        break;
      case ConditionType::NearPosition:
        break;
    }
  }

  // Returns the matching field value (or null for whole-message checks) when
  // the message satisfies the condition.
  std::optional<nlohmann::json> test(const msg::Value& message, std::string_view topic) const {
    if (!c_.field) {
      const auto text = msg::to_json(message).dump();
      return text_match(text) ? std::optional<nlohmann::json>(nullptr) : std::nullopt;
    }
    const auto& node = lookup(message, msg::FieldPath::parse(*c_.field), topic);
    const auto emit = [&]() -> std::optional<nlohmann::json> {
      return msg::to_json(node, {.max_array_elements = kExcerptArrayLimit});
    };
    // Arrays match when any element does.
    if (node.is_array()) {
      for (const auto& e : node.as<msg::Array>()) {
        if (is_scalar(e) && scalar_test(e)) return emit();
      }
      if (c_.type == ConditionType::NotEquals) return std::nullopt;
      if (ordered() && !node.as<msg::Array>().empty() && !is_scalar(node.as<msg::Array>().front())) not_numeric();
      return std::nullopt;
    }
    if (!is_scalar(node)) {
      if (ordered()) not_numeric();
      return text_match(msg::to_json(node).dump()) ? emit() : std::nullopt;
    }
    return scalar_test(node) ? emit() : std::nullopt;
  }

 private:
  bool ordered() const { return c_.type == ConditionType::GreaterThan || c_.type == ConditionType::LessThan; }

  [[noreturn]] void not_numeric() const {
    throw Error(Errc::FieldNotNumeric,
                fmt::format("field '{}' is not numeric; {} needs a number field", *c_.field, condition_name(c_.type)));
  }

  void require_field() const {
    if (!c_.field || c_.field->empty()) {
      throw Error(Errc::BadCondition,
                  fmt::format("{} needs a 'field' path such as 'linear.x'", condition_name(c_.type)));
    }
  }

  bool text_match(const std::string& text) const {
    switch (c_.type) {
      case ConditionType::Contains:
        return text.find(c_.value) != std::string::npos;
      case ConditionType::Regex:
        return std::regex_search(text, re_);
      default:
        return false;
    }
  }

  bool scalar_test(const msg::Value& v) const {
    switch (c_.type) {
      case ConditionType::Equals:
        return scalar_equals(v, c_.value);
      case ConditionType::NotEquals:
        return !scalar_equals(v, c_.value);
      case ConditionType::GreaterThan:
      case ConditionType::LessThan: {
        const auto x = msg::to_real(v);
        if (!x) not_numeric();
        return c_.type == ConditionType::GreaterThan ? *x > *bound_ : *x < *bound_;
      }
      default:
        return text_match(msg::to_display_string(v));
    }
  }

  const SearchCondition& c_;
  std::optional<double> bound_;
  std::regex re_;
};

struct Target {
  double x, y, radius;
};

Target parse_target(std::string_view value) {
  std::vector<double> parts;
  std::size_t pos = 0;
  while (true) {
    const auto comma = value.find(',', pos);
    const auto piece = value.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    const auto v = parse_real(piece);
    if (!v) break;
    parts.push_back(*v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  const bool ok = parts.size() == 3 && std::count(value.begin(), value.end(), ',') == 2 && parts[2] >= 0;
  if (!ok) {
    throw Error(Errc::BadCondition,
                fmt::format("near_position expects value \"x,y,radius\" (three numbers, radius >= 0), got '{}'",
                            value));
  }
  return {parts[0], parts[1], parts[2]};
}

}  // namespace

std::string_view condition_name(ConditionType t) noexcept {
  for (const auto& [k, n] : kConditionNames) {
    if (k == t) return n;
  }
  return "unknown";
}

std::optional<ConditionType> parse_condition_type(std::string_view name) noexcept {
  for (const auto& [k, n] : kConditionNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::vector<std::string> condition_names() {
  std::vector<std::string> out;
  for (const auto& [k, n] : kConditionNames) out.emplace_back(n);
  return out;
}

SearchResult search_messages(const bag::BagHandle& bag, std::string_view topic_name, const SearchCondition& condition,
                             std::size_t limit, std::optional<double> start_time, std::optional<double> end_time) {
  if (limit == 0) throw Error(Errc::InvalidArgument, "limit must be at least 1");
  if (start_time && end_time && *start_time > *end_time) {
    throw Error(Errc::InvalidRange, fmt::format("start_time {:.6f} is after end_time {:.6f}", *start_time, *end_time));
  }
  SearchResult r;
  r.topic = resolve_topic(bag, topic_name);
  r.condition = condition;
  const auto w = TimeWindow::from_seconds(start_time, end_time);
  bag::MessageQuery q{.topics = std::set<std::string, std::less<>>{r.topic}, .start_ns = {}, .end_ns = {}};
  if (start_time) q.start_ns = w.start_ns;
  if (end_time) q.end_ns = w.end_ns;

  if (condition.type == ConditionType::NearPosition) {
    const auto target = parse_target(condition.value);
    r.target_x = target.x;
    r.target_y = target.y;
    r.radius = target.radius;
    for (const auto* c : bag.connections_for_topic(r.topic)) {
      if (!msg::is_pose_type(c->type_name)) {
        throw Error(Errc::UnsupportedPoseType,
                    fmt::format("near_position needs a pose topic (Odometry, PoseStamped or "
                                "PoseWithCovarianceStamped); '{}' carries {}",
                                r.topic, c->type_name));
      }
    }
    std::vector<SearchMatch> all;
    bag.for_each(q, [&](const bag::MessageView& m) {
      ++r.scanned;
      const auto pose = msg::extract_pose2d(m.connection->type_name, decode_message(m));
      const double d = std::hypot(pose->x - target.x, pose->y - target.y);
      if (!r.closest || d < r.closest->distance) r.closest = ClosestApproach{d, pose->x, pose->y, m.time_ns};
      if (d <= target.radius) {
        all.push_back({m.time_ns, {{"x", pose->x}, {"y", pose->y}}, {{"x", pose->x}, {"y", pose->y}, {"yaw", pose->yaw}},
                       d});
      }
      return true;
    });
    std::stable_sort(all.begin(), all.end(),
                     [](const SearchMatch& a, const SearchMatch& b) { return *a.distance < *b.distance; });
    r.total_matches = all.size();
    if (all.size() > limit) all.resize(limit);
    r.matches = std::move(all);
    return r;
  }

  const Matcher matcher(condition);
  bag.for_each(q, [&](const bag::MessageView& m) {
    ++r.scanned;
    const auto value = decode_message(m);
    if (auto hit = matcher.test(value, r.topic)) {
      ++r.total_matches;
      if (r.matches.size() < limit) {
        r.matches.push_back({m.time_ns, std::move(*hit), msg::to_json(value, {.max_array_elements = kExcerptArrayLimit}),
                             std::nullopt});
      }
    }
    return true;
  });
  return r;
}

nlohmann::json to_json(const SearchResult& r) {
  nlohmann::json j = {{"topic", r.topic},
                      {"condition_type", condition_name(r.condition.type)},
                      {"value", r.condition.value},
                      {"scanned", r.scanned},
                      {"total_matches", r.total_matches},
                      {"returned", r.matches.size()}};
  if (r.condition.field) j["field"] = *r.condition.field;
  auto matches = nlohmann::json::array();
  for (const auto& m : r.matches) {
    nlohmann::json e = {{"time", ns_to_seconds(m.time_ns)}};
    if (m.distance) {
      e["distance"] = *m.distance;
      e["position"] = m.field_value;
    } else {
      if (!m.field_value.is_null()) e["value"] = m.field_value;
      e["message"] = m.excerpt;
    }
    matches.push_back(std::move(e));
  }
  j["matches"] = std::move(matches);
  if (r.condition.type == ConditionType::NearPosition) {
    j["target"] = {{"x", r.target_x}, {"y", r.target_y}, {"radius", r.radius}};
    if (r.closest) {
      j["closest_approach"] = {{"distance", r.closest->distance},
                               {"x", r.closest->x},
                               {"y", r.closest->y},
                               {"time", ns_to_seconds(r.closest->time_ns)}};
    } else {
      j["closest_approach"] = nullptr;
    }
  }
  return j;
}

}  // namespace bagpilot::store
