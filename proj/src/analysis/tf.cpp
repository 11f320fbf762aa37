// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include <fmt/format.h>

#include "bagpilot/analysis/analysis.hpp"
#include "bagpilot/error.hpp"
#include "bagpilot/store/store.hpp"

namespace bagpilot::analysis {

namespace {

std::string frame_name(std::string_view s) { return std::string(s.starts_with('/') ? s.substr(1) : s); }

double real_at(const msg::Value& v, std::string_view path) {
  return msg::to_real(msg::get_field(v, msg::FieldPath::parse(path))).value_or(0.0);
}

bool is_tf_type(std::string_view type) { return type == msg::kTfMessage || type == "tf/tfMessage"; }

// Tarjan's strongly connected components; components of size > 1 and
// self-loops are cycles.
std::vector<std::vector<std::string>> find_cycles(const std::vector<std::string>& frames,
                                                  const std::map<std::string, std::vector<std::string>>& children) {
  std::map<std::string, int> index, low;
  std::set<std::string> on_stack;
  std::vector<std::string> stack;
  std::vector<std::vector<std::string>> out;
  int counter = 0;
  std::function<void(const std::string&)> visit = [&](const std::string& v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack.insert(v);
    bool self_loop = false;
    if (auto it = children.find(v); it != children.end()) {
      for (const auto& w : it->second) {
        if (w == v) self_loop = true;
        if (!index.count(w)) {
          visit(w);
          low[v] = std::min(low[v], low[w]);
        } else if (on_stack.count(w)) {
          low[v] = std::min(low[v], index[w]);
        }
      }
    }
    if (low[v] != index[v]) return;
    std::vector<std::string> component;
    std::string w;
    do {
      w = stack.back();
      stack.pop_back();
      on_stack.erase(w);
      component.push_back(w);
    } while (w != v);
    if (component.size() > 1 || self_loop) {
      std::sort(component.begin(), component.end());
      out.push_back(std::move(component));
    }
  };
  for (const auto& f : frames) {
    if (!index.count(f)) visit(f);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TfTree build_tf_tree(const std::vector<TfObservation>& observations) {
  TfTree t;
  std::map<std::pair<std::string, std::string>, TfEdge> edges;
  std::set<std::string> frames;
  for (const auto& o : observations) {
    const auto parent = frame_name(o.parent);
    const auto child = frame_name(o.child);
    auto& e = edges[{parent, child}];
    e.parent = parent;
    e.child = child;
    e.is_static = e.is_static || o.is_static;
    e.translation = o.translation;
    e.rotation = o.rotation;
    ++e.observations;
    frames.insert(parent);
    frames.insert(child);
  }
  t.frames.assign(frames.begin(), frames.end());
  std::map<std::string, std::vector<std::string>> children;
  std::map<std::string, std::size_t> parents;
  for (auto& [key, e] : edges) {
    children[e.parent].push_back(e.child);
    ++parents[e.child];
    t.edges.push_back(std::move(e));
  }
  for (const auto& f : t.frames) {
    const auto n = parents.count(f) ? parents[f] : 0;
    if (n == 0) t.roots.push_back(f);
    if (n > 1) t.multi_parent.push_back(f);
  }
  t.cycles = find_cycles(t.frames, children);
  return t;
}

TfTree get_tf_tree(const bag::BagHandle& bag, std::size_t sample_limit) {
  std::vector<std::string> topics;
  for (const auto& c : bag.connections()) {
    if (is_tf_type(c.type_name) && std::find(topics.begin(), topics.end(), c.topic) == topics.end()) {
      topics.push_back(c.topic);
    }
  }
  if (topics.empty()) {
    throw Error(Errc::NoTfTopic,
                fmt::format("no tf2_msgs/TFMessage topic (/tf or /tf_static) in this bag; topics are: {}",
                            fmt::join(bag.topics(), ", ")));
  }
  std::sort(topics.begin(), topics.end());
  std::vector<TfObservation> obs;
  for (const auto& topic : topics) {
    const bool is_static = topic.ends_with("tf_static");
    std::size_t seen = 0;
    bag.for_each({.topics = std::set<std::string, std::less<>>{topic}, .start_ns = {}, .end_ns = {}},
                 [&](const bag::MessageView& m) {
                   const auto v = store::decode_message(m);
                   for (const auto& tr : msg::get_field(v, msg::FieldPath::parse("transforms")).as<msg::Array>()) {
                     TfObservation o;
                     o.parent = msg::get_field(tr, msg::FieldPath::parse("header.frame_id")).as<std::string>();
                     o.child = msg::get_field(tr, msg::FieldPath::parse("child_frame_id")).as<std::string>();
                     o.is_static = is_static;
                     o.translation = {real_at(tr, "transform.translation.x"), real_at(tr, "transform.translation.y"),
                                      real_at(tr, "transform.translation.z")};
                     o.rotation = {real_at(tr, "transform.rotation.x"), real_at(tr, "transform.rotation.y"),
                                   real_at(tr, "transform.rotation.z"), real_at(tr, "transform.rotation.w")};
                     obs.push_back(std::move(o));
                   }
                   return ++seen < sample_limit;
                 });
  }
  auto t = build_tf_tree(obs);
  t.topics = topics;
  return t;
}

nlohmann::json to_json(const TfTree& t) {
  auto edges = nlohmann::json::array();
  for (const auto& e : t.edges) {
    edges.push_back({{"parent", e.parent},
                     {"child", e.child},
                     {"static", e.is_static},
                     {"translation", e.translation},
                     {"rotation", e.rotation},
                     {"observations", e.observations}});
  }
  return {{"topics", t.topics},
          {"frames", t.frames},
          {"edges", edges},
          {"roots", t.roots},
          {"anomalies", {{"multi_parent", t.multi_parent}, {"cycles", t.cycles}}}};
}

}  // namespace bagpilot::analysis
