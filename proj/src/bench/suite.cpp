// SPDX-License-Identifier: Apache-2.0
#include "bagpilot/bench/suite.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>

#include <fmt/format.h>

#include "bagpilot/error.hpp"
#include "bagpilot/mcp/server.hpp"

#ifndef BAGPILOT_SUITE_DIR
#define BAGPILOT_SUITE_DIR "tools/suites"
#endif

namespace bagpilot::bench {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::MalformedSuite, what); }

using Params = std::map<std::string, std::string>;

void add_params(Params& out, const json& j, const std::string& where) {
  if (j.is_null()) return;
  if (!j.is_object()) malformed(fmt::format("{}: params must be an object", where));
  for (const auto& [k, v] : j.items()) {
    if (v.is_string()) {
      out[k] = v.get<std::string>();
    } else if (v.is_number() || v.is_boolean()) {
      out[k] = v.dump();
    } else {
      malformed(fmt::format("{}: param '{}' must be a string, number or boolean", where, k));
    }
  }
}

std::string bind_params(const std::string& text, const Params& params, const std::string& where) {
  static const std::regex placeholder(R"(\{([A-Za-z_][A-Za-z0-9_]*)\})");
  std::string out;
  auto last = text.cbegin();
  for (std::sregex_iterator it(text.begin(), text.end(), placeholder), end; it != end; ++it) {
    const auto& m = *it;
    const auto found = params.find(m[1].str());
    if (found == params.end()) malformed(fmt::format("{}: unbound placeholder {}", where, m[0].str()));
    out.append(last, m[0].first);
    out += found->second;
    last = m[0].second;
  }
  out.append(last, text.cend());
  return out;
}

std::string string_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) {
    malformed(fmt::format("{}: '{}' must be a non-empty string", where, key));
  }
  return j[key].get<std::string>();
}

double number_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_number()) malformed(fmt::format("{}: '{}' must be a number", where, key));
  return j[key].get<double>();
}

SuccessCheck parse_check(const json& j, const Params& params, const std::string& where) {
  if (!j.is_object()) malformed(fmt::format("{}: success_check entries must be objects", where));
  const auto kind = string_field(j, "kind", where);
  SuccessCheck c;
  if (kind == "file_exists") {
    c.kind = SuccessCheck::Kind::FileExists;
    c.path = bind_params(string_field(j, "path", where), params, where);
  } else if (kind == "json_field_near") {
    c.kind = SuccessCheck::Kind::JsonFieldNear;
    c.tool = string_field(j, "tool", where);
    c.field = string_field(j, "field", where);
    if (c.field.front() != '/') malformed(fmt::format("{}: field must be a JSON pointer such as /a/0/b", where));
    c.value = number_field(j, "value", where);
    c.tol = number_field(j, "tol", where);
    if (!(c.tol >= 0)) malformed(fmt::format("{}: tol must be non-negative", where));
  } else if (kind == "bag_topics") {
    c.kind = SuccessCheck::Kind::BagTopics;
    c.path = bind_params(string_field(j, "path", where), params, where);
    if (!j.contains("topics") || !j["topics"].is_array() || j["topics"].empty()) {
      malformed(fmt::format("{}: topics must be a non-empty array", where));
    }
    for (const auto& t : j["topics"]) {
      if (!t.is_string()) malformed(fmt::format("{}: topics must be strings", where));
      c.topics.insert(t.get<std::string>());
    }
  } else {
    malformed(fmt::format("{}: unknown success_check kind '{}'", where, kind));
  }
  return c;
}

std::set<std::string> registered_tools() {
  std::set<std::string> names;
  for (const auto& t : mcp::tool_descriptors()) names.insert(t.name);
  return names;
}

}  // namespace

std::string_view check_kind_name(SuccessCheck::Kind k) noexcept {
  switch (k) {
    case SuccessCheck::Kind::FileExists: return "file_exists";
    case SuccessCheck::Kind::JsonFieldNear: return "json_field_near";
    case SuccessCheck::Kind::BagTopics: return "bag_topics";
  }
  return "unknown";
}

fs::path default_suite_path() { return fs::path(BAGPILOT_SUITE_DIR) / "patrol_tasks.json"; }

Suite load_suite(const fs::path& file, const LoadOptions& options) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::PathNotFound, fmt::format("cannot open suite '{}'", file.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    malformed(fmt::format("{}: {}", file.string(), e.what()));
  }
  if (!doc.is_object()) malformed("suite must be a JSON object");
  if (!doc.contains("tasks") || !doc["tasks"].is_array() || doc["tasks"].empty()) {
    malformed("suite needs a non-empty 'tasks' array");
  }

  const auto fixtures_dir = fs::absolute(options.fixtures_dir.empty() ? file.parent_path() : options.fixtures_dir);
  const auto output_dir = options.output_dir.empty() ? fixtures_dir / "out" : fs::absolute(options.output_dir);

  Suite suite;
  suite.name = doc.value("name", file.stem().string());
  if (doc.contains("fixture")) {
    const auto& f = doc["fixture"];
    if (!f.is_object()) malformed("fixture must be an object");
    if (f.contains("scenario")) suite.fixture_scenario = string_field(f, "scenario", "fixture");
    suite.fixture_bag = fixtures_dir / string_field(f, "bag", "fixture");
  }

  Params base{{"bag_dir", fixtures_dir.string()}, {"out_dir", output_dir.string()}};
  add_params(base, doc.value("params", json()), "suite");

  const auto known = registered_tools();
  std::set<std::string> ids;
  for (std::size_t i = 0; i < doc["tasks"].size(); ++i) {
    const auto& t = doc["tasks"][i];
    auto where = fmt::format("task {}", i + 1);
    if (!t.is_object()) malformed(fmt::format("{}: must be an object", where));
    TaskSpec task;
    task.id = string_field(t, "id", where);
    where = fmt::format("task {}", task.id);
    if (!ids.insert(task.id).second) malformed(fmt::format("duplicate task id '{}'", task.id));

    if (t.contains("bag")) {
      const fs::path bag = string_field(t, "bag", where);
      task.bag = bag.is_absolute() ? bag : fixtures_dir / bag;
    } else if (!suite.fixture_bag.empty()) {
      task.bag = suite.fixture_bag;
    } else {
      malformed(fmt::format("{}: no bag and no suite fixture", where));
    }

    Params params = base;
    params["bag"] = task.bag.string();
    add_params(params, t.value("params", json()), where);
    task.prompt = bind_params(string_field(t, "prompt", where), params, where);

    if (!t.contains("required_tools") || !t["required_tools"].is_array() || t["required_tools"].empty()) {
      malformed(fmt::format("{}: required_tools must be a non-empty array", where));
    }
    for (const auto& name : t["required_tools"]) {
      if (!name.is_string()) malformed(fmt::format("{}: required_tools entries must be strings", where));
      const auto n = name.get<std::string>();
      if (!known.contains(n)) {
        throw Error(Errc::UnknownRequiredTool,
                    fmt::format("{}: '{}' is not a registered tool; known tools: {}", where, n, fmt::join(known, ", ")));
      }
      task.required_tools.insert(n);
    }

    if (t.contains("success_check") && !t["success_check"].is_null() && t["success_check"] != "none") {
      const auto& sc = t["success_check"];
      if (sc.is_array()) {
        for (const auto& c : sc) task.checks.push_back(parse_check(c, params, where));
      } else {
        task.checks.push_back(parse_check(sc, params, where));
      }
      for (const auto& c : task.checks) {
        if (c.kind == SuccessCheck::Kind::JsonFieldNear && !known.contains(c.tool)) {
          throw Error(Errc::UnknownRequiredTool, fmt::format("{}: check refers to unknown tool '{}'", where, c.tool));
        }
      }
    }
    suite.tasks.push_back(std::move(task));
  }
  return suite;
}

std::vector<TaskSpec> load_tasks(const fs::path& file, const LoadOptions& options) {
  return load_suite(file, options).tasks;
}

std::string_view outcome_name(Outcome o) noexcept {
  switch (o) {
    case Outcome::Full: return "full";
    case Outcome::Partial: return "partial";
    case Outcome::Fail: return "fail";
  }
  return "fail";
}

namespace {

struct Tally {
  std::set<std::string> called;
  std::set<std::string> succeeded;
};

Tally tally(const TaskResult& r) {
  Tally t;
  for (const auto& c : r.tools_called) {
    t.called.insert(c.name);
    if (!c.is_error) t.succeeded.insert(c.name);
  }
  return t;
}

bool checks_pass(const TaskResult& r, const TaskSpec& task) {
  if (r.checks.size() != task.checks.size()) return false;
  return std::all_of(r.checks.begin(), r.checks.end(), [](const auto& c) { return c.passed; });
}

}  // namespace

Outcome evaluate(const TaskResult& result, const TaskSpec& task) {
  if (result.abort) return Outcome::Fail;
  const auto t = tally(result);
  if (!std::includes(t.succeeded.begin(), t.succeeded.end(), task.required_tools.begin(), task.required_tools.end())) {
    return Outcome::Fail;
  }
  if (!checks_pass(result, task)) return Outcome::Fail;
  const bool extra = std::any_of(t.called.begin(), t.called.end(),
                                 [&](const auto& n) { return !task.required_tools.contains(n); });
  return extra ? Outcome::Partial : Outcome::Full;
}

std::string explain(const TaskResult& result, const TaskSpec& task) {
  if (result.abort) return *result.abort;
  const auto t = tally(result);
  std::vector<std::string> missing;
  std::set_difference(task.required_tools.begin(), task.required_tools.end(), t.succeeded.begin(), t.succeeded.end(),
                      std::back_inserter(missing));
  if (!missing.empty()) return fmt::format("required tool(s) not called successfully: {}", fmt::join(missing, ", "));
  if (result.checks.size() != task.checks.size()) return "success checks did not run";
  for (std::size_t i = 0; i < result.checks.size(); ++i) {
    if (!result.checks[i].passed) {
      return fmt::format("{} check failed: {}", check_kind_name(task.checks[i].kind), result.checks[i].detail);
    }
  }
  std::vector<std::string> extra;
  std::set_difference(t.called.begin(), t.called.end(), task.required_tools.begin(), task.required_tools.end(),
                      std::back_inserter(extra));
  if (!extra.empty()) return fmt::format("additional tool(s): {}", fmt::join(extra, ", "));
  return {};
}

}  // namespace bagpilot::bench
