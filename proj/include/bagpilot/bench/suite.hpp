// SPDX-License-Identifier: Apache-2.0
// Task suites, per-task results, success classification and report export.
#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace bagpilot::bench {

using nlohmann::json;

struct SuccessCheck {
  enum class Kind { FileExists, JsonFieldNear, BagTopics };
  Kind kind = Kind::FileExists;
  std::string path;                // FileExists, BagTopics
  std::string tool;                // JsonFieldNear: last successful call of this tool
  std::string field;               // JsonFieldNear: JSON pointer into the tool's data block
  double value = 0.0;
  double tol = 0.0;
  std::set<std::string> topics;    // BagTopics: exact topic set of the bag at `path`
};

std::string_view check_kind_name(SuccessCheck::Kind k) noexcept;

struct TaskSpec {
  std::string id;
  std::string prompt;  // placeholders already bound
  std::set<std::string> required_tools;
  std::filesystem::path bag;
  std::vector<SuccessCheck> checks;  // all must pass; empty means none
};

struct Suite {
  std::string name;
  std::string fixture_scenario;  // scenario that produces the fixture bag, if any
  std::filesystem::path fixture_bag;
  std::vector<TaskSpec> tasks;
};

struct LoadOptions {
  std::filesystem::path fixtures_dir;  // {bag_dir}; relative bag paths resolve here
  std::filesystem::path output_dir;    // {out_dir}
};

/// Throws Error(MalformedSuite) or Error(UnknownRequiredTool).
Suite load_suite(const std::filesystem::path& file, const LoadOptions& options);
std::vector<TaskSpec> load_tasks(const std::filesystem::path& file, const LoadOptions& options);

/// The suite shipped with the sources.
std::filesystem::path default_suite_path();

enum class Outcome { Full, Partial, Fail };

std::string_view outcome_name(Outcome o) noexcept;

struct CallRecord {
  std::string name;
  std::string args_digest;  // first 16 hex digits of SHA-256 over the compact arguments
  double latency_ms = 0.0;
  bool is_error = false;
};

struct CheckOutcome {
  bool passed = false;
  std::string detail;
};

struct TaskResult {
  std::string task_id;
  std::string agent;
  std::vector<CallRecord> tools_called;
  double total_latency_ms = 0.0;
  Outcome success = Outcome::Fail;
  std::string reason;                 // why the task failed, or empty
  std::optional<std::string> abort;   // transport error or round cap
  std::vector<CheckOutcome> checks;   // one per TaskSpec::checks entry
  std::string answer;
  json transcript = json::array();
};

/// Pure classification of the recorded calls and checks. Sets nothing.
Outcome evaluate(const TaskResult& result, const TaskSpec& task);
/// Human-readable reason for a non-full outcome, empty when full.
std::string explain(const TaskResult& result, const TaskSpec& task);

struct ReportFiles {
  std::filesystem::path calls_csv;
  std::filesystem::path tasks_csv;
  std::filesystem::path summary;
};

/// Writes calls.csv, tasks.csv, summary.txt and transcripts/<task>.json.
/// Throws Error(InvalidArgument) for no results, Error(IoFailure) on write errors.
ReportFiles export_report(const std::vector<TaskResult>& results, const std::filesystem::path& out_dir);

/// The summary text that export_report writes.
std::string summarize(const std::vector<TaskResult>& results);

}  // namespace bagpilot::bench
