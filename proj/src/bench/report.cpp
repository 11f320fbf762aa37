// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "bagpilot/bench/suite.hpp"
#include "bagpilot/error.hpp"

namespace bagpilot::bench {

namespace fs = std::filesystem;

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

/// Linear interpolation between closest ranks.
double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw Error(Errc::IoFailure, fmt::format("cannot write '{}'", path.string()));
}

}  // namespace

std::string summarize(const std::vector<TaskResult>& results) {
  if (results.empty()) throw Error(Errc::InvalidArgument, "no task results to summarize");
  std::size_t full = 0, partial = 0;
  std::vector<double> latency;
  std::map<std::size_t, std::size_t> tool_counts;
  for (const auto& r : results) {
    latency.push_back(r.total_latency_ms);
    if (r.success == Outcome::Fail) continue;
    (r.success == Outcome::Full ? full : partial)++;
    tool_counts[r.tools_called.size()]++;
  }
  const auto n = results.size();
  const auto ok = full + partial;
  std::string s;
  s += fmt::format("agent: {}\n", results.front().agent);
  s += fmt::format("tasks: {}\n", n);
  s += fmt::format("success rate: {:.1f}% ({}/{})\n", 100.0 * static_cast<double>(ok) / static_cast<double>(n), ok, n);
  s += fmt::format("  full: {}\n  partial: {}\n  fail: {}\n", full, partial, n - ok);
  const double q1 = quantile(latency, 0.25), q3 = quantile(latency, 0.75);
  s += fmt::format("task latency ms: median {:.3f}, IQR {:.3f} (q1 {:.3f}, q3 {:.3f}), min {:.3f}, max {:.3f}\n",
                   quantile(latency, 0.5), q3 - q1, q1, q3, *std::min_element(latency.begin(), latency.end()),
                   *std::max_element(latency.begin(), latency.end()));
  s += "tool calls per successful task:\n";
  if (tool_counts.empty()) s += "  (no successful tasks)\n";
  for (const auto& [count, tasks] : tool_counts) s += fmt::format("  {} call(s): {} task(s)\n", count, tasks);
  s += "per task:\n";
  for (const auto& r : results) {
    s += fmt::format("  {} {} ({} call(s)){}\n", r.task_id, outcome_name(r.success), r.tools_called.size(),
                     r.reason.empty() ? "" : ": " + r.reason);
  }
  return s;
}

ReportFiles export_report(const std::vector<TaskResult>& results, const fs::path& out_dir) {
  if (results.empty()) throw Error(Errc::InvalidArgument, "no task results to export");
  std::error_code ec;
  fs::create_directories(out_dir / "transcripts", ec);
  if (ec) throw Error(Errc::IoFailure, fmt::format("cannot create '{}': {}", out_dir.string(), ec.message()));

  ReportFiles files{out_dir / "calls.csv", out_dir / "tasks.csv", out_dir / "summary.txt"};
  std::string calls = "task_id,tool,latency_ms,is_error\n";
  std::string tasks = "task_id,success,total_latency_ms,tool_count\n";
  for (const auto& r : results) {
    for (const auto& c : r.tools_called) {
      calls += fmt::format("{},{},{:.3f},{}\n", csv_cell(r.task_id), csv_cell(c.name), c.latency_ms,
                           c.is_error ? "true" : "false");
    }
    tasks += fmt::format("{},{},{:.3f},{}\n", csv_cell(r.task_id), outcome_name(r.success), r.total_latency_ms,
                         r.tools_called.size());
    write_file(out_dir / "transcripts" / (r.task_id + ".json"), r.transcript.dump(2) + "\n");
  }
  write_file(files.calls_csv, calls);
  write_file(files.tasks_csv, tasks);
  write_file(files.summary, summarize(results));
  return files;
}

}  // namespace bagpilot::bench
