// SPDX-License-Identifier: Apache-2.0
// bench: runs a task suite against an agent through the MCP server and
// writes per-call and per-task CSVs plus a summary.
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "bagpilot/bench/harness.hpp"
#include "bagpilot/error.hpp"
#include "bagpilot/mcp/server.hpp"
#include "bagpilot/synth/synth.hpp"

namespace fs = std::filesystem;
using namespace bagpilot;

namespace {

void ensure_fixture(const bench::Suite& suite) {
  if (suite.fixture_bag.empty() || fs::exists(suite.fixture_bag)) return;
  if (suite.fixture_scenario.empty()) {
    throw Error(Errc::PathNotFound, fmt::format("fixture {} is missing", suite.fixture_bag.string()));
  }
  spdlog::info("generating {} from scenario {}", suite.fixture_bag.string(), suite.fixture_scenario);
  fs::create_directories(suite.fixture_bag.parent_path());
  synth::write_fixture(synth::simulate(synth::named_scenario(suite.fixture_scenario)), suite.fixture_bag);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-suite benchmark for the MCP bag tools"};
  app.require_subcommand(1);

  fs::path suite_file = bench::default_suite_path();
  bench::LoadOptions load;
  std::string level = "info";
  auto add_suite_options = [&](CLI::App* cmd) {
    cmd->add_option("--suite", suite_file, "Task suite JSON")->capture_default_str();
    cmd->add_option("--bags", load.fixtures_dir, "Fixture directory (default: the suite's directory)");
    cmd->add_option("--out", load.output_dir, "Output directory for results and task outputs")->required(cmd->get_name() == "run");
  };

  auto* run = app.add_subcommand("run", "Run every task and export the report");
  std::string agent_spec;
  std::string server;
  bench::RunOptions options;
  double timeout_s = 120.0;
  add_suite_options(run);
  run->add_option("--agent", agent_spec, "scripted:perfect|verbose|lazy or http:<config.json>")->required();
  run->add_option("--server", server, "MCP server base URL, e.g. http://127.0.0.1:8711 (default: in-process)");
  run->add_option("--max-rounds", options.max_rounds, "Agent turns per task")->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--timeout", timeout_s, "Per-call timeout for the MCP server, seconds")->capture_default_str();
  run->add_option("--log-level", level, "trace, debug, info, warn, error or off");

  auto* list = app.add_subcommand("list", "Print the tasks of a suite");
  add_suite_options(list);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("bench"));
  spdlog::set_level(spdlog::level::from_str(level));

  try {
    if (load.fixtures_dir.empty()) load.fixtures_dir = suite_file.parent_path();
    const auto suite = bench::load_suite(suite_file, load);
    if (*list) {
      for (const auto& t : suite.tasks) {
        fmt::print("{}  [{}]  {}\n", t.id, fmt::join(t.required_tools, ", "), t.prompt);
      }
      return 0;
    }

    ensure_fixture(suite);
    fs::create_directories(load.output_dir);
    auto agent = bench::make_agent(agent_spec);
    std::unique_ptr<mcp::ToolServer> local;
    bench::Connector connect;
    if (server.empty()) {
      local = std::make_unique<mcp::ToolServer>();
      connect = bench::local_endpoint(*local);
    } else {
      connect = bench::http_endpoint(server, timeout_s);
    }
    const auto results = bench::run_suite(suite.tasks, *agent, connect, options);
    const auto files = bench::export_report(results, load.output_dir);
    std::cout << bench::summarize(results);
    spdlog::info("wrote {}, {} and {}", files.calls_csv.string(), files.tasks_csv.string(), files.summary.string());
  } catch (const Error& e) {
    spdlog::critical("{}: {}", e.code_name(), e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::critical("{}", e.what());
    return 1;
  }
  return 0;
}
