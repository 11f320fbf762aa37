// SPDX-License-Identifier: Apache-2.0
// rosbags-mcp-lite: the MCP tool server over stdio or HTTP.
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "bagpilot/error.hpp"
#include "bagpilot/mcp/server.hpp"

int main(int argc, char** argv) {
  using namespace bagpilot;
  CLI::App app{"MCP server for ROS bag analysis"};
  std::string transport = "stdio";
  std::string host = "127.0.0.1";
  int port = mcp::kDefaultPort;
  std::string bags;
  std::string level = "info";
  app.add_option("--transport", transport, "stdio or http")->check(CLI::IsMember({"stdio", "http"}));
  app.add_option("--port", port, "HTTP port")->check(CLI::Range(0, 65535));
  app.add_option("--host", host, "HTTP bind address");
  app.add_option("--bags", bags, "Initial bag file or directory (default: $BAGPILOT_BAGS)");
  app.add_option("--log-level", level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));
  app.set_version_flag("--version", std::string(mcp::kServerVersion));
  CLI11_PARSE(app, argc, argv);

  // stdout carries the protocol, so logs go to stderr.
  spdlog::set_default_logger(spdlog::stderr_color_mt("mcp"));
  spdlog::set_level(spdlog::level::from_str(level));

  if (bags.empty()) {
    if (const char* env = std::getenv("BAGPILOT_BAGS")) bags = env;
  }
  try {
    mcp::ToolServer tools(bags.empty() ? std::nullopt : std::optional<std::string>(bags));
    if (!bags.empty()) spdlog::info("bag path: {}", bags);
    if (transport == "stdio") {
      std::ios::sync_with_stdio(false);
      mcp::serve_stdio(tools, std::cin, std::cout);
    } else {
      mcp::HttpTransport http(tools);
      http.run(host, port);
    }
  } catch (const Error& e) {
    spdlog::critical("{}: {}", e.code_name(), e.what());
    return 1;
  }
  return 0;
}
