// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "bagpilot/bench/agent.hpp"
#include "bagpilot/bench/client.hpp"
#include "bagpilot/bench/suite.hpp"

namespace bagpilot::bench {

inline constexpr int kDefaultMaxRounds = 12;

struct RunOptions {
  int max_rounds = kDefaultMaxRounds;
};

/// Opens an MCP session, points it at the task's bag, lets the agent drive
/// tools/call until it answers or runs out of rounds, then runs the checks.
/// Transport failures are recorded as a failed result, never thrown.
TaskResult run_task(const TaskSpec& task, Agent& agent, const Connector& server, const RunOptions& options = {});

/// Tasks run one after another.
std::vector<TaskResult> run_suite(const std::vector<TaskSpec>& tasks, Agent& agent, const Connector& server,
                                  const RunOptions& options = {});

}  // namespace bagpilot::bench
