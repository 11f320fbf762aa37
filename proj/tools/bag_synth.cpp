// SPDX-License-Identifier: Apache-2.0
// bag-synth: writes a simulated fixture bag and its truth sidecar.
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "bagpilot/error.hpp"
#include "bagpilot/synth/synth.hpp"

namespace fs = std::filesystem;
using namespace bagpilot;

int main(int argc, char** argv) {
  CLI::App app{"Generate a deterministic synthetic bag"};
  std::string scenario_arg;
  fs::path out;
  bool list = false;
  bool print = false;
  app.add_option("--scenario", scenario_arg, "Scenario JSON file or built-in scenario name");
  app.add_option("--out", out, "Output .bag path");
  app.add_flag("--list", list, "List built-in scenarios");
  app.add_flag("--print", print, "Print the scenario JSON instead of simulating");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& name : synth::scenario_names()) std::cout << name << '\n';
    return 0;
  }
  if (scenario_arg.empty()) {
    std::cerr << "--scenario is required\n";
    return 2;
  }
  try {
    const auto scenario = fs::exists(scenario_arg) ? synth::load_scenario(scenario_arg)
                                                   : synth::named_scenario(scenario_arg);
    if (print) {
      std::cout << synth::scenario_to_json(scenario).dump(2) << '\n';
      return 0;
    }
    if (out.empty()) {
      std::cerr << "--out is required\n";
      return 2;
    }
    const auto trace = synth::simulate(scenario);
    const auto stats = synth::write_fixture(trace, out);
    fmt::print("{}: {} messages, {} chunks, {} bytes; truth in {}\n", out.string(), stats.message_count,
               stats.chunk_count, stats.file_size, synth::truth_path(out).string());
    return 0;
  } catch (const Error& e) {
    fmt::print(stderr, "{}: {}\n", e.code_name(), e.what());
    return 1;
  }
}
