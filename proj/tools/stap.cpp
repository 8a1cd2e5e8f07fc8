// Copyright 2026 The stap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// stap: pulse schedules, evolutions, gate reports and fidelity sweeps.
//
//   stap pulse  --config run.cfg --out pulses.csv
//   stap figure fig3a --out fig3a.csv --no-timestamp
//   stap gate --set protocol=two_qubit --exact-epsilon --threshold 0.99 --out cz.csv

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stap/cli.hpp"

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> assignments;
  std::string out;
  bool no_timestamp = false;
  bool exact_epsilon = false;
  double threshold = -1.0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key = value config file");
  cmd->add_option("--set", c.assignments, "override a config key (key=value), repeatable");
  cmd->add_option("--out", c.out, "output CSV path");
  cmd->add_flag("--no-timestamp", c.no_timestamp, "omit the timestamp comment line");
  cmd->add_flag("--exact-epsilon", c.exact_epsilon, "choose epsilon from the exact phase condition");
  cmd->add_option("--threshold", c.threshold, "minimum fidelity; exit 3 below it");
}

int execute(const std::string& command, const std::string& figure, const Common& c) {
  using namespace stap::cli;
  try {
    RunConfig cfg = c.config_path.empty() ? RunConfig{} : RunConfig::load(c.config_path);
    for (const auto& a : c.assignments) cfg.set_assignment(a);
    std::string actual = command;
    std::string label = command;
    if (command == "figure") {
      apply_figure_defaults(figure, cfg);
      actual = figure_commands().at(figure);
      label = "figure " + figure;
    }
    CliOptions opt;
    opt.out = c.out.empty() ? cfg.text("output", command == "figure" ? figure + ".csv" : "") : c.out;
    if (opt.out.empty()) throw stap::ConfigError("no output path: pass --out or set output in the config");
    if (!c.out.empty() && cfg.has("output")) cfg.text("output", "");
    opt.timestamp = !c.no_timestamp;
    opt.exact_epsilon = c.exact_epsilon;
    if (c.threshold >= 0.0) opt.threshold = c.threshold;

    const CommandResult r = run(actual, cfg, opt, label);
    for (const auto& n : r.notes) std::cout << n << "\n";
    std::cout << "wrote " << opt.out << "\n";
    if (r.exit_code == kThresholdViolation) std::cerr << "threshold not met\n";
    return r.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shortcut-to-adiabatic-passage phase gates in cavity QED"};
  app.set_version_flag("--version", std::string(stap::cli::kVersion));
  app.require_subcommand(1);

  Common common;
  std::string figure;
  std::vector<std::pair<CLI::App*, std::string>> commands;
  for (const char* name : {"pulse", "evolve", "gate", "sweep"}) {
    auto* cmd = app.add_subcommand(name);
    add_common(cmd, common);
    commands.emplace_back(cmd, name);
  }
  commands[0].first->description("pulse schedule t, omega1, omega2");
  commands[1].first->description("population time series of one model");
  commands[2].first->description("execute a gate protocol and report fidelities");
  commands[3].first->description("2D fidelity sweep");
  auto* fig = app.add_subcommand("figure", "reproduce a figure with caption defaults");
  fig->add_option("id", figure, "fig2a, fig2b, fig3a, fig3b, fig4a, fig4b, fig4c, fig5a or fig5b")->required();
  add_common(fig, common);
  commands.emplace_back(fig, "figure");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : stap::cli::kConfigError;
  }
  for (const auto& [cmd, name] : commands) {
    if (cmd->parsed()) return execute(name, figure, common);
  }
  return stap::cli::kConfigError;
}
