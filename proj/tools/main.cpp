// Copyright 2026 The optadapt Authors.
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
//
// Command-line front end: plan | simulate | benchmark | export-figures.

#include <cstdint>
#include <functional>
#include <string>

#include <CLI11.hpp>

#include "optadapt/commands.hpp"

namespace {

// Flags shared by every subcommand. The scenario is accepted both as the
// positional argument and as --scenario.
void add_common_options(CLI::App* cmd, optadapt::CommandArgs* args,
                        const std::string& scenario_help,
                        bool scenario_required = true) {
  CLI::Option* scenario =
      cmd->add_option("--scenario,scenario", args->scenario_path,
                      scenario_help);
  if (scenario_required) scenario->required();
  cmd->add_option("--out", args->out_dir,
                  "Output directory (default: $OPTADAPT_OUT or ./out)");
  cmd->add_option("--seed", args->seed, "Override the document's RNG seed");
}

void add_planner_options(CLI::App* cmd, optadapt::CommandArgs* args) {
  cmd->add_option("--model", args->model_path,
                  "Override the scenario's robot model file");
  cmd->add_option("--planner", args->planner,
                  "Planner: optimal-adapt | adapt | optimal-lqr | rrt | est");
  cmd->add_option("--mode", args->mode, "Execution mode: open | closed")
      ->check(CLI::IsMember({"open", "closed", "open-loop", "closed-loop"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Trajectory planning and execution for redundant serial manipulators"};
  app.require_subcommand(1);

  optadapt::CommandArgs args;
  std::function<int(const optadapt::CommandArgs&)> run;

  CLI::App* plan = app.add_subcommand(
      "plan", "Plan a trajectory for one scenario and write the artifacts");
  add_common_options(plan, &args, "Scenario JSON file");
  add_planner_options(plan, &args);
  plan->callback([&] { run = optadapt::cmd_plan; });

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Plan, then execute the plan on the disturbed plant");
  add_common_options(simulate, &args, "Scenario JSON file");
  add_planner_options(simulate, &args);
  simulate->callback([&] { run = optadapt::cmd_simulate; });

  CLI::App* benchmark = app.add_subcommand(
      "benchmark", "Run a scenario suite across planners and aggregate");
  add_common_options(benchmark, &args, "Suite JSON file");
  benchmark->add_option("--planner", args.planner,
                        "Comma-separated planner subset (default: all)");
  benchmark->add_option("--mode", args.mode,
                        "Force execution mode: open | closed")
      ->check(CLI::IsMember({"open", "closed", "open-loop", "closed-loop"}));
  benchmark->add_option("--jobs", args.jobs,
                        "Worker threads (default: one per hardware thread)")
      ->check(CLI::NonNegativeNumber);
  benchmark->add_flag("--verbose", args.verbose,
                      "Report per-run failures on stderr");
  benchmark->callback([&] { run = optadapt::cmd_benchmark; });

  CLI::App* figures = app.add_subcommand(
      "export-figures",
      "Convert a finished run's execution artifacts into plot-ready CSVs");
  add_common_options(figures, &args,
                     "Scenario JSON file (default: scenario_used.json from "
                     "the output directory)",
                     /*scenario_required=*/false);
  figures->add_option("--planner", args.planner,
                      "Comma-separated planner subset (default: all found)");
  figures->callback([&] { run = optadapt::cmd_export_figures; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints the help text or the error
    return code == 0 ? optadapt::kExitOk : optadapt::kExitInputError;
  }
  return run(args);
}
