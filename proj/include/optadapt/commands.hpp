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
// Subcommand implementations backing the CLI binary. Exit-code contract:
//   0 success, 1 input/validation error, 2 solver divergence.

#ifndef OPTADAPT_COMMANDS_HPP_
#define OPTADAPT_COMMANDS_HPP_

#include <cstdint>
#include <optional>
#include <string>

namespace optadapt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitSolverDivergence = 2;

struct CommandArgs {
  std::string model_path;     // optional override of the scenario's model
  std::string scenario_path;  // scenario (plan/simulate) or suite (benchmark)
  std::string out_dir;        // output directory (OPTADAPT_OUT fallback)
  std::optional<std::uint64_t> seed;  // overrides the document's seed
  std::string planner;        // overrides the scenario's planner
  std::string mode;           // "open" | "closed"
  int jobs = 0;               // benchmark parallelism, 0 = auto
  bool verbose = false;
};

int cmd_plan(const CommandArgs& args);
int cmd_simulate(const CommandArgs& args);
int cmd_benchmark(const CommandArgs& args);
int cmd_export_figures(const CommandArgs& args);

}  // namespace optadapt

#endif  // OPTADAPT_COMMANDS_HPP_
