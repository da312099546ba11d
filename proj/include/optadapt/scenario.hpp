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
// Scenario and suite documents: everything a planning/simulation run needs
// beyond the model itself. See docs/FILE_FORMATS.md for the schemas.

#ifndef OPTADAPT_SCENARIO_HPP_
#define OPTADAPT_SCENARIO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "optadapt/baseline_planners.hpp"
#include "optadapt/chain_model.hpp"
#include "optadapt/constraint_fields.hpp"
#include "optadapt/lq_optimizer.hpp"
#include "optadapt/types.hpp"

namespace optadapt {

enum class SimMode { kOpenLoop, kClosedLoop };

SimMode parse_mode(const std::string& text);
std::string mode_name(SimMode mode);

struct PlantParams {
  Vec friction;              // per-joint viscous coefficient, 1/s
  double disturbance = 0.01; // input noise amplitude, rad/s
  int delay_steps = 0;       // actuation delay
};

struct Scenario {
  std::string name;
  ChainModel model;
  std::string model_path;  // as referenced by the document

  Vec start;        // n, within effective limits
  Vec3 goal;        // end-effector goal position, meters

  Vec limit_min;    // effective (tightened) per-joint limits
  Vec limit_max;
  std::vector<int> tightened_joints;  // which joints have overrides

  std::vector<JointLimitBarrier> barriers;
  BarrierDefaults barrier_defaults;

  Vec gamma;                   // adaptive gains, per joint
  double integral_clamp = 10.0;
  Vec feedback_gamma;          // closed-loop correction gains

  double horizon_s = 5.0;
  double dt = 1e-3;

  // Tracking weights (diagonal values broadcast from scalars).
  Vec w_state;
  Vec w_input;
  double w_cross = 0.0;
  Vec w_terminal;

  PlantParams plant;
  SimMode mode = SimMode::kOpenLoop;
  std::string planner = "optimal-adapt";
  std::uint64_t seed = 0;

  SamplingPlannerConfig rrt;
  SamplingPlannerConfig est;

  int steps() const { return static_cast<int>(horizon_s / dt + 0.5); }
};

// Loads a scenario document; `model` paths resolve relative to the document's
// directory. Validates start within effective limits, limit overrides inside
// the model's native limits, dimensions, and schema id.
Scenario load_scenario_file(const std::string& path);

// Same, from text (base_dir resolves the model reference).
Scenario load_scenario(const std::string& text, const std::string& base_dir);

struct Suite {
  std::string name;
  std::vector<Scenario> scenarios;
  std::uint64_t master_seed = 0;
};

// Suite document: shared `defaults` block merged under each scenario entry.
Suite load_suite_file(const std::string& path);

// Quadratic tracking problem for this scenario around (x0, x_goal).
ProblemSpec make_problem_spec(const Scenario& scenario, const Vec& x0,
                              const Vec& x_goal);

// Joint-space goal from the scenario's end-effector goal: damped-least-
// squares IK seeded at `start`, clamped to the robot's native limits. This
// is the configuration the task naturally demands, with no knowledge of a
// scenario's tightened per-joint bands.
Vec scenario_goal_configuration(const Scenario& scenario);

// Same IK, but clamped to the scenario's effective (possibly tightened)
// limits, so redundancy is resolved inside the allowed bands. Only the full
// planning pipeline uses this; the baselines chase the native configuration.
Vec scenario_planning_goal_configuration(const Scenario& scenario);

}  // namespace optadapt

#endif  // OPTADAPT_SCENARIO_HPP_
