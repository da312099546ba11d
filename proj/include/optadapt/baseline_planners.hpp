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
// Joint-space sampling baselines: single-tree RRT and a density-guided EST.
// Validity is the scenario's (possibly tightened) joint-limit box; paths are
// time-parameterized at the velocity limits. Fully deterministic per seed.

#ifndef OPTADAPT_BASELINE_PLANNERS_HPP_
#define OPTADAPT_BASELINE_PLANNERS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "optadapt/chain_model.hpp"
#include "optadapt/types.hpp"

namespace optadapt {

struct SamplingPlannerConfig {
  double step_size = 0.15;      // rad, joint-space extension length
  double goal_bias = 0.05;      // probability of steering toward the goal
  int max_samples = 4000;       // sample budget; exhaustion = planning failure
  std::uint64_t rng_seed = 0;
  double goal_tolerance = 0.05;     // rad, joint-space distance to accept
  double density_resolution = 0.2;  // rad, EST grid-bucket edge length
};

// Timestamped joint-space trajectory; point i is at t = i * dt.
struct Trajectory {
  std::vector<Vec> points;
  double dt = 1e-3;
};

struct SamplingPlanResult {
  bool success = false;        // false = planning failure (see failure_reason)
  Trajectory trajectory;       // empty on failure
  std::vector<Vec> waypoints;  // raw tree path (diagnostics)
  int samples_drawn = 0;
  int nodes = 0;
  std::string failure_reason;  // empty on success
};

// Per-joint limit box used for sampling and validity. Empty overrides mean:
// the model's limits.
struct JointBox {
  Vec min;
  Vec max;
};

JointBox effective_box(const ChainModel& model, const Vec& min_override,
                       const Vec& max_override);

// Linear interpolation resampled at dt with each segment traversed at the
// binding per-joint velocity limit (duration rounded up to a whole number
// of steps, so every consecutive step moves at most velocity_limit * dt).
Trajectory time_parameterize(const std::vector<Vec>& waypoints,
                             const Vec& velocity_limits, double dt);

// Single-tree goal-biased RRT inside the limit box.
SamplingPlanResult rrt_plan(const ChainModel& model, const Vec& q_start,
                            const Vec& q_goal, const SamplingPlannerConfig& config,
                            const Vec& min_override = {}, const Vec& max_override = {});

// EST: nodes are selected inversely proportional to the sample density of
// their grid bucket, then expanded by a random (or goal-biased) step.
SamplingPlanResult est_plan(const ChainModel& model, const Vec& q_start,
                            const Vec& q_goal, const SamplingPlannerConfig& config,
                            const Vec& min_override = {}, const Vec& max_override = {});

}  // namespace optadapt

#endif  // OPTADAPT_BASELINE_PLANNERS_HPP_
