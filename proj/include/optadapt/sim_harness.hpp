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
// Execution harness: a velocity-level plant with deliberate mismatch
// (viscous friction, bounded input noise, actuation delay, velocity
// saturation), per-run metrics, and the multi-planner benchmark.

#ifndef OPTADAPT_SIM_HARNESS_HPP_
#define OPTADAPT_SIM_HARNESS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "optadapt/adaptive_estimator.hpp"
#include "optadapt/baseline_planners.hpp"
#include "optadapt/chain_model.hpp"
#include "optadapt/lq_optimizer.hpp"
#include "optadapt/scenario.hpp"
#include "optadapt/types.hpp"

namespace optadapt {

// Velocity-level plant. One step:
//   v_applied = saturate(u_delayed) - friction .* v_prev + w,  |w| <= disturbance
//   x_next    = x + dt * v_applied
// v_prev is the realized velocity of the previous step (zero initially).
struct PlantModel {
  const ChainModel* model = nullptr;  // non-owning; must outlive the plant
  Vec friction;                       // per-joint, 1/s
  double disturbance = 0.0;           // rad/s amplitude, uniform in [-a, a]
  int delay_steps = 0;
  Vec velocity_saturation;            // per-joint, rad/s
};

PlantModel make_plant(const ChainModel& model, const PlantParams& params);

// A plan reduced to what execution needs: a reference state sequence, a
// feedforward input sequence, and (optionally) the refinement policy for
// closed-loop correction.
struct CommandedPlan {
  std::vector<Vec> x_ref;  // N+1
  std::vector<Vec> u_ff;   // N
  const std::vector<StepPolicy>* policy = nullptr;  // non-owning, may be null
  double dt = 1e-3;
};

CommandedPlan make_commanded(const PlanResult& plan, double dt);
// Reference waypoints executed through their finite-difference velocities.
CommandedPlan make_commanded(const Trajectory& trajectory);
CommandedPlan make_commanded(const InitialPath& path);

struct SimOptions {
  SimMode mode = SimMode::kOpenLoop;
  std::uint64_t plant_seed = 0;
  double hold_s = 0.5;      // zero-velocity hold appended before metrics
  Vec feedback_gamma;       // closed-loop correction gains (per joint)
  double integral_clamp = 10.0;
};

struct ExecutionLog {
  std::vector<Vec> x;       // measured states, steps+1
  std::vector<Vec> u_cmd;   // commanded velocity, steps
  std::vector<Vec3> ee;     // end-effector position per state
  double dt = 1e-3;
  double planning_seconds = 0.0;   // filled by the caller
  double execution_seconds = 0.0;  // simulated duration, steps * dt
};

// Steps the plant from x_ref[0] through the plan. Open loop applies the
// feedforward inputs; closed loop adds the refinement policy evaluated on
// the measured deviation (for plans that carry one) or an adaptive-law
// correction on (x_ref - x_measured) for raw trajectories.
ExecutionLog simulate(const PlantModel& plant, const CommandedPlan& plan,
                      const SimOptions& options);

struct Metrics {
  double ee_rmse = 0.0;      // meters, over the final window
  bool success = false;      // rmse <= 0.25 m and no violation beyond grace
  int violation_count = 0;   // steps with any joint beyond limits + grace
  double violation_max = 0.0;  // rad, largest excess over the limits
  double planning_seconds = 0.0;
  double execution_seconds = 0.0;
  double total_seconds = 0.0;
};

// Metrics over the final `window_s` of the log (whole log if shorter).
// Violations measure excess over [limit_min, limit_max] with a 1e-3 rad
// grace band, over the *entire* log.
Metrics compute_metrics(const ExecutionLog& log, const Vec3& goal,
                        const Vec& limit_min, const Vec& limit_max,
                        double window_s = 0.5);

// ---------------------------------------------------------------------------
// Benchmark: the five registered planners over a scenario suite.
// ---------------------------------------------------------------------------

// Registry order is the aggregate-table row order.
const std::vector<std::string>& planner_names();  // optimal-adapt, adapt, ...
bool is_known_planner(const std::string& name);

// Output of one planner on one scenario (before execution).
struct PlannerOutput {
  std::string planner;
  bool planning_success = false;
  double plan_seconds = 0.0;
  std::optional<PlanResult> plan;            // optimal-adapt / optimal-lqr
  std::optional<InitialPath> initial_path;   // adapt; seed path for optimal-*
  std::optional<SamplingPlanResult> sampled; // rrt / est
  std::string failure_reason;
};

// Runs one named planner. q_goal is the scenario's joint-space goal
// (computed once per scenario and shared by every planner).
PlannerOutput plan_scenario(const Scenario& scenario, const std::string& planner,
                            const Vec& q_goal);

// Executes a planner output on the scenario's plant; empty when planning
// failed.
std::optional<ExecutionLog> execute_output(const Scenario& scenario,
                                           const PlannerOutput& output,
                                           SimMode mode, std::uint64_t plant_seed);

struct BenchmarkRow {
  std::string scenario;
  std::string planner;
  Metrics metrics;
  bool planning_success = false;
};

struct BenchmarkAggregate {
  std::string planner;
  double mean_rmse = 0.0;      // over successful runs; NaN if none
  double completion_pct = 0.0;
  double mean_time_s = 0.0;    // planning + execution, over all runs
  double std_time_s = 0.0;
  int runs = 0;
  int successes = 0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
  std::vector<BenchmarkAggregate> aggregates;  // registry order
};

struct BenchmarkOptions {
  int jobs = 0;  // 0 = hardware concurrency
  std::vector<std::string> planners;  // empty = all registered
  bool verbose = false;
};

// Scenario x planner sweep; scenario runs execute in parallel, output rows
// are ordered deterministically (scenario-major, registry planner order).
// A planner failure on a scenario records a failed row and continues.
BenchmarkResult run_benchmark(const Suite& suite, const BenchmarkOptions& options = {});

// CSV artifacts. Aggregate columns: method,rmse_m,completion_pct,time_s,std_s.
void write_benchmark_rows_csv(const std::string& path, const BenchmarkResult& result);
void write_benchmark_aggregate_csv(const std::string& path, const BenchmarkResult& result);
// Human-readable aggregate table for stdout.
std::string format_benchmark_table(const BenchmarkResult& result);

// Execution CSV: header "step,t,x0..,u0..,ee_x,ee_y,ee_z"; final state row
// carries zero input cells. Atomic write.
void write_execution_csv(const std::string& path, const ExecutionLog& log);

}  // namespace optadapt

#endif  // OPTADAPT_SIM_HARNESS_HPP_
