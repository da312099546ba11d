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

#include "optadapt/sim_harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "optadapt/errors.hpp"
#include "optadapt/io.hpp"
#include "optadapt/rng.hpp"

namespace optadapt {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// "adapt-only" is accepted anywhere a planner is named, as a synonym for the
// registered "adapt".
std::string canonical_planner(const std::string& name) {
  return name == "adapt-only" ? "adapt" : name;
}

Metrics failed_metrics(double plan_seconds) {
  Metrics metrics;
  metrics.success = false;
  metrics.ee_rmse = std::numeric_limits<double>::quiet_NaN();
  metrics.planning_seconds = plan_seconds;
  metrics.execution_seconds = 0.0;
  metrics.total_seconds = plan_seconds;
  return metrics;
}

}  // namespace

PlantModel make_plant(const ChainModel& model, const PlantParams& params) {
  if (model.input_dim() != model.n) {
    throw ValidationError(
        "the plant drives one velocity per joint; input dimension must match "
        "the joint count");
  }
  if (params.friction.size() != model.n) {
    throw DimensionError("plant friction size does not match the joint count");
  }
  if (params.friction.minCoeff() < 0.0) {
    throw ValidationError("plant friction must be non-negative");
  }
  if (params.disturbance < 0.0) {
    throw ValidationError("plant disturbance must be non-negative");
  }
  if (params.delay_steps < 0) {
    throw ValidationError("plant delay_steps must be non-negative");
  }
  PlantModel plant;
  plant.model = &model;
  plant.friction = params.friction;
  plant.disturbance = params.disturbance;
  plant.delay_steps = params.delay_steps;
  plant.velocity_saturation = model.velocity_limits();
  return plant;
}

CommandedPlan make_commanded(const PlanResult& plan, double dt) {
  if (plan.x_predicted.size() != plan.u_final.size() + 1) {
    throw DimensionError("plan needs one more predicted state than inputs");
  }
  CommandedPlan cmd;
  cmd.x_ref = plan.x_predicted;
  cmd.u_ff = plan.u_final;
  cmd.policy =
      plan.policy.size() == plan.u_final.size() ? &plan.policy : nullptr;
  cmd.dt = dt;
  return cmd;
}

CommandedPlan make_commanded(const Trajectory& trajectory) {
  if (trajectory.points.empty()) {
    throw ValidationError("trajectory has no points");
  }
  if (trajectory.dt <= 0.0) throw ValidationError("trajectory dt must be positive");
  CommandedPlan cmd;
  cmd.x_ref = trajectory.points;
  cmd.u_ff.resize(trajectory.points.size() - 1);
  for (std::size_t i = 0; i + 1 < trajectory.points.size(); ++i) {
    cmd.u_ff[i] =
        (trajectory.points[i + 1] - trajectory.points[i]) / trajectory.dt;
  }
  cmd.dt = trajectory.dt;
  return cmd;
}

CommandedPlan make_commanded(const InitialPath& path) {
  if (path.x_des.size() != path.tau.size() + 1) {
    throw DimensionError("path needs one more state than law outputs");
  }
  CommandedPlan cmd;
  cmd.x_ref = path.x_des;
  // The law outputs are what produced x_des on the model, so they are the
  // feedforward; the G-projected inputs only matter to plan refinement.
  cmd.u_ff = path.tau;
  cmd.dt = path.dt;
  return cmd;
}

ExecutionLog simulate(const PlantModel& plant, const CommandedPlan& plan,
                      const SimOptions& options) {
  if (plant.model == nullptr) throw ValidationError("plant has no model");
  const ChainModel& model = *plant.model;
  const int n = model.n;
  if (plan.x_ref.empty() || plan.x_ref.size() != plan.u_ff.size() + 1) {
    throw DimensionError("commanded plan needs one more state than inputs");
  }
  if (plan.x_ref[0].size() != n) {
    throw DimensionError("commanded plan state size does not match the model");
  }
  if (plan.dt <= 0.0) throw ValidationError("plan dt must be positive");
  if (options.hold_s < 0.0) throw ValidationError("hold_s must be non-negative");

  const int exec_steps = static_cast<int>(plan.u_ff.size());
  const int hold_steps = static_cast<int>(std::lround(options.hold_s / plan.dt));
  const int total_steps = exec_steps + hold_steps;
  const bool closed = options.mode == SimMode::kClosedLoop;

  Vec feedback_gamma = options.feedback_gamma;
  if (closed) {
    if (feedback_gamma.size() == 0) feedback_gamma = Vec::Zero(n);
    if (feedback_gamma.size() != n) {
      throw DimensionError("feedback_gamma size does not match the model");
    }
  }
  AdaptiveState fb_state;
  fb_state.gamma = feedback_gamma.size() == n ? feedback_gamma : Vec::Zero(n);
  fb_state.dt = plan.dt;
  fb_state.error_prev = Vec::Zero(n);
  fb_state.error_integral = Vec::Zero(n);
  fb_state.integral_clamp = options.integral_clamp;

  Rng rng(seed_for(options.plant_seed, "plant"));

  ExecutionLog log;
  log.dt = plan.dt;
  log.x.reserve(total_steps + 1);
  log.u_cmd.reserve(total_steps);
  log.ee.reserve(total_steps + 1);

  Vec x = plan.x_ref[0];
  log.x.push_back(x);
  log.ee.push_back(forward_kinematics(model, x).position);
  Vec v_prev = Vec::Zero(n);
  std::vector<Vec> issued;  // command history, for the actuation delay
  issued.reserve(total_steps);

  for (int i = 0; i < total_steps; ++i) {
    const bool executing = i < exec_steps;
    Vec u_cmd = Vec::Zero(n);
    if (executing) {
      u_cmd = plan.u_ff[i];
      if (closed) {
        const Vec error = plan.x_ref[i] - x;  // reference minus measured
        const auto shaped = lambda_fn(fb_state, error);
        fb_state = shaped.next;
        const Vec alpha = feedback_gamma.cwiseProduct(shaped.value);
        if (plan.policy != nullptr) {
          const StepPolicy& pol = (*plan.policy)[i];
          const Vec dx = -error;  // measured deviation from the prediction
          u_cmd += pol.Gamma * dx + pol.Theta - pol.SdagFN * alpha +
                   pol.Nbasis * (pol.kff - pol.K * dx);
        } else {
          u_cmd += alpha;
        }
      }
    }
    // The hold phase commands exactly zero velocity in both modes.

    issued.push_back(u_cmd);
    const Vec u_delayed = i >= plant.delay_steps
                              ? issued[i - plant.delay_steps]
                              : Vec::Zero(n);
    const Vec u_sat = u_delayed.cwiseMax(-plant.velocity_saturation)
                          .cwiseMin(plant.velocity_saturation);
    Vec w(n);
    for (int j = 0; j < n; ++j) w[j] = rng.symmetric(plant.disturbance);
    const Vec v_applied = u_sat - plant.friction.cwiseProduct(v_prev) + w;
    x += plan.dt * v_applied;
    v_prev = v_applied;

    log.u_cmd.push_back(std::move(u_cmd));
    log.x.push_back(x);
    log.ee.push_back(forward_kinematics(model, x).position);
  }

  log.execution_seconds = total_steps * plan.dt;
  return log;
}

Metrics compute_metrics(const ExecutionLog& log, const Vec3& goal,
                        const Vec& limit_min, const Vec& limit_max,
                        double window_s) {
  if (log.x.empty() || log.ee.size() != log.x.size()) {
    throw DimensionError("execution log is empty or inconsistent");
  }
  if (limit_min.size() != log.x[0].size() ||
      limit_max.size() != log.x[0].size()) {
    throw DimensionError("limit size does not match the log's state size");
  }
  constexpr double kGrace = 1e-3;        // rad
  constexpr double kRmseThreshold = 0.25;  // m

  Metrics metrics;
  const int states = static_cast<int>(log.x.size());
  const int window_states =
      std::min(states, static_cast<int>(std::lround(window_s / log.dt)) + 1);
  const int first = states - window_states;

  double sq_sum = 0.0;
  for (int i = first; i < states; ++i) {
    sq_sum += (log.ee[i] - goal).squaredNorm();
  }
  metrics.ee_rmse = std::sqrt(sq_sum / window_states);

  for (int i = 0; i < states; ++i) {
    double excess = 0.0;
    for (Eigen::Index j = 0; j < limit_min.size(); ++j) {
      excess = std::max(excess, limit_min[j] - log.x[i][j]);
      excess = std::max(excess, log.x[i][j] - limit_max[j]);
    }
    if (excess > kGrace) ++metrics.violation_count;
    metrics.violation_max = std::max(metrics.violation_max, excess);
  }

  metrics.success =
      metrics.ee_rmse <= kRmseThreshold && metrics.violation_count == 0;
  metrics.planning_seconds = log.planning_seconds;
  metrics.execution_seconds = log.execution_seconds;
  metrics.total_seconds = log.planning_seconds + log.execution_seconds;
  return metrics;
}

const std::vector<std::string>& planner_names() {
  static const std::vector<std::string> names{"optimal-adapt", "adapt",
                                              "optimal-lqr", "rrt", "est"};
  return names;
}

bool is_known_planner(const std::string& name) {
  const std::string canon = canonical_planner(name);
  for (const std::string& known : planner_names()) {
    if (canon == known) return true;
  }
  return false;
}

PlannerOutput plan_scenario(const Scenario& scenario,
                            const std::string& planner, const Vec& q_goal) {
  if (!is_known_planner(planner)) {
    throw ValidationError("unknown planner \"" + planner + "\"");
  }
  PlannerOutput out;
  out.planner = canonical_planner(planner);
  const auto t0 = std::chrono::steady_clock::now();
  if (out.planner == "optimal-adapt" || out.planner == "optimal-lqr") {
    // The full pipeline resolves redundancy inside the scenario's tightened
    // bands; the refinement-only baseline chases the native configuration
    // and relies on the barriers alone.
    const Vec q_track = out.planner == "optimal-adapt"
                            ? scenario_planning_goal_configuration(scenario)
                            : q_goal;
    const ProblemSpec spec =
        make_problem_spec(scenario, scenario.start, q_track);
    InitialPath seed;
    if (out.planner == "optimal-adapt") {
      EstimateOptions eopts;
      eopts.integral_clamp = scenario.integral_clamp;
      seed = estimate_path(scenario.model, scenario.start, q_track,
                           spec.horizon, scenario.gamma, scenario.dt, eopts);
    } else {
      // Clamp the naive seed clear of the barrier influence layer so the
      // refinement starts feasible and stays feasible under the merit test.
      Vec seed_min = scenario.limit_min;
      Vec seed_max = scenario.limit_max;
      for (Eigen::Index j = 0; j < seed_min.size(); ++j) {
        const double margin = std::min(scenario.barrier_defaults.rho0,
                                       (seed_max[j] - seed_min[j]) / 4.0);
        seed_min[j] += margin;
        seed_max[j] -= margin;
      }
      seed = lqr_initial_path(scenario.model, spec, seed_min, seed_max);
    }
    out.plan = iterate_plan(scenario.model, spec, seed, scenario.barriers, {});
    out.initial_path = std::move(seed);  // kept for artifact export
    out.planning_success = true;
  } else if (out.planner == "adapt") {
    EstimateOptions eopts;
    eopts.integral_clamp = scenario.integral_clamp;
    out.initial_path =
        estimate_path(scenario.model, scenario.start, q_goal,
                      scenario.steps(), scenario.gamma, scenario.dt, eopts);
    out.planning_success = true;
  } else {
    const SamplingPlanResult result =
        out.planner == "rrt"
            ? rrt_plan(scenario.model, scenario.start, q_goal, scenario.rrt,
                       scenario.limit_min, scenario.limit_max)
            : est_plan(scenario.model, scenario.start, q_goal, scenario.est,
                       scenario.limit_min, scenario.limit_max);
    out.planning_success = result.success;
    if (!result.success) out.failure_reason = result.failure_reason;
    out.sampled = result;
  }
  out.plan_seconds = seconds_since(t0);
  return out;
}

std::optional<ExecutionLog> execute_output(const Scenario& scenario,
                                           const PlannerOutput& output,
                                           SimMode mode,
                                           std::uint64_t plant_seed) {
  if (!output.planning_success) return std::nullopt;

  CommandedPlan cmd;
  if (output.plan) {
    cmd = make_commanded(*output.plan, scenario.dt);
  } else if (output.initial_path) {
    cmd = make_commanded(*output.initial_path);
  } else if (output.sampled && output.sampled->success) {
    cmd = make_commanded(output.sampled->trajectory);
  } else {
    return std::nullopt;
  }

  const PlantModel plant = make_plant(scenario.model, scenario.plant);
  SimOptions sim_options;
  sim_options.mode = mode;
  sim_options.plant_seed = plant_seed;
  sim_options.feedback_gamma = scenario.feedback_gamma;
  sim_options.integral_clamp = scenario.integral_clamp;

  ExecutionLog log = simulate(plant, cmd, sim_options);
  log.planning_seconds = output.plan_seconds;
  return log;
}

BenchmarkResult run_benchmark(const Suite& suite,
                              const BenchmarkOptions& options) {
  if (suite.scenarios.empty()) {
    throw ValidationError("benchmark suite has no scenarios");
  }

  // Requested planners, canonicalized and held in registry order.
  std::vector<std::string> planners;
  if (options.planners.empty()) {
    planners = planner_names();
  } else {
    for (const std::string& p : options.planners) {
      if (!is_known_planner(p)) {
        throw ValidationError("unknown planner \"" + p + "\"");
      }
    }
    for (const std::string& registered : planner_names()) {
      for (const std::string& p : options.planners) {
        if (canonical_planner(p) == registered) {
          planners.push_back(registered);
          break;
        }
      }
    }
  }

  const int n_scenarios = static_cast<int>(suite.scenarios.size());
  const int n_planners = static_cast<int>(planners.size());
  BenchmarkResult result;
  result.rows.resize(static_cast<std::size_t>(n_scenarios) * n_planners);

  std::mutex print_mutex;
  std::atomic<int> next_scenario{0};
  const auto worker = [&]() {
    for (int idx = next_scenario.fetch_add(1); idx < n_scenarios;
         idx = next_scenario.fetch_add(1)) {
      const Scenario& scenario = suite.scenarios[idx];
      std::string scenario_failure;
      Vec q_goal;
      try {
        q_goal = scenario_goal_configuration(scenario);
      } catch (const std::exception& e) {
        scenario_failure = e.what();
      }
      for (int p = 0; p < n_planners; ++p) {
        BenchmarkRow& row = result.rows[static_cast<std::size_t>(idx) *
                                            n_planners + p];
        row.scenario = scenario.name;
        row.planner = planners[p];
        if (!scenario_failure.empty()) {
          row.planning_success = false;
          row.metrics = failed_metrics(0.0);
          continue;
        }
        try {
          const PlannerOutput output =
              plan_scenario(scenario, planners[p], q_goal);
          row.planning_success = output.planning_success;
          const std::optional<ExecutionLog> log =
              execute_output(scenario, output, scenario.mode, scenario.seed);
          row.metrics = log ? compute_metrics(*log, scenario.goal,
                                              scenario.limit_min,
                                              scenario.limit_max)
                            : failed_metrics(output.plan_seconds);
        } catch (const std::exception& e) {
          row.planning_success = false;
          row.metrics = failed_metrics(0.0);
          if (options.verbose) {
            const std::lock_guard<std::mutex> lock(print_mutex);
            std::fprintf(stderr, "[benchmark] %s/%s failed: %s\n",
                         scenario.name.c_str(), planners[p].c_str(), e.what());
          }
        }
      }
      if (options.verbose) {
        const std::lock_guard<std::mutex> lock(print_mutex);
        std::fprintf(stderr, "[benchmark] finished scenario %s (%d/%d)\n",
                     scenario.name.c_str(), idx + 1, n_scenarios);
      }
    }
  };

  int jobs = options.jobs > 0
                 ? options.jobs
                 : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min(jobs, n_scenarios));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  for (int p = 0; p < n_planners; ++p) {
    BenchmarkAggregate agg;
    agg.planner = planners[p];
    double rmse_sum = 0.0;
    double time_sum = 0.0;
    double time_sq_sum = 0.0;
    for (int idx = 0; idx < n_scenarios; ++idx) {
      const BenchmarkRow& row =
          result.rows[static_cast<std::size_t>(idx) * n_planners + p];
      ++agg.runs;
      const double t = row.metrics.total_seconds;
      time_sum += t;
      time_sq_sum += t * t;
      if (row.metrics.success) {
        ++agg.successes;
        rmse_sum += row.metrics.ee_rmse;
      }
    }
    agg.completion_pct = 100.0 * agg.successes / agg.runs;
    agg.mean_rmse = agg.successes > 0
                        ? rmse_sum / agg.successes
                        : std::numeric_limits<double>::quiet_NaN();
    agg.mean_time_s = time_sum / agg.runs;
    const double var =
        std::max(0.0, time_sq_sum / agg.runs - agg.mean_time_s * agg.mean_time_s);
    agg.std_time_s = std::sqrt(var);
    result.aggregates.push_back(std::move(agg));
  }
  return result;
}

void write_benchmark_rows_csv(const std::string& path,
                              const BenchmarkResult& result) {
  std::string body = csv_row({"scenario", "method", "planning_success",
                              "success", "rmse_m", "violation_count",
                              "violation_max", "planning_s", "execution_s",
                              "total_s"});
  for (const BenchmarkRow& row : result.rows) {
    body += csv_row({row.scenario, row.planner,
                     row.planning_success ? "1" : "0",
                     row.metrics.success ? "1" : "0",
                     format_double(row.metrics.ee_rmse),
                     std::to_string(row.metrics.violation_count),
                     format_double(row.metrics.violation_max),
                     format_double(row.metrics.planning_seconds),
                     format_double(row.metrics.execution_seconds),
                     format_double(row.metrics.total_seconds)});
  }
  atomic_write_file(path, body);
}

void write_benchmark_aggregate_csv(const std::string& path,
                                   const BenchmarkResult& result) {
  std::string body =
      csv_row({"method", "rmse_m", "completion_pct", "time_s", "std_s"});
  for (const BenchmarkAggregate& agg : result.aggregates) {
    body += csv_row({agg.planner, format_double(agg.mean_rmse),
                     format_double(agg.completion_pct),
                     format_double(agg.mean_time_s),
                     format_double(agg.std_time_s)});
  }
  atomic_write_file(path, body);
}

std::string format_benchmark_table(const BenchmarkResult& result) {
  char line[160];
  std::snprintf(line, sizeof(line), "%-14s %10s %16s %10s %10s\n", "method",
                "rmse_m", "completion_pct", "time_s", "std_s");
  std::string table = line;
  for (const BenchmarkAggregate& agg : result.aggregates) {
    std::snprintf(line, sizeof(line), "%-14s %10.4f %16.1f %10.3f %10.3f\n",
                  agg.planner.c_str(), agg.mean_rmse, agg.completion_pct,
                  agg.mean_time_s, agg.std_time_s);
    table += line;
  }
  return table;
}

void write_execution_csv(const std::string& path, const ExecutionLog& log) {
  if (log.x.empty() || log.x.size() != log.u_cmd.size() + 1 ||
      log.ee.size() != log.x.size()) {
    throw DimensionError("execution log is empty or inconsistent");
  }
  const auto n = log.x[0].size();
  const auto m = log.u_cmd.empty() ? 0 : log.u_cmd[0].size();
  std::vector<std::string> cells;
  cells.reserve(5 + n + m);
  cells.push_back("step");
  cells.push_back("t");
  for (int j = 0; j < n; ++j) cells.push_back("x" + std::to_string(j));
  for (int j = 0; j < m; ++j) cells.push_back("u" + std::to_string(j));
  cells.push_back("ee_x");
  cells.push_back("ee_y");
  cells.push_back("ee_z");
  std::string body = csv_row(cells);

  for (std::size_t i = 0; i < log.x.size(); ++i) {
    cells.clear();
    cells.push_back(std::to_string(i));
    cells.push_back(format_double(static_cast<double>(i) * log.dt));
    for (int j = 0; j < n; ++j) cells.push_back(format_double(log.x[i][j]));
    for (int j = 0; j < m; ++j) {
      cells.push_back(format_double(i < log.u_cmd.size() ? log.u_cmd[i][j]
                                                         : 0.0));
    }
    for (int k = 0; k < 3; ++k) cells.push_back(format_double(log.ee[i][k]));
    body += csv_row(cells);
  }
  atomic_write_file(path, body);
}

}  // namespace optadapt
