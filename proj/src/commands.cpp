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

#include "optadapt/commands.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "json_util.hpp"
#include "optadapt/errors.hpp"
#include "optadapt/io.hpp"
#include "optadapt/rng.hpp"
#include "optadapt/scenario.hpp"
#include "optadapt/sim_harness.hpp"

namespace optadapt {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Maps exceptions to the exit-code contract shared by every subcommand.
template <typename Body>
int guarded(Body&& body) {
  try {
    return body();
  } catch (const SolverDivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolverDivergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  }
}

fs::path resolve_out_dir(const CommandArgs& args) {
  std::string dir = args.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("OPTADAPT_OUT");
    if (env != nullptr && *env != '\0') dir = env;
  }
  if (dir.empty()) dir = "out";
  fs::create_directories(dir);
  return dir;
}

std::string normalize_mode(const std::string& mode) {
  if (mode == "open") return "open-loop";
  if (mode == "closed") return "closed-loop";
  return mode;
}

std::vector<std::string> split_commas(const std::string& list) {
  std::vector<std::string> parts;
  std::string rest = list;
  while (!rest.empty()) {
    const std::size_t comma = rest.find(',');
    parts.push_back(rest.substr(0, comma));
    rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
  }
  return parts;
}

// Loads the scenario with the CLI overrides spliced into the document before
// parsing, so every loader validation sees the effective values.
Scenario load_effective_scenario(const CommandArgs& args) {
  if (args.scenario_path.empty()) {
    throw ValidationError("a scenario file is required");
  }
  std::string text = read_file(args.scenario_path);
  const std::string base_dir =
      fs::path(args.scenario_path).parent_path().string();
  const bool overrides = !args.model_path.empty() || args.seed.has_value() ||
                         !args.planner.empty() || !args.mode.empty();
  if (overrides) {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      throw ParseError("scenario document is not valid JSON: " +
                       std::string(e.what()));
    }
    if (!doc.is_object()) {
      throw ParseError("scenario document must be a JSON object");
    }
    if (!args.model_path.empty()) {
      doc["model"] = fs::absolute(args.model_path).string();
    }
    if (args.seed) {
      doc["seed"] = *args.seed;
      // Derived sampler seeds must follow the override unless pinned.
      if (doc.contains("rrt")) doc["rrt"].erase("seed");
      if (doc.contains("est")) doc["est"].erase("seed");
    }
    if (!args.planner.empty()) doc["planner"] = args.planner;
    if (!args.mode.empty()) doc["mode"] = normalize_mode(args.mode);
    text = doc.dump();
  }
  return load_scenario(text, base_dir);
}

json sampling_to_json(const SamplingPlannerConfig& config) {
  json j;
  j["step_size"] = config.step_size;
  j["goal_bias"] = config.goal_bias;
  j["max_samples"] = config.max_samples;
  j["goal_tolerance"] = config.goal_tolerance;
  j["density_resolution"] = config.density_resolution;
  j["seed"] = config.rng_seed;
  return j;
}

// The effective configuration, written next to the artifacts so a run can be
// reproduced from its output directory alone. Loadable as a scenario.
void write_scenario_used(const fs::path& out_dir, const Scenario& scenario,
                         const std::string& scenario_path) {
  json doc;
  doc["schema"] = "optadapt.scenario/1";
  doc["name"] = scenario.name;
  fs::path model_file(scenario.model_path);
  if (model_file.is_relative()) {
    model_file = fs::path(scenario_path).parent_path() / model_file;
  }
  doc["model"] = fs::weakly_canonical(model_file).string();
  doc["start"] = jsonutil::vec_to_json(scenario.start);
  doc["goal"] = {scenario.goal[0], scenario.goal[1], scenario.goal[2]};
  if (!scenario.tightened_joints.empty()) {
    json limits = json::array();
    for (int j : scenario.tightened_joints) {
      json entry;
      entry["joint"] = j;
      entry["min"] = scenario.limit_min[j];
      entry["max"] = scenario.limit_max[j];
      limits.push_back(entry);
    }
    doc["tightened_limits"] = limits;
  }
  doc["barriers"] = {{"rho0", scenario.barrier_defaults.rho0},
                     {"eta", scenario.barrier_defaults.eta},
                     {"cap", scenario.barrier_defaults.cap}};
  doc["gamma"] = jsonutil::vec_to_json(scenario.gamma);
  doc["feedback_gamma"] = jsonutil::vec_to_json(scenario.feedback_gamma);
  doc["integral_clamp"] = scenario.integral_clamp;
  doc["horizon_s"] = scenario.horizon_s;
  doc["dt"] = scenario.dt;
  doc["weights"] = {{"state", jsonutil::vec_to_json(scenario.w_state)},
                    {"input", jsonutil::vec_to_json(scenario.w_input)},
                    {"cross", scenario.w_cross},
                    {"terminal", jsonutil::vec_to_json(scenario.w_terminal)}};
  doc["plant"] = {{"friction", jsonutil::vec_to_json(scenario.plant.friction)},
                  {"disturbance", scenario.plant.disturbance},
                  {"delay_steps", scenario.plant.delay_steps}};
  doc["mode"] = mode_name(scenario.mode);
  doc["planner"] = scenario.planner;
  doc["seed"] = scenario.seed;
  doc["rrt"] = sampling_to_json(scenario.rrt);
  doc["est"] = sampling_to_json(scenario.est);
  atomic_write_file(out_dir / "scenario_used.json", doc.dump(2) + "\n");
}

void write_sampling_summary(const fs::path& path,
                            const PlannerOutput& output) {
  const SamplingPlanResult& sampled = *output.sampled;
  json j;
  j["schema"] = "optadapt.sampling_summary/1";
  j["success"] = sampled.success;
  j["samples_drawn"] = sampled.samples_drawn;
  j["nodes"] = sampled.nodes;
  j["waypoints"] = sampled.waypoints.size();
  j["trajectory_points"] = sampled.trajectory.points.size();
  j["planning_seconds"] = output.plan_seconds;
  if (!output.failure_reason.empty()) {
    j["failure_reason"] = output.failure_reason;
  }
  atomic_write_file(path, j.dump(2) + "\n");
}

// Writes every plan-stage artifact a planner output carries; returns the
// number of files written.
int write_plan_artifacts(const fs::path& out_dir, const Scenario& scenario,
                         const PlannerOutput& output) {
  const std::string prefix = output.planner;
  int written = 0;
  if (output.initial_path) {
    write_initial_path_csv((out_dir / (prefix + "_initial_path.csv")).string(),
                           *output.initial_path);
    ++written;
  }
  if (output.plan) {
    write_trajectory_csv((out_dir / (prefix + "_trajectory.csv")).string(),
                         output.plan->x_predicted, output.plan->u_final,
                         scenario.dt);
    write_plan_summary_json(
        (out_dir / (prefix + "_plan_summary.json")).string(), *output.plan);
    written += 2;
  } else if (output.initial_path) {
    // The estimator path is executed through its law outputs.
    write_trajectory_csv((out_dir / (prefix + "_trajectory.csv")).string(),
                         output.initial_path->x_des, output.initial_path->tau,
                         output.initial_path->dt);
    ++written;
  }
  if (output.sampled) {
    write_sampling_summary(out_dir / (prefix + "_sampling_summary.json"),
                           output);
    ++written;
    if (output.sampled->success) {
      const CommandedPlan cmd = make_commanded(output.sampled->trajectory);
      write_trajectory_csv((out_dir / (prefix + "_trajectory.csv")).string(),
                           cmd.x_ref, cmd.u_ff, cmd.dt);
      ++written;
    }
  }
  return written;
}

}  // namespace

int cmd_plan(const CommandArgs& args) {
  return guarded([&]() {
    const Scenario scenario = load_effective_scenario(args);
    const fs::path out_dir = resolve_out_dir(args);
    const Vec q_goal = scenario_goal_configuration(scenario);
    const PlannerOutput output =
        plan_scenario(scenario, scenario.planner, q_goal);
    write_scenario_used(out_dir, scenario, args.scenario_path);
    write_plan_artifacts(out_dir, scenario, output);

    if (!output.planning_success) {
      std::fprintf(stderr, "error: %s planning failed: %s\n",
                   output.planner.c_str(), output.failure_reason.c_str());
      return kExitSolverDivergence;
    }
    if (output.plan) {
      std::printf("%s: %s after %d iteration(s), final tracking cost %g\n",
                  output.planner.c_str(),
                  output.plan->converged ? "converged" : "iteration cap hit",
                  output.plan->iterations,
                  output.plan->cost_history.empty()
                      ? std::numeric_limits<double>::quiet_NaN()
                      : output.plan->cost_history.back());
    } else if (output.sampled) {
      std::printf("%s: found a path with %d nodes after %d samples\n",
                  output.planner.c_str(), output.sampled->nodes,
                  output.sampled->samples_drawn);
    } else {
      std::printf("%s: estimated a %zu-step path\n", output.planner.c_str(),
                  output.initial_path->u_des.size());
    }
    std::printf("artifacts written to %s\n", out_dir.string().c_str());
    return kExitOk;
  });
}

int cmd_simulate(const CommandArgs& args) {
  return guarded([&]() {
    const Scenario scenario = load_effective_scenario(args);
    const fs::path out_dir = resolve_out_dir(args);
    const Vec q_goal = scenario_goal_configuration(scenario);
    const PlannerOutput output =
        plan_scenario(scenario, scenario.planner, q_goal);
    write_scenario_used(out_dir, scenario, args.scenario_path);
    write_plan_artifacts(out_dir, scenario, output);
    if (!output.planning_success) {
      std::fprintf(stderr, "error: %s planning failed: %s\n",
                   output.planner.c_str(), output.failure_reason.c_str());
      return kExitSolverDivergence;
    }

    const std::optional<ExecutionLog> log =
        execute_output(scenario, output, scenario.mode, scenario.seed);
    const Metrics metrics = compute_metrics(
        *log, scenario.goal, scenario.limit_min, scenario.limit_max);
    write_execution_csv(
        (out_dir / (output.planner + "_execution.csv")).string(), *log);

    json j;
    j["schema"] = "optadapt.metrics/1";
    j["scenario"] = scenario.name;
    j["planner"] = output.planner;
    j["mode"] = mode_name(scenario.mode);
    j["ee_rmse_m"] = metrics.ee_rmse;
    j["success"] = metrics.success;
    j["violation_count"] = metrics.violation_count;
    j["violation_max_rad"] = metrics.violation_max;
    j["planning_seconds"] = metrics.planning_seconds;
    j["execution_seconds"] = metrics.execution_seconds;
    j["total_seconds"] = metrics.total_seconds;
    atomic_write_file(out_dir / (output.planner + "_metrics.json"),
                      j.dump(2) + "\n");

    std::printf("%s (%s): rmse %.4f m, %s, %d violation step(s)\n",
                output.planner.c_str(), mode_name(scenario.mode).c_str(),
                metrics.ee_rmse, metrics.success ? "success" : "failure",
                metrics.violation_count);
    std::printf("artifacts written to %s\n", out_dir.string().c_str());
    return kExitOk;
  });
}

int cmd_benchmark(const CommandArgs& args) {
  return guarded([&]() {
    if (args.scenario_path.empty()) {
      throw ValidationError("a suite file is required");
    }
    Suite suite = load_suite_file(args.scenario_path);
    if (args.seed) {
      // Re-seed the whole run: per-scenario seeds and the sampler streams
      // derived from them.
      suite.master_seed = *args.seed;
      for (std::size_t idx = 0; idx < suite.scenarios.size(); ++idx) {
        Scenario& scenario = suite.scenarios[idx];
        scenario.seed = seed_for_index(suite.master_seed, idx);
        scenario.rrt.rng_seed = seed_for(scenario.seed, "rrt");
        scenario.est.rng_seed = seed_for(scenario.seed, "est");
      }
    }
    if (!args.mode.empty()) {
      const SimMode mode = parse_mode(normalize_mode(args.mode));
      for (Scenario& scenario : suite.scenarios) scenario.mode = mode;
    }

    BenchmarkOptions options;
    options.jobs = args.jobs;
    options.verbose = args.verbose;
    if (!args.planner.empty()) {
      options.planners = split_commas(args.planner);
    }

    const fs::path out_dir = resolve_out_dir(args);
    const BenchmarkResult result = run_benchmark(suite, options);
    write_benchmark_rows_csv((out_dir / "benchmark_rows.csv").string(),
                             result);
    write_benchmark_aggregate_csv(
        (out_dir / "benchmark_aggregate.csv").string(), result);

    std::printf("suite %s: %zu scenario(s)\n%s", suite.name.c_str(),
                suite.scenarios.size(),
                format_benchmark_table(result).c_str());
    std::printf("artifacts written to %s\n", out_dir.string().c_str());
    return kExitOk;
  });
}

namespace {

// One planner's execution log read back from `<planner>_execution.csv`.
struct ExecutionSeries {
  std::string planner;
  std::vector<double> t;
  std::vector<Vec> x;                     // joint angles per step
  std::vector<std::array<double, 3>> ee;  // end-effector position per step
};

// Parses an execution CSV by header name, so column order in the artifact is
// not load-bearing.
ExecutionSeries read_execution_csv(const fs::path& path,
                                   const std::string& planner) {
  const std::string text = read_file(path);
  std::vector<std::string> lines;
  std::size_t begin = 0;
  while (begin < text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string::npos) end = text.size();
    if (end > begin) lines.push_back(text.substr(begin, end - begin));
    begin = end + 1;
  }
  if (lines.empty()) {
    throw ParseError(path.string() + ": empty file");
  }

  const std::vector<std::string> header = split_csv_row(lines.front());
  int t_col = -1;
  int ee_col[3] = {-1, -1, -1};
  std::vector<int> x_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (name == "t") {
      t_col = static_cast<int>(c);
    } else if (name == "ee_x") {
      ee_col[0] = static_cast<int>(c);
    } else if (name == "ee_y") {
      ee_col[1] = static_cast<int>(c);
    } else if (name == "ee_z") {
      ee_col[2] = static_cast<int>(c);
    } else if (name.size() > 1 && name[0] == 'x' &&
               name.find_first_not_of("0123456789", 1) == std::string::npos) {
      x_cols.push_back(static_cast<int>(c));
    }
  }
  if (t_col < 0 || x_cols.empty() || ee_col[0] < 0 || ee_col[1] < 0 ||
      ee_col[2] < 0) {
    throw ParseError(path.string() +
                     ": expected t, x<k>, and ee_x/ee_y/ee_z columns");
  }

  ExecutionSeries series;
  series.planner = planner;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::vector<std::string> cells = split_csv_row(lines[r]);
    if (cells.size() != header.size()) {
      throw ParseError(path.string() + ": row " + std::to_string(r) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    }
    const auto cell = [&](int col) {
      try {
        return std::stod(cells[static_cast<std::size_t>(col)]);
      } catch (const std::exception&) {
        throw ParseError(path.string() + ": row " + std::to_string(r) +
                         ": not a number: " +
                         cells[static_cast<std::size_t>(col)]);
      }
    };
    series.t.push_back(cell(t_col));
    Vec x(static_cast<Eigen::Index>(x_cols.size()));
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
      x[static_cast<Eigen::Index>(j)] = cell(x_cols[j]);
    }
    series.x.push_back(std::move(x));
    series.ee.push_back({cell(ee_col[0]), cell(ee_col[1]), cell(ee_col[2])});
  }
  return series;
}

}  // namespace

int cmd_export_figures(const CommandArgs& args) {
  return guarded([&]() {
    const fs::path out_dir = resolve_out_dir(args);

    // The run's effective configuration: an explicit scenario argument wins,
    // otherwise the scenario_used.json the run wrote next to its artifacts.
    CommandArgs effective = args;
    if (effective.scenario_path.empty()) {
      const fs::path used = out_dir / "scenario_used.json";
      if (!fs::exists(used)) {
        throw ValidationError(out_dir.string() +
                              " holds no scenario_used.json; run plan or "
                              "simulate first, or pass a scenario file");
      }
      effective.scenario_path = used.string();
    }
    const Scenario scenario = load_effective_scenario(effective);
    const Vec q_goal = scenario_goal_configuration(scenario);

    // Collect whichever planners left an execution log in the directory.
    const std::vector<std::string> wanted =
        args.planner.empty() ? planner_names() : split_commas(args.planner);
    std::vector<ExecutionSeries> runs;
    for (const std::string& planner : wanted) {
      const fs::path file = out_dir / (planner + "_execution.csv");
      if (fs::exists(file)) runs.push_back(read_execution_csv(file, planner));
    }
    if (runs.empty()) {
      throw ValidationError(out_dir.string() +
                            " holds no *_execution.csv artifacts; run "
                            "simulate into this directory first");
    }

    // The longest run provides the time grid for constant reference series.
    const ExecutionSeries* longest = &runs.front();
    for (const ExecutionSeries& run : runs) {
      if (run.t.size() > longest->t.size()) longest = &run;
    }

    // End-effector coordinates, one file per axis: planner series + goal.
    for (int axis = 0; axis < 3; ++axis) {
      const char axis_name = static_cast<char>('x' + axis);
      std::string body = csv_row({"t", "series", "value"});
      for (const ExecutionSeries& run : runs) {
        for (std::size_t i = 0; i < run.t.size(); ++i) {
          body += csv_row({format_double(run.t[i]), run.planner,
                           format_double(run.ee[i][axis])});
        }
      }
      for (std::size_t i = 0; i < longest->t.size(); ++i) {
        body += csv_row({format_double(longest->t[i]), "goal",
                         format_double(scenario.goal[axis])});
      }
      atomic_write_file(
          out_dir / (std::string("fig_ee_") + axis_name + ".csv"), body);
    }

    // Per-joint error against the goal configuration, one series per
    // (planner, joint) pair, each series contiguous.
    {
      std::string body = csv_row({"t", "series", "value"});
      for (const ExecutionSeries& run : runs) {
        for (Eigen::Index j = 0; j < q_goal.size(); ++j) {
          const std::string name = run.planner + ".j" + std::to_string(j);
          for (std::size_t i = 0; i < run.t.size(); ++i) {
            body += csv_row({format_double(run.t[i]), name,
                             format_double(q_goal[j] - run.x[i][j])});
          }
        }
      }
      atomic_write_file(out_dir / "fig_joint_errors.csv", body);
    }

    // Highlighted joint (first tightened one, else joint 0) with its limit
    // band as constant series.
    const int joint = scenario.tightened_joints.empty()
                          ? 0
                          : scenario.tightened_joints.front();
    {
      std::string body = csv_row({"t", "series", "value"});
      for (const ExecutionSeries& run : runs) {
        for (std::size_t i = 0; i < run.t.size(); ++i) {
          body += csv_row({format_double(run.t[i]), run.planner,
                           format_double(run.x[i][joint])});
        }
      }
      for (std::size_t i = 0; i < longest->t.size(); ++i) {
        body += csv_row({format_double(longest->t[i]), "limit_min",
                         format_double(scenario.limit_min[joint])});
      }
      for (std::size_t i = 0; i < longest->t.size(); ++i) {
        body += csv_row({format_double(longest->t[i]), "limit_max",
                         format_double(scenario.limit_max[joint])});
      }
      atomic_write_file(out_dir / "fig_joint_limited.csv", body);
    }

    // End-effector error components relative to the Cartesian goal.
    {
      std::string body = csv_row({"t", "series", "value"});
      for (const ExecutionSeries& run : runs) {
        for (int axis = 0; axis < 3; ++axis) {
          const std::string name =
              run.planner + "." + static_cast<char>('x' + axis);
          for (std::size_t i = 0; i < run.t.size(); ++i) {
            body += csv_row({format_double(run.t[i]), name,
                             format_double(run.ee[i][axis] -
                                           scenario.goal[axis])});
          }
        }
      }
      atomic_write_file(out_dir / "fig_ee_error.csv", body);
    }

    std::string found;
    for (const ExecutionSeries& run : runs) {
      if (!found.empty()) found += ", ";
      found += run.planner;
    }
    std::printf(
        "figure data written to %s (fig_ee_x/y/z.csv, fig_joint_errors.csv, "
        "fig_joint_limited.csv, fig_ee_error.csv; planners: %s; joint %d "
        "highlighted)\n",
        out_dir.string().c_str(), found.c_str(), joint);
    return kExitOk;
  });
}

}  // namespace optadapt
