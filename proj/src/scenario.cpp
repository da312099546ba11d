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

#include "optadapt/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "json_util.hpp"
#include "optadapt/errors.hpp"
#include "optadapt/io.hpp"
#include "optadapt/rng.hpp"
#include "optadapt/sim_harness.hpp"

namespace optadapt {
namespace {

using json = nlohmann::json;
using jsonutil::parse_broadcast;
using jsonutil::parse_vec;
using jsonutil::parse_vec3;
using jsonutil::reject_unknown_fields;

constexpr const char* kScenarioSchema = "optadapt.scenario/1";
constexpr const char* kSuiteSchema = "optadapt.suite/1";

json parse_document(const std::string& text, const std::string& kind) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(kind + " document is not valid JSON: " +
                     std::string(e.what()));
  }
  if (!doc.is_object()) {
    throw ParseError(kind + " document must be a JSON object");
  }
  return doc;
}

std::uint64_t parse_seed(const json& j, const std::string& where) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  throw ParseError(where + " must be a non-negative integer");
}

SamplingPlannerConfig parse_sampling(const json& doc, const std::string& where,
                                     std::uint64_t default_seed) {
  SamplingPlannerConfig config;
  config.rng_seed = default_seed;
  if (doc.is_null()) return config;
  if (!doc.is_object()) throw ParseError(where + " must be an object");
  reject_unknown_fields(doc,
                        {"step_size", "goal_bias", "max_samples",
                         "goal_tolerance", "density_resolution", "seed"},
                        where);
  config.step_size = doc.value("step_size", config.step_size);
  config.goal_bias = doc.value("goal_bias", config.goal_bias);
  config.max_samples = doc.value("max_samples", config.max_samples);
  config.goal_tolerance = doc.value("goal_tolerance", config.goal_tolerance);
  config.density_resolution =
      doc.value("density_resolution", config.density_resolution);
  if (doc.contains("seed")) {
    config.rng_seed = parse_seed(doc["seed"], where + ".seed");
  }
  return config;
}

Scenario load_scenario_doc(const json& doc, const std::string& base_dir) {
  reject_unknown_fields(
      doc,
      {"schema", "name", "model", "start", "goal", "tightened_limits",
       "barriers", "gamma", "feedback_gamma", "integral_clamp", "horizon_s",
       "dt", "weights", "plant", "mode", "planner", "seed", "rrt", "est"},
      "scenario document");
  if (!doc.contains("schema") || doc["schema"] != kScenarioSchema) {
    throw ParseError(std::string("scenario schema must be \"") +
                     kScenarioSchema + "\"");
  }
  if (!doc.contains("name") || !doc["name"].is_string() ||
      doc["name"].get<std::string>().empty()) {
    throw ParseError("scenario needs a non-empty name");
  }
  if (!doc.contains("model") || !doc["model"].is_string()) {
    throw ParseError("scenario needs a model path");
  }
  if (!doc.contains("goal")) {
    throw ParseError("scenario needs a goal position");
  }

  Scenario scenario;
  scenario.name = doc["name"].get<std::string>();
  scenario.model_path = doc["model"].get<std::string>();
  std::filesystem::path model_file(scenario.model_path);
  if (model_file.is_relative() && !base_dir.empty()) {
    model_file = std::filesystem::path(base_dir) / model_file;
  }
  scenario.model = load_model_file(model_file.string());
  const int n = scenario.model.n;
  const int m = scenario.model.input_dim();

  scenario.dt = scenario.model.dt;
  if (doc.contains("dt")) {
    const double dt = doc["dt"].get<double>();
    if (dt <= 0.0) throw ValidationError("scenario dt must be positive");
    if (std::abs(dt - scenario.model.dt) > 1e-15) {
      // Re-discretizing is only well defined for the default integrator
      // triple; custom dynamics are tied to the dt they were built with.
      const Mat I = Mat::Identity(n, n);
      const bool default_triple =
          scenario.model.A.isIdentity(1e-12) &&
          scenario.model.B.rows() == scenario.model.B.cols() &&
          (scenario.model.B - scenario.model.dt * I).cwiseAbs().maxCoeff() <=
              1e-12 &&
          scenario.model.G.cwiseAbs().maxCoeff() <= 1e-12;
      if (!default_triple) {
        throw ValidationError(
            "scenario dt overrides are only supported for models with the "
            "default integrator dynamics");
      }
      scenario.model.dt = dt;
      apply_default_dynamics(scenario.model);
    }
    scenario.dt = dt;
  }

  scenario.start = doc.contains("start")
                       ? parse_vec(doc["start"], "start")
                       : scenario.model.home_configuration;
  if (scenario.start.size() != n) {
    throw DimensionError("start size does not match the joint count");
  }
  scenario.goal = parse_vec3(doc["goal"], "goal");

  scenario.limit_min = scenario.model.joint_min();
  scenario.limit_max = scenario.model.joint_max();
  if (doc.contains("tightened_limits")) {
    const json& overrides = doc["tightened_limits"];
    if (!overrides.is_array()) {
      throw ParseError("tightened_limits must be an array");
    }
    for (std::size_t i = 0; i < overrides.size(); ++i) {
      const json& entry = overrides[i];
      const std::string where = "tightened_limits[" + std::to_string(i) + "]";
      if (!entry.is_object()) throw ParseError(where + " must be an object");
      reject_unknown_fields(entry, {"joint", "min", "max"}, where);
      if (!entry.contains("joint") || !entry["joint"].is_number_integer()) {
        throw ParseError(where + " needs an integer joint index");
      }
      if (!entry.contains("min") || !entry.contains("max")) {
        throw ParseError(where + " needs min and max");
      }
      const int j = entry["joint"].get<int>();
      if (j < 0 || j >= n) {
        throw ValidationError(where + ": joint index out of range");
      }
      for (int seen : scenario.tightened_joints) {
        if (seen == j) {
          throw ValidationError(where + ": duplicate override for joint " +
                                std::to_string(j));
        }
      }
      const double lo = entry["min"].get<double>();
      const double hi = entry["max"].get<double>();
      if (!(lo < hi)) throw ValidationError(where + ": min must be below max");
      if (lo < scenario.model.joints[j].min_pos - 1e-12 ||
          hi > scenario.model.joints[j].max_pos + 1e-12) {
        throw ValidationError(where +
                              ": override must lie inside the model limits");
      }
      scenario.limit_min[j] = lo;
      scenario.limit_max[j] = hi;
      scenario.tightened_joints.push_back(j);
    }
  }

  for (int j = 0; j < n; ++j) {
    if (scenario.start[j] < scenario.limit_min[j] ||
        scenario.start[j] > scenario.limit_max[j]) {
      throw ValidationError("start violates the effective limits at joint " +
                            std::to_string(j));
    }
  }

  if (doc.contains("barriers")) {
    const json& b = doc["barriers"];
    if (!b.is_object()) throw ParseError("barriers must be an object");
    reject_unknown_fields(b, {"rho0", "eta", "cap"}, "barriers");
    scenario.barrier_defaults.rho0 =
        b.value("rho0", scenario.barrier_defaults.rho0);
    scenario.barrier_defaults.eta =
        b.value("eta", scenario.barrier_defaults.eta);
    scenario.barrier_defaults.cap =
        b.value("cap", scenario.barrier_defaults.cap);
  }
  scenario.barriers = make_default_barriers(
      scenario.limit_min, scenario.limit_max, scenario.barrier_defaults);

  scenario.gamma = doc.contains("gamma")
                       ? parse_broadcast(doc["gamma"], n, "gamma")
                       : Vec::Constant(n, 1.0);
  if (scenario.gamma.minCoeff() <= 0.0) {
    throw ValidationError("gamma must be positive");
  }
  scenario.feedback_gamma =
      doc.contains("feedback_gamma")
          ? parse_broadcast(doc["feedback_gamma"], n, "feedback_gamma")
          : scenario.gamma;
  if (scenario.feedback_gamma.minCoeff() < 0.0) {
    throw ValidationError("feedback_gamma must be non-negative");
  }
  scenario.integral_clamp = doc.value("integral_clamp", 10.0);
  if (scenario.integral_clamp <= 0.0) {
    throw ValidationError("integral_clamp must be positive");
  }

  scenario.horizon_s = doc.value("horizon_s", 5.0);
  if (scenario.horizon_s <= 0.0) {
    throw ValidationError("horizon_s must be positive");
  }
  if (scenario.steps() < 1) {
    throw ValidationError("horizon_s / dt must give at least one step");
  }

  scenario.w_state = Vec::Constant(n, 1.0);
  // Default goal-approach rate sqrt(state/input) = 1/s stays inside the
  // reference model's velocity limits for deviations up to ~1.2 rad.
  scenario.w_input = Vec::Constant(m, 1.0);
  scenario.w_terminal = Vec::Constant(n, 100.0);
  if (doc.contains("weights")) {
    const json& w = doc["weights"];
    if (!w.is_object()) throw ParseError("weights must be an object");
    reject_unknown_fields(w, {"state", "input", "cross", "terminal"},
                          "weights");
    if (w.contains("state")) {
      scenario.w_state = parse_broadcast(w["state"], n, "weights.state");
    }
    if (w.contains("input")) {
      scenario.w_input = parse_broadcast(w["input"], m, "weights.input");
    }
    scenario.w_cross = w.value("cross", 0.0);
    if (w.contains("terminal")) {
      scenario.w_terminal =
          parse_broadcast(w["terminal"], n, "weights.terminal");
    }
  }
  if (scenario.w_state.minCoeff() < 0.0 ||
      scenario.w_terminal.minCoeff() < 0.0) {
    throw ValidationError("state/terminal weights must be non-negative");
  }
  if (scenario.w_input.minCoeff() <= 0.0) {
    throw ValidationError("input weights must be positive");
  }
  if (scenario.w_cross != 0.0 && m != n) {
    throw ValidationError(
        "a cross weight requires the input dimension to match the joint "
        "count");
  }

  scenario.plant.friction = Vec::Constant(n, 0.1);
  if (doc.contains("plant")) {
    const json& p = doc["plant"];
    if (!p.is_object()) throw ParseError("plant must be an object");
    reject_unknown_fields(p, {"friction", "disturbance", "delay_steps"},
                          "plant");
    if (p.contains("friction")) {
      scenario.plant.friction =
          parse_broadcast(p["friction"], n, "plant.friction");
    }
    scenario.plant.disturbance = p.value("disturbance", 0.01);
    scenario.plant.delay_steps = p.value("delay_steps", 0);
  }
  if (scenario.plant.friction.minCoeff() < 0.0) {
    throw ValidationError("plant friction must be non-negative");
  }
  if (scenario.plant.disturbance < 0.0) {
    throw ValidationError("plant disturbance must be non-negative");
  }
  if (scenario.plant.delay_steps < 0) {
    throw ValidationError("plant delay_steps must be non-negative");
  }

  scenario.mode = parse_mode(doc.value("mode", std::string("open-loop")));
  scenario.planner = doc.value("planner", std::string("optimal-adapt"));
  if (!is_known_planner(scenario.planner)) {
    std::string known;
    for (const std::string& p : planner_names()) {
      if (!known.empty()) known += ", ";
      known += p;
    }
    throw ValidationError("unknown planner \"" + scenario.planner +
                          "\" (known: " + known + ")");
  }
  if (doc.contains("seed")) {
    scenario.seed = parse_seed(doc["seed"], "seed");
  }

  scenario.rrt =
      parse_sampling(doc.contains("rrt") ? doc["rrt"] : json(), "rrt",
                     seed_for(scenario.seed, "rrt"));
  scenario.est =
      parse_sampling(doc.contains("est") ? doc["est"] : json(), "est",
                     seed_for(scenario.seed, "est"));
  return scenario;
}

}  // namespace

SimMode parse_mode(const std::string& text) {
  if (text == "open-loop") return SimMode::kOpenLoop;
  if (text == "closed-loop") return SimMode::kClosedLoop;
  throw ParseError("mode must be \"open-loop\" or \"closed-loop\", got \"" +
                   text + "\"");
}

std::string mode_name(SimMode mode) {
  return mode == SimMode::kOpenLoop ? "open-loop" : "closed-loop";
}

Scenario load_scenario(const std::string& text, const std::string& base_dir) {
  return load_scenario_doc(parse_document(text, "scenario"), base_dir);
}

Scenario load_scenario_file(const std::string& path) {
  const std::string base_dir =
      std::filesystem::path(path).parent_path().string();
  return load_scenario(read_file(path), base_dir);
}

Suite load_suite_file(const std::string& path) {
  const json doc = parse_document(read_file(path), "suite");
  reject_unknown_fields(
      doc, {"schema", "name", "master_seed", "defaults", "scenarios"},
      "suite document");
  if (!doc.contains("schema") || doc["schema"] != kSuiteSchema) {
    throw ParseError(std::string("suite schema must be \"") + kSuiteSchema +
                     "\"");
  }
  if (!doc.contains("name") || !doc["name"].is_string() ||
      doc["name"].get<std::string>().empty()) {
    throw ParseError("suite needs a non-empty name");
  }
  if (!doc.contains("scenarios") || !doc["scenarios"].is_array() ||
      doc["scenarios"].empty()) {
    throw ParseError("suite needs a non-empty scenarios array");
  }
  json defaults = json::object();
  if (doc.contains("defaults")) {
    if (!doc["defaults"].is_object()) {
      throw ParseError("suite defaults must be an object");
    }
    defaults = doc["defaults"];
  }

  Suite suite;
  suite.name = doc["name"].get<std::string>();
  if (doc.contains("master_seed")) {
    suite.master_seed = parse_seed(doc["master_seed"], "master_seed");
  }
  const std::string base_dir =
      std::filesystem::path(path).parent_path().string();

  for (std::size_t idx = 0; idx < doc["scenarios"].size(); ++idx) {
    const json& entry = doc["scenarios"][idx];
    if (!entry.is_object()) {
      throw ParseError("scenarios[" + std::to_string(idx) +
                       "] must be an object");
    }
    // Shallow merge: entry keys win, defaults fill the rest.
    json merged = entry;
    for (const auto& item : defaults.items()) {
      if (!merged.contains(item.key())) merged[item.key()] = item.value();
    }
    if (!merged.contains("schema")) merged["schema"] = kScenarioSchema;
    if (!merged.contains("seed")) {
      merged["seed"] = seed_for_index(suite.master_seed, idx);
    }
    if (!merged.contains("name")) {
      const std::string num = std::to_string(idx);
      merged["name"] = "case_" + std::string(num.size() < 2 ? 1 : 0, '0') + num;
    }
    suite.scenarios.push_back(load_scenario_doc(merged, base_dir));
  }
  return suite;
}

ProblemSpec make_problem_spec(const Scenario& scenario, const Vec& x0,
                              const Vec& x_goal) {
  const int n = scenario.model.n;
  const int m = scenario.model.input_dim();
  if (x0.size() != n || x_goal.size() != n) {
    throw DimensionError("x0/x_goal size does not match the joint count");
  }
  ProblemSpec spec;
  spec.W_state = scenario.w_state.asDiagonal();
  spec.W_input = scenario.w_input.asDiagonal();
  spec.W_cross = scenario.w_cross == 0.0
                     ? Mat::Zero(m, n)
                     : Mat(scenario.w_cross * Mat::Identity(m, n));
  spec.W_terminal = scenario.w_terminal.asDiagonal();
  spec.q_terminal = Vec::Zero(n);
  spec.x_goal = x_goal;
  spec.x0 = x0;
  spec.horizon = scenario.steps();
  spec.dt = scenario.dt;
  return spec;
}

Vec scenario_goal_configuration(const Scenario& scenario) {
  return inverse_kinematics(scenario.model, scenario.goal, scenario.start);
}

Vec scenario_planning_goal_configuration(const Scenario& scenario) {
  IkOptions options;
  options.min_override = scenario.limit_min;
  options.max_override = scenario.limit_max;
  return inverse_kinematics(scenario.model, scenario.goal, scenario.start,
                            options);
}

}  // namespace optadapt
