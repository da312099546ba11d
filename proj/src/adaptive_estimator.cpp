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

#include "optadapt/adaptive_estimator.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "optadapt/errors.hpp"
#include "optadapt/io.hpp"

namespace optadapt {
namespace {

void check_state(const AdaptiveState& state, Eigen::Index n, const char* who) {
  if (!(state.dt > 0.0)) throw ValidationError(std::string(who) + ": dt must be positive");
  if (state.gamma.size() != n || state.error_prev.size() != n ||
      state.error_integral.size() != n) {
    throw DimensionError(std::string(who) + ": state vectors must match the error size");
  }
}

}  // namespace

WithNextState<Vec> lambda_fn(const AdaptiveState& state, const Vec& error) {
  check_state(state, error.size(), "lambda_fn");
  AdaptiveState next = state;
  Vec value(error.size());
  for (Eigen::Index j = 0; j < error.size(); ++j) {
    const double e = error[j];
    // Integral accumulates first (clamped), then all three terms use the
    // updated value; the derivative is a backward difference.
    double integral = state.error_integral[j] + e * state.dt;
    integral = std::clamp(integral, -state.integral_clamp, state.integral_clamp);
    const double derivative = (e - state.error_prev[j]) / state.dt;
    value[j] = e * e * e + e * derivative * derivative + e * integral * integral;
    next.error_integral[j] = integral;
    next.error_prev[j] = e;
  }
  return {value, next};
}

WithNextState<Vec> adaptive_torque(const AdaptiveState& state, const Vec& x,
                                   const Vec& x_goal, const Vec& gravity_eta) {
  if (x.size() != x_goal.size() || x.size() != gravity_eta.size()) {
    throw DimensionError("adaptive_torque: x, x_goal, gravity term sizes differ");
  }
  const Vec error = x_goal - x;
  WithNextState<Vec> shaped = lambda_fn(state, error);
  Vec tau = state.gamma.cwiseProduct(shaped.value) + gravity_eta;
  return {tau, shaped.next};
}

InitialPath estimate_path(const ChainModel& model, const Vec& x0,
                          const Vec& x_goal, int steps, const Vec& gamma,
                          double dt, const EstimateOptions& options) {
  const int n = model.n;
  if (x0.size() != n || x_goal.size() != n) {
    throw DimensionError("estimate_path: x0/x_goal size does not match n_joints");
  }
  if (gamma.size() != n) {
    throw DimensionError("estimate_path: gamma size does not match n_joints");
  }
  if (steps <= 0) throw ValidationError("estimate_path: steps must be positive");
  if (!(dt > 0.0)) throw ValidationError("estimate_path: dt must be positive");

  const bool massless = [&] {
    for (const JointSpec& j : model.joints) {
      if (j.mass != 0.0) return false;
    }
    return true;
  }();

  AdaptiveState state;
  state.gamma = gamma;
  state.dt = dt;
  // Seed the previous error with the initial error so the first backward
  // difference is zero instead of a dt-scaled spike.
  state.error_prev = x_goal - x0;
  state.error_integral = Vec::Zero(n);
  state.integral_clamp = options.integral_clamp;

  InitialPath path;
  path.dt = dt;
  path.x_des.reserve(steps + 1);
  path.u_des.reserve(steps);
  path.tau.reserve(steps);
  path.x_des.push_back(x0);

  const Vec zero_eta = Vec::Zero(n);
  Vec x = x0;
  for (int i = 0; i < steps; ++i) {
    const Vec eta = massless ? zero_eta : gravity_term(model, x);
    WithNextState<Vec> torque = adaptive_torque(state, x, x_goal, eta);
    state = torque.next;
    path.u_des.push_back(model.G * x);
    path.tau.push_back(torque.value);
    x = model.A * x + model.B * torque.value;
    if (x.cwiseAbs().maxCoeff() > options.divergence_threshold) {
      throw SolverDivergenceError(
          "adaptive path estimate diverged at step " + std::to_string(i + 1) +
          " (|x| exceeded " + std::to_string(options.divergence_threshold) + " rad)");
    }
    path.x_des.push_back(x);
  }
  return path;
}

void write_initial_path_csv(const std::string& path, const InitialPath& p) {
  const Eigen::Index n = p.x_des.empty() ? 0 : p.x_des.front().size();
  std::string out;
  std::vector<std::string> header{"step", "t"};
  for (Eigen::Index j = 0; j < n; ++j) header.push_back("x" + std::to_string(j));
  for (Eigen::Index j = 0; j < n; ++j) header.push_back("u" + std::to_string(j));
  for (Eigen::Index j = 0; j < n; ++j) header.push_back("tau" + std::to_string(j));
  out += csv_row(header);
  for (size_t i = 0; i < p.x_des.size(); ++i) {
    std::vector<std::string> cells{std::to_string(i),
                                   format_double(static_cast<double>(i) * p.dt)};
    for (Eigen::Index j = 0; j < n; ++j) cells.push_back(format_double(p.x_des[i][j]));
    const bool has_input = i < p.u_des.size();
    for (Eigen::Index j = 0; j < n; ++j) {
      cells.push_back(format_double(has_input ? p.u_des[i][j] : 0.0));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      cells.push_back(format_double(has_input ? p.tau[i][j] : 0.0));
    }
    out += csv_row(cells);
  }
  atomic_write_file(path, out);
}

}  // namespace optadapt
