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
// Adaptive initial-path estimator: a nonlinear error-driven control law is
// rolled through the model's discrete linear dynamics to produce the desired
// state/input pair that seeds plan refinement.

#ifndef OPTADAPT_ADAPTIVE_ESTIMATOR_HPP_
#define OPTADAPT_ADAPTIVE_ESTIMATOR_HPP_

#include <string>
#include <vector>

#include "optadapt/chain_model.hpp"
#include "optadapt/types.hpp"

namespace optadapt {

// Rolling state of adaptive control law evaluation. The law needs the
// previous error (finite-difference derivative) and the clamped running
// error integral.
struct AdaptiveState {
  Vec gamma;           // per-joint adaptation gain, size n, > 0
  double dt = 1e-3;    // s, > 0
  Vec error_prev;      // size n
  Vec error_integral;  // size n, clamped to +-integral_clamp
  double integral_clamp = 10.0;  // rad*s
};

template <typename T>
struct WithNextState {
  T value;
  AdaptiveState next;
};

// Elementwise error shaping
//   lambda_j = e_j^3 + e_j * ((e_j - e_prev_j)/dt)^2 + e_j * integral_j^2
// where integral accumulates e*dt (clamped) *before* the terms are
// evaluated. Odd in (e, history): mirroring every error sequence flips the
// sign of the output. Returns the value and the advanced state (error_prev
// and error_integral updated); the input state is untouched.
WithNextState<Vec> lambda_fn(const AdaptiveState& state, const Vec& error);

// Adaptive torque tau = gamma .* lambda(e) + eta with e = x_goal - x and
// eta the gravity term supplied by the caller.
WithNextState<Vec> adaptive_torque(const AdaptiveState& state, const Vec& x,
                                   const Vec& x_goal, const Vec& gravity_eta);

// Desired path produced by rolling the control law through the model:
//   x_des[0]   = x0
//   tau[i]     = adaptive_torque on x_des[i]
//   x_des[i+1] = A x_des[i] + B tau[i]
//   u_des[i]   = G x_des[i]
struct InitialPath {
  std::vector<Vec> x_des;  // N+1 states
  std::vector<Vec> u_des;  // N inputs
  std::vector<Vec> tau;    // N law outputs
  double dt = 1e-3;
};

struct EstimateOptions {
  double integral_clamp = 10.0;       // rad*s
  double divergence_threshold = 1e3;  // rad, on the max-abs simulated state
};

// Open-loop rollout on the model estimate (the law sees the simulated state,
// never a measurement). gamma is per-joint (size n) or broadcast from a
// single value by the caller. Throws SolverDivergenceError naming the step
// if the simulated state exceeds the divergence threshold.
InitialPath estimate_path(const ChainModel& model, const Vec& x0,
                          const Vec& x_goal, int steps, const Vec& gamma,
                          double dt, const EstimateOptions& options = {});

// CSV export: header "step,t,x0..,u0..,tau0..", one row per step; the final
// state row (step N) carries zero input/tau cells. Atomic write.
void write_initial_path_csv(const std::string& path, const InitialPath& p);

}  // namespace optadapt

#endif  // OPTADAPT_ADAPTIVE_ESTIMATOR_HPP_
