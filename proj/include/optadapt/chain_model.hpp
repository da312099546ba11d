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
// Serial-chain manipulator description: geometry, limits, and the discrete
// linear state-space triple (A, B, G) used by the path estimator and the
// plan optimizer.
//
// Kinematic convention: joint j rotates about a fixed unit axis expressed in
// its parent frame; after the rotation a fixed link offset translates to the
// next frame origin. The end effector is the origin of the frame after the
// last joint's offset, so `offset` is the link that the joint carries.

#ifndef OPTADAPT_CHAIN_MODEL_HPP_
#define OPTADAPT_CHAIN_MODEL_HPP_

#include <optional>
#include <string>
#include <vector>

#include "optadapt/types.hpp"

namespace optadapt {

struct JointSpec {
  Vec3 axis = Vec3::UnitZ();    // unit rotation axis in the parent frame
  Vec3 offset = Vec3::Zero();   // link offset to the next frame, meters
  double min_pos = -3.14159265358979323846;  // rad
  double max_pos = 3.14159265358979323846;   // rad
  double velocity_limit = 1.0;               // rad/s, must be > 0
  double mass = 0.0;  // point mass at the link end, kg (0 = massless)
};

struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();  // unit quaternion, w >= 0 canonical
};

struct ChainModel {
  std::string name;
  int n = 0;                      // number of joints
  std::vector<JointSpec> joints;  // size n
  double dt = 1e-3;               // step used for the default B and G, s

  // Discrete linear model x_{k+1} = A x_k + B u_k with output u_des = G x_k.
  // Defaults (velocity-integrator joints): A = I, B = dt*I, G = (A - I)/dt.
  Mat A;  // n x n
  Mat B;  // n x m (m = n for the defaults)
  Mat G;  // m x n

  Vec3 gravity_axis = -Vec3::UnitZ();  // unit vector pointing "down"
  Vec home_configuration;              // size n, within limits

  // Reference pose of the home configuration. When present, loading checks
  // nothing; tests compare forward_kinematics(home) against it.
  std::optional<Pose> home_pose;

  int input_dim() const { return static_cast<int>(B.cols()); }
  Vec joint_min() const;
  Vec joint_max() const;
  Vec velocity_limits() const;
};

// Builds the default (A, B, G) triple for n velocity-integrator joints.
void apply_default_dynamics(ChainModel& model);

// Parses a model document (see docs/FILE_FORMATS.md, schema
// "optadapt.model/1"). Unknown fields are rejected; invariants (unit axes,
// min < max, velocity_limit > 0, matching dimensions, home within limits)
// are validated. Throws ParseError / ValidationError.
ChainModel load_model(const std::string& text);

// Convenience: load from a file path.
ChainModel load_model_file(const std::string& path);

// Serializes a model such that load_model(serialize_model(m)) round-trips
// to an identical model.
std::string serialize_model(const ChainModel& model);

// End-effector pose at configuration q (size n).
Pose forward_kinematics(const ChainModel& model, const Vec& q);

// 6 x n geometric Jacobian at q; rows 0..2 translational, rows 3..5 the
// world-frame joint axes (rotational part).
Mat jacobian(const ChainModel& model, const Vec& q);

struct IkOptions {
  int max_iterations = 500;
  double tolerance = 1e-4;   // meters, end-effector position residual
  double damping = 1e-3;     // damping scale; squared lambda = damping * residual
  // Optional per-joint limit overrides (tightened scenario limits). Empty
  // means: use the model's limits.
  Vec min_override;
  Vec max_override;
};

// Damped-least-squares position-only inverse kinematics. Iterates from
// `seed`, clamping to the (possibly overridden) joint limits every step.
// Throws UnreachableGoalError if the residual is still above tolerance
// after max_iterations.
Vec inverse_kinematics(const ChainModel& model, const Vec3& goal_position,
                       const Vec& seed, const IkOptions& options = {});

// Gravity-compensation torque at q from the point masses at the link ends
// (g = 9.81 m/s^2 along gravity_axis). Configuration dependent; zero for a
// massless chain.
Vec gravity_term(const ChainModel& model, const Vec& q);

}  // namespace optadapt

#endif  // OPTADAPT_CHAIN_MODEL_HPP_
