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
// Repulsive potential-field joint-limit barriers and their per-step
// linearization into equality rows for the constrained plan refinement.
//
// Lower-limit barrier (distance rho = x - x_min):
//   h(rho) = eta * (1/rho - 1/rho0) / rho^2   for 0 < rho <= rho0, else 0,
// positive, blowing up toward the limit, capped at `cap` (and equal to the
// cap for rho <= 0, with zero gradient anywhere the cap saturates).
// Upper-limit barrier: mirror image with rho = x_max - x and negative sign.

#ifndef OPTADAPT_CONSTRAINT_FIELDS_HPP_
#define OPTADAPT_CONSTRAINT_FIELDS_HPP_

#include <vector>

#include "optadapt/types.hpp"

namespace optadapt {

struct JointLimitBarrier {
  int joint_index = 0;
  double x_min = -1.0;  // rad
  double x_max = 1.0;   // rad, > x_min
  double rho0 = 0.05;   // activation distance, rad, > 0
  double eta = 1e-3;    // barrier gain, > 0
  double cap = 1e6;     // magnitude cap
};

// Barrier values at joint position x. barrier_min >= 0, barrier_max <= 0.
double barrier_min(double x, const JointLimitBarrier& b);
double barrier_max(double x, const JointLimitBarrier& b);

// d(barrier)/dx of the active branch; exactly 0 outside the activation
// region and on the saturated cap plateau (including beyond the limit).
double barrier_min_gradient(double x, const JointLimitBarrier& b);
double barrier_max_gradient(double x, const JointLimitBarrier& b);

// Equality rows linearized about one nominal state:
//   D dx = e  (lower-limit rows),  C dx = d  (upper-limit rows)
// with one row per *active* barrier (rho <= rho0 at the nominal point),
// gradient rows and right-hand sides e = -h(x_nominal) that drive the
// barrier value to zero (i.e. the joint back to the activation boundary).
struct ConstraintBlock {
  Mat D;  // rows x n (0 rows when nothing active)
  Vec e;
  Mat C;  // rows x n
  Vec d;
};

struct LinearizedConstraints {
  std::vector<ConstraintBlock> steps;  // size N+1, one block per nominal state
  int total_rows = 0;
};

// Linearizes every barrier at every step of the nominal state sequence.
// Activation is a pointwise test; re-run this every outer iteration.
LinearizedConstraints linearize_constraints(
    const std::vector<JointLimitBarrier>& barriers,
    const std::vector<Vec>& x_nominal);

struct BarrierDefaults {
  double rho0 = 0.05;
  double eta = 1e-3;
  double cap = 1e6;
};

// One min/max barrier pair per joint from effective (possibly tightened)
// limits.
std::vector<JointLimitBarrier> make_default_barriers(const Vec& joint_min,
                                                     const Vec& joint_max,
                                                     const BarrierDefaults& d = {});

// Sum of |barrier| magnitudes over a state sequence; the violation part of
// the refinement merit function.
double barrier_magnitude(const std::vector<JointLimitBarrier>& barriers,
                         const std::vector<Vec>& x);

}  // namespace optadapt

#endif  // OPTADAPT_CONSTRAINT_FIELDS_HPP_
