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

#include "optadapt/constraint_fields.hpp"

#include <cmath>
#include <string>

#include "optadapt/errors.hpp"

namespace optadapt {
namespace {

void check_barrier(const JointLimitBarrier& b) {
  if (!(b.x_min < b.x_max)) throw ValidationError("barrier: x_min must be below x_max");
  if (!(b.rho0 > 0.0)) throw ValidationError("barrier: rho0 must be positive");
  if (!(b.eta > 0.0)) throw ValidationError("barrier: eta must be positive");
  if (!(b.cap > 0.0)) throw ValidationError("barrier: cap must be positive");
}

// Raw repulsive profile on the distance-to-limit rho, positive and strictly
// decreasing on (0, rho0], zero at and beyond rho0.
double profile(double rho, double rho0, double eta) {
  if (rho >= rho0) return 0.0;
  return eta * (1.0 / rho - 1.0 / rho0) / (rho * rho);
}

// d(profile)/d(rho) = -eta * (3/rho^4 - 2/(rho0 rho^3)).
double profile_gradient(double rho, double rho0, double eta) {
  if (rho >= rho0) return 0.0;
  const double rho3 = rho * rho * rho;
  return -eta * (3.0 / (rho3 * rho) - 2.0 / (rho0 * rho3));
}

}  // namespace

double barrier_min(double x, const JointLimitBarrier& b) {
  check_barrier(b);
  const double rho = x - b.x_min;
  if (rho <= 0.0) return b.cap;
  return std::min(profile(rho, b.rho0, b.eta), b.cap);
}

double barrier_max(double x, const JointLimitBarrier& b) {
  check_barrier(b);
  const double rho = b.x_max - x;
  if (rho <= 0.0) return -b.cap;
  return std::max(-profile(rho, b.rho0, b.eta), -b.cap);
}

double barrier_min_gradient(double x, const JointLimitBarrier& b) {
  check_barrier(b);
  const double rho = x - b.x_min;
  // Zero on the saturated plateau (at/beyond the limit or where the cap
  // binds) and outside the activation region.
  if (rho <= 0.0) return 0.0;
  if (profile(rho, b.rho0, b.eta) >= b.cap) return 0.0;
  return profile_gradient(rho, b.rho0, b.eta);  // d rho / dx = +1
}

double barrier_max_gradient(double x, const JointLimitBarrier& b) {
  check_barrier(b);
  const double rho = b.x_max - x;
  if (rho <= 0.0) return 0.0;
  if (profile(rho, b.rho0, b.eta) >= b.cap) return 0.0;
  // value = -profile(rho), d rho / dx = -1  =>  d value / dx = +profile'(rho)...
  // chain rule: d/dx [-profile(x_max - x)] = profile'(rho).
  return profile_gradient(rho, b.rho0, b.eta);
}

LinearizedConstraints linearize_constraints(
    const std::vector<JointLimitBarrier>& barriers,
    const std::vector<Vec>& x_nominal) {
  LinearizedConstraints out;
  out.steps.reserve(x_nominal.size());
  const Eigen::Index n = x_nominal.empty() ? 0 : x_nominal.front().size();
  for (const JointLimitBarrier& b : barriers) {
    check_barrier(b);
    if (b.joint_index < 0 || b.joint_index >= n) {
      throw ValidationError("barrier joint_index " + std::to_string(b.joint_index) +
                            " out of range");
    }
  }
  for (const Vec& x : x_nominal) {
    ConstraintBlock block;
    std::vector<double> d_grad, d_rhs, c_grad, c_rhs;
    std::vector<int> d_joint, c_joint;
    for (const JointLimitBarrier& b : barriers) {
      const double xj = x[b.joint_index];
      if (xj - b.x_min <= b.rho0) {  // lower barrier active
        d_joint.push_back(b.joint_index);
        d_grad.push_back(barrier_min_gradient(xj, b));
        d_rhs.push_back(-barrier_min(xj, b));
      }
      if (b.x_max - xj <= b.rho0) {  // upper barrier active
        c_joint.push_back(b.joint_index);
        c_grad.push_back(barrier_max_gradient(xj, b));
        c_rhs.push_back(-barrier_max(xj, b));
      }
    }
    block.D = Mat::Zero(static_cast<Eigen::Index>(d_grad.size()), n);
    block.e = Vec::Zero(static_cast<Eigen::Index>(d_grad.size()));
    for (size_t r = 0; r < d_grad.size(); ++r) {
      block.D(static_cast<Eigen::Index>(r), d_joint[r]) = d_grad[r];
      block.e[static_cast<Eigen::Index>(r)] = d_rhs[r];
    }
    block.C = Mat::Zero(static_cast<Eigen::Index>(c_grad.size()), n);
    block.d = Vec::Zero(static_cast<Eigen::Index>(c_grad.size()));
    for (size_t r = 0; r < c_grad.size(); ++r) {
      block.C(static_cast<Eigen::Index>(r), c_joint[r]) = c_grad[r];
      block.d[static_cast<Eigen::Index>(r)] = c_rhs[r];
    }
    out.total_rows += static_cast<int>(d_grad.size() + c_grad.size());
    out.steps.push_back(std::move(block));
  }
  return out;
}

std::vector<JointLimitBarrier> make_default_barriers(const Vec& joint_min,
                                                     const Vec& joint_max,
                                                     const BarrierDefaults& d) {
  if (joint_min.size() != joint_max.size()) {
    throw DimensionError("make_default_barriers: limit vector sizes differ");
  }
  std::vector<JointLimitBarrier> barriers;
  barriers.reserve(joint_min.size());
  for (Eigen::Index j = 0; j < joint_min.size(); ++j) {
    JointLimitBarrier b;
    b.joint_index = static_cast<int>(j);
    b.x_min = joint_min[j];
    b.x_max = joint_max[j];
    b.rho0 = d.rho0;
    b.eta = d.eta;
    b.cap = d.cap;
    barriers.push_back(b);
  }
  return barriers;
}

double barrier_magnitude(const std::vector<JointLimitBarrier>& barriers,
                         const std::vector<Vec>& x) {
  double total = 0.0;
  for (const Vec& state : x) {
    for (const JointLimitBarrier& b : barriers) {
      const double xj = state[b.joint_index];
      total += barrier_min(xj, b) - barrier_max(xj, b);  // both magnitudes
    }
  }
  return total;
}

}  // namespace optadapt
