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

#include <doctest.h>

#include <cmath>
#include <vector>

#include "optadapt/constraint_fields.hpp"
#include "optadapt/types.hpp"
#include "support/test_helpers.hpp"

using namespace optadapt;
using optadapt::testing::TestRng;

namespace {

// Unit-gain barrier on [0, 1] with a 0.1 activation layer.
JointLimitBarrier unit_barrier() {
  JointLimitBarrier b;
  b.joint_index = 0;
  b.x_min = 0.0;
  b.x_max = 1.0;
  b.rho0 = 0.1;
  b.eta = 1.0;
  b.cap = 1e6;
  return b;
}

}  // namespace

TEST_CASE("the lower barrier vanishes exactly at the activation boundary") {
  const JointLimitBarrier b = unit_barrier();
  CHECK(barrier_min(b.x_min + b.rho0, b) == 0.0);
}

TEST_CASE("the lower barrier is zero well outside the activation layer") {
  const JointLimitBarrier b = unit_barrier();
  CHECK(barrier_min(b.x_min + 2.0 * b.rho0, b) == 0.0);
}

TEST_CASE("the lower barrier at half the activation distance") {
  // eta (1/rho - 1/rho0) / rho^2 with eta 1, rho0 0.1, rho 0.05:
  // (20 - 10) / 0.0025 = 4000.
  const JointLimitBarrier b = unit_barrier();
  CHECK(std::abs(barrier_min(0.05, b) - 4000.0) <= 1e-12 * 4000.0);
}

TEST_CASE("the upper barrier vanishes at its activation boundary") {
  const JointLimitBarrier b = unit_barrier();
  CHECK(barrier_max(b.x_max - b.rho0, b) == 0.0);
}

TEST_CASE("the upper barrier mirrors the lower one with negative sign") {
  const JointLimitBarrier b = unit_barrier();
  CHECK(std::abs(barrier_max(0.95, b) + 4000.0) <= 1e-12 * 4000.0);
}

TEST_CASE("both barriers are zero mid-range") {
  const JointLimitBarrier b = unit_barrier();
  CHECK(barrier_min(0.5, b) == 0.0);
  CHECK(barrier_max(0.5, b) == 0.0);
  CHECK(barrier_min_gradient(0.5, b) == 0.0);
  CHECK(barrier_max_gradient(0.5, b) == 0.0);
}

TEST_CASE("the lower-barrier slope at half the activation distance") {
  // d/dx of eta (1/rho - 1/rho0)/rho^2 at rho = 0.05 (rho = x - x_min):
  // -eta (3/rho^4 - 2/(rho0 rho^3)) = -(480000 - 160000) = -320000.
  const JointLimitBarrier b = unit_barrier();
  CHECK(std::abs(barrier_min_gradient(0.05, b) + 320000.0) <=
        1e-9 * 320000.0);
}

TEST_CASE("the gradient is zero on the saturated cap plateau") {
  JointLimitBarrier b = unit_barrier();
  b.cap = 100.0;  // saturates well inside the layer
  REQUIRE(barrier_min(0.05, b) == 100.0);
  CHECK(barrier_min_gradient(0.05, b) == 0.0);
  // Beyond the limit itself the value pins to the cap with zero slope.
  CHECK(barrier_min(-0.2, b) == 100.0);
  CHECK(barrier_min_gradient(-0.2, b) == 0.0);
}

TEST_CASE("linearizing a mid-range path produces no rows at all") {
  const JointLimitBarrier b = unit_barrier();
  std::vector<Vec> path(20, Vec::Constant(2, 0.5));
  const LinearizedConstraints lin = linearize_constraints({b}, path);
  REQUIRE(lin.steps.size() == 20);
  CHECK(lin.total_rows == 0);
  for (const ConstraintBlock& blk : lin.steps) {
    CHECK(blk.D.rows() == 0);
    CHECK(blk.C.rows() == 0);
  }
}

TEST_CASE("rows appear exactly at the steps where the path enters the layer") {
  const JointLimitBarrier b = unit_barrier();  // layer below 0.1 and above 0.9
  std::vector<Vec> path;
  std::vector<bool> lower_active, upper_active;
  for (int i = 0; i < 40; ++i) {
    const double x = 0.02 + i * 0.025;  // sweeps 0.02 .. 0.995
    path.push_back(Vec::Constant(1, x));
    lower_active.push_back(x - b.x_min <= b.rho0);
    upper_active.push_back(b.x_max - x <= b.rho0);
  }
  const LinearizedConstraints lin = linearize_constraints({b}, path);
  REQUIRE(lin.steps.size() == path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    CHECK(lin.steps[i].D.rows() == (lower_active[i] ? 1 : 0));
    CHECK(lin.steps[i].C.rows() == (upper_active[i] ? 1 : 0));
  }
}

TEST_CASE("a single active lower barrier produces its gradient row and residual") {
  JointLimitBarrier b = unit_barrier();
  b.joint_index = 1;  // second joint of a two-joint state
  Vec x(2);
  x << 0.5, 0.04;  // joint 1 is 0.04 above its lower limit: inside the layer
  const LinearizedConstraints lin = linearize_constraints({b}, {x});
  REQUIRE(lin.steps.size() == 1);
  const ConstraintBlock& blk = lin.steps[0];
  REQUIRE(blk.D.rows() == 1);
  REQUIRE(blk.D.cols() == 2);
  CHECK(blk.D(0, 0) == 0.0);
  CHECK(blk.D(0, 1) == barrier_min_gradient(0.04, b));
  CHECK(blk.e[0] == -barrier_min(0.04, b));
  CHECK(blk.C.rows() == 0);
  CHECK(lin.total_rows == 1);
}

TEST_CASE("the barrier rises continuously from zero at the activation edge") {
  const JointLimitBarrier b = unit_barrier();
  // |h(rho0 - eps)| <= K eps near the edge; slope magnitude there is
  // eta/rho0^4 = 1e4, so K = 2e4 is a safe Lipschitz bound.
  const double K = 2.0 * b.eta / std::pow(b.rho0, 4);
  for (double eps = 1e-4; eps >= 1e-9; eps *= 0.1) {
    CHECK(std::abs(barrier_min(b.x_min + b.rho0 - eps, b)) <= K * eps);
    CHECK(std::abs(barrier_max(b.x_max - b.rho0 + eps, b)) <= K * eps);
  }
}

TEST_CASE("the barrier grows monotonically toward the limit") {
  const JointLimitBarrier b = unit_barrier();
  double prev_min = barrier_min(b.x_min + b.rho0, b);
  double prev_max = barrier_max(b.x_max - b.rho0, b);
  for (double rho = b.rho0 - 1e-4; rho > 0.0; rho -= 1e-4) {
    const double lo = barrier_min(b.x_min + rho, b);
    const double hi = barrier_max(b.x_max - rho, b);
    CHECK(lo >= prev_min);
    CHECK(hi <= prev_max);
    prev_min = lo;
    prev_max = hi;
  }
}

TEST_CASE("barrier gradients match central differences away from the edges") {
  const BarrierDefaults defaults;  // the production parameter set
  JointLimitBarrier b;
  b.x_min = -0.3;
  b.x_max = 0.3;
  b.rho0 = defaults.rho0;
  b.eta = defaults.eta;
  b.cap = defaults.cap;
  // Cap saturation for these parameters happens around rho ~ 1e-3; sample
  // rho in [0.004, 0.045] to stay clear of both the cap and the edge.
  TestRng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const double rho = rng.uniform(0.004, 0.045);
    const double eps = 1e-7 * rho;

    const double x_lo = b.x_min + rho;
    const double fd_lo =
        (barrier_min(x_lo + eps, b) - barrier_min(x_lo - eps, b)) / (2 * eps);
    const double g_lo = barrier_min_gradient(x_lo, b);
    CHECK(std::abs(fd_lo - g_lo) <= 1e-6 * std::max(1.0, std::abs(g_lo)));

    const double x_hi = b.x_max - rho;
    const double fd_hi =
        (barrier_max(x_hi + eps, b) - barrier_max(x_hi - eps, b)) / (2 * eps);
    const double g_hi = barrier_max_gradient(x_hi, b);
    CHECK(std::abs(fd_hi - g_hi) <= 1e-6 * std::max(1.0, std::abs(g_hi)));
  }
}

TEST_CASE("row placement agrees with an independent activation test on random paths") {
  TestRng rng(123);
  std::vector<JointLimitBarrier> barriers;
  JointLimitBarrier b0 = unit_barrier();
  JointLimitBarrier b1 = unit_barrier();
  b1.joint_index = 1;
  b1.x_min = -0.5;
  b1.x_max = 0.5;
  b1.rho0 = 0.2;
  barriers = {b0, b1};
  std::vector<Vec> path;
  for (int i = 0; i < 200; ++i) {
    Vec x(2);
    x << rng.uniform(-0.05, 1.05), rng.uniform(-0.55, 0.55);
    path.push_back(x);
  }
  const LinearizedConstraints lin = linearize_constraints(barriers, path);
  int expected_total = 0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    int lower = 0, upper = 0;
    for (const JointLimitBarrier& b : barriers) {
      if (path[i][b.joint_index] - b.x_min <= b.rho0) ++lower;
      if (b.x_max - path[i][b.joint_index] <= b.rho0) ++upper;
    }
    CHECK(lin.steps[i].D.rows() == lower);
    CHECK(lin.steps[i].C.rows() == upper);
    expected_total += lower + upper;
  }
  CHECK(lin.total_rows == expected_total);
}

TEST_CASE("default barrier construction covers every joint with both sides") {
  Vec lo(3), hi(3);
  lo << -1.0, -0.1, 0.0;
  hi << 1.0, 0.1, 2.0;
  const auto barriers = make_default_barriers(lo, hi);
  REQUIRE(barriers.size() == 3);
  const BarrierDefaults defaults;
  for (int j = 0; j < 3; ++j) {
    CHECK(barriers[j].joint_index == j);
    CHECK(barriers[j].x_min == lo[j]);
    CHECK(barriers[j].x_max == hi[j]);
    CHECK(barriers[j].rho0 == defaults.rho0);
    CHECK(barriers[j].eta == defaults.eta);
    CHECK(barriers[j].cap == defaults.cap);
  }
}

TEST_CASE("the violation magnitude sums absolute barrier values over the path") {
  const JointLimitBarrier b = unit_barrier();
  std::vector<Vec> path{Vec::Constant(1, 0.05), Vec::Constant(1, 0.5),
                        Vec::Constant(1, 0.95)};
  const double expected =
      std::abs(barrier_min(0.05, b)) + std::abs(barrier_max(0.95, b));
  CHECK(std::abs(barrier_magnitude({b}, path) - expected) <=
        1e-12 * expected);
}
