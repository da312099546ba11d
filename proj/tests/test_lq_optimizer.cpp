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

#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "optadapt/adaptive_estimator.hpp"
#include "optadapt/chain_model.hpp"
#include "optadapt/constraint_fields.hpp"
#include "optadapt/errors.hpp"
#include "optadapt/lq_optimizer.hpp"
#include "optadapt/scenario.hpp"
#include "optadapt/types.hpp"
#include "support/kkt_oracle.hpp"
#include "support/test_helpers.hpp"

using namespace optadapt;
using optadapt::testing::data_path;
using optadapt::testing::kkt_solve;
using optadapt::testing::make_integrator;
using optadapt::testing::random_instance;
using optadapt::testing::RandomInstance;
using optadapt::testing::TestRng;

namespace {

// A pure tracking problem on an n-joint integrator chain.
ProblemSpec tracking_spec(int n, const Vec& x0, const Vec& goal, int horizon,
                          double dt) {
  ProblemSpec spec;
  spec.W_state = Mat::Identity(n, n);
  spec.W_input = Mat::Identity(n, n);
  spec.W_cross = Mat::Zero(n, n);
  spec.W_terminal = 100.0 * Mat::Identity(n, n);
  spec.q_terminal = Vec::Zero(n);
  spec.x_goal = goal;
  spec.x0 = x0;
  spec.horizon = horizon;
  spec.dt = dt;
  return spec;
}

// Straight-line nominal with zero inputs (deliberately inconsistent with
// the dynamics, so the defects are exercised).
InitialPath line_path(const Vec& x0, const Vec& goal, int horizon, double dt) {
  InitialPath path;
  path.dt = dt;
  for (int i = 0; i <= horizon; ++i) {
    const double a = static_cast<double>(i) / horizon;
    path.x_des.push_back((1.0 - a) * x0 + a * goal);
  }
  path.u_des.assign(horizon, Vec::Zero(x0.size()));
  path.tau.assign(horizon, Vec::Zero(x0.size()));
  return path;
}

LinearizedConstraints no_rows(int steps, int n) {
  LinearizedConstraints lin;
  lin.steps.assign(steps + 1, ConstraintBlock{});
  for (auto& blk : lin.steps) {
    blk.D = Mat::Zero(0, n);
    blk.e = Vec::Zero(0);
    blk.C = Mat::Zero(0, n);
    blk.d = Vec::Zero(0);
  }
  lin.total_rows = 0;
  return lin;
}

double entrywise_gap(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double gap = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (Eigen::Index j = 0; j < a[i].size(); ++j) {
      gap = std::max(gap, std::abs(a[i][j] - b[i][j]) /
                              std::max(1.0, std::abs(b[i][j])));
    }
  }
  return gap;
}

}  // namespace

TEST_CASE("expanding about a nominal resting at the goal zeroes the linear terms") {
  const int n = 2, N = 5;
  TestRng rng(5);
  const Vec goal = rng.vector(n);
  ProblemSpec spec = tracking_spec(n, goal, goal, N, 0.01);
  const std::vector<Vec> x_des(N + 1, goal);
  const std::vector<Vec> u_des(N, Vec::Zero(n));
  const LQCoefficients coeffs = expand_cost(spec, x_des, u_des);
  REQUIRE(coeffs.steps.size() == N);
  for (const StepCoefficients& s : coeffs.steps) {
    CHECK(s.q.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(s.r.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((s.Q - spec.W_state).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((s.R - spec.W_input).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(s.o) <= 1e-12);
  }
  CHECK(coeffs.q_N.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("without a cross weight the expansion carries no cross blocks") {
  const int n = 3, N = 4;
  TestRng rng(6);
  ProblemSpec spec = tracking_spec(n, rng.vector(n), rng.vector(n), N, 0.01);
  std::vector<Vec> x_des, u_des;
  for (int i = 0; i <= N; ++i) x_des.push_back(rng.vector(n));
  for (int i = 0; i < N; ++i) u_des.push_back(rng.vector(n));
  const LQCoefficients coeffs = expand_cost(spec, x_des, u_des);
  for (const StepCoefficients& s : coeffs.steps) {
    CHECK(s.P.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("a scalar state weight turns a nominal offset into a proportional gradient") {
  const int N = 3;
  ProblemSpec spec = tracking_spec(1, Vec::Zero(1), Vec::Zero(1), N, 0.01);
  const double w = 2.5, delta = 0.3;
  spec.W_state = Mat::Constant(1, 1, w);
  const std::vector<Vec> x_des(N + 1, Vec::Constant(1, delta));
  const std::vector<Vec> u_des(N, Vec::Zero(1));
  const LQCoefficients coeffs = expand_cost(spec, x_des, u_des);
  for (const StepCoefficients& s : coeffs.steps) {
    CHECK(std::abs(s.q[0] - w * delta) <= 1e-12);
  }
}

TEST_CASE("with no active rows the constrained component is inert") {
  TestRng rng(31);
  RandomInstance inst = random_instance(rng, 2, 2, 4, /*with_rows=*/false);
  const Vec dx = rng.vector(2, 0.5);
  const ConstrainedComponent cc =
      constrained_component(inst.lin, inst.coeffs, 1, dx, Vec::Zero(2));
  CHECK(cc.du_c.cwiseAbs().maxCoeff() == 0.0);
  CHECK(cc.Gamma.cwiseAbs().maxCoeff() == 0.0);
  CHECK(cc.Theta.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(cc.Nbasis.rows() == 2);
  REQUIRE(cc.Nbasis.cols() == 2);
  CHECK((cc.Nbasis - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(cc.SdagFN.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a single scalar row resolves to its projected right-hand side") {
  // Scalar chain with A = B = 1, one lower-side row with coefficient 1 and
  // right-hand side 0.3 at the next step, zero defect. At zero state
  // deviation the constrained input is 0.3; at deviation 0.1 the dynamics
  // feed-through subtracts it, giving 0.2 — and the propagated constraint
  // value equals the right-hand side exactly.
  LQCoefficients coeffs;
  coeffs.n = 1;
  coeffs.m = 1;
  StepCoefficients s;
  s.o = 0.0;
  s.q = Vec::Zero(1);
  s.r = Vec::Zero(1);
  s.Q = Mat::Identity(1, 1);
  s.R = Mat::Identity(1, 1);
  s.P = Mat::Zero(1, 1);
  s.A = Mat::Identity(1, 1);
  s.B = Mat::Identity(1, 1);
  s.c = Vec::Zero(1);
  coeffs.steps = {s, s};
  coeffs.Q_N = Mat::Identity(1, 1);
  coeffs.q_N = Vec::Zero(1);

  LinearizedConstraints lin = no_rows(2, 1);
  lin.steps[1].D = Mat::Constant(1, 1, 1.0);
  lin.steps[1].e = Vec::Constant(1, 0.3);
  lin.total_rows = 1;

  const ConstrainedComponent at_zero =
      constrained_component(lin, coeffs, 0, Vec::Zero(1), Vec::Zero(1));
  CHECK(std::abs(at_zero.du_c[0] - 0.3) <= 1e-12);
  CHECK(at_zero.Nbasis.cols() == 0);

  const Vec dx = Vec::Constant(1, 0.1);
  const ConstrainedComponent shifted =
      constrained_component(lin, coeffs, 0, dx, Vec::Zero(1));
  CHECK(std::abs(shifted.du_c[0] - 0.2) <= 1e-12);
  // D (A dx + B du) = e reproduced by the resolved input.
  const double propagated = 1.0 * (dx[0] + shifted.du_c[0]);
  CHECK(std::abs(propagated - 0.3) <= 1e-12);
}

TEST_CASE("reparametrizing with inert constraint data returns the original problem") {
  TestRng rng(32);
  const int n = 3, m = 2;
  StepCoefficients s;
  s.o = 0.7;
  s.q = rng.vector(n);
  s.r = rng.vector(m);
  s.Q = rng.psd(n);
  s.R = rng.pd(m);
  s.P = rng.matrix(m, n, 0.1);
  s.A = rng.matrix(n, n);
  s.B = rng.matrix(n, m);
  s.c = Vec::Zero(n);
  const TildeStep t = reparametrize(s, Mat::Zero(m, n), Vec::Zero(m),
                                    Mat::Identity(m, m));
  CHECK((t.A - s.A).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((t.B - s.B).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(t.k.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(t.o - s.o) <= 1e-12);
  CHECK((t.q - s.q).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((t.r - s.r).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((t.Q - s.Q).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((t.R - s.R).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((t.P - s.P).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("a pinned offset with identity input weight shifts the constant cost by its half square") {
  TestRng rng(33);
  const int n = 2, m = 2;
  StepCoefficients s;
  s.o = 1.25;
  s.q = rng.vector(n);
  s.r = Vec::Zero(m);
  s.Q = rng.psd(n);
  s.R = Mat::Identity(m, m);
  s.P = Mat::Zero(m, n);
  s.A = rng.matrix(n, n);
  s.B = rng.matrix(n, m);
  s.c = Vec::Zero(n);
  const Vec theta = rng.vector(m);
  const TildeStep t =
      reparametrize(s, Mat::Zero(m, n), theta, Mat::Identity(m, m));
  CHECK(std::abs(t.o - (s.o + 0.5 * theta.squaredNorm())) <= 1e-12);
}

TEST_CASE("a fully constrained step reparametrizes to zero-size input blocks") {
  TestRng rng(34);
  const int n = 2, m = 2;
  StepCoefficients s;
  s.q = rng.vector(n);
  s.r = rng.vector(m);
  s.Q = rng.psd(n);
  s.R = rng.pd(m);
  s.P = rng.matrix(m, n, 0.1);
  s.A = rng.matrix(n, n);
  s.B = rng.matrix(n, m);
  s.c = Vec::Zero(n);
  const Mat empty_basis(m, 0);
  const TildeStep t = reparametrize(s, rng.matrix(m, n, 0.1), rng.vector(m),
                                    empty_basis);
  CHECK(t.B.cols() == 0);
  CHECK(t.R.rows() == 0);
  CHECK(t.R.cols() == 0);
  CHECK(t.r.size() == 0);
  CHECK(t.P.rows() == 0);
}

TEST_CASE("with no free inputs the value recursion propagates the state cost alone") {
  TestRng rng(35);
  const int n = 2, N = 4;
  std::vector<TildeStep> steps(N);
  for (TildeStep& t : steps) {
    t.A = rng.matrix(n, n, 0.6);
    t.B = Mat::Zero(n, 0);
    t.k = Vec::Zero(n);
    t.o = 0.0;
    t.q = rng.vector(n, 0.3);
    t.r = Vec::Zero(0);
    t.Q = rng.psd(n);
    t.R = Mat::Zero(0, 0);
    t.P = Mat::Zero(0, n);
  }
  const Mat Q_N = rng.psd(n);
  const Vec q_N = rng.vector(n, 0.3);
  const BackwardPass bp = riccati_backward(steps, Q_N, q_N);
  REQUIRE(bp.K.size() == N);
  for (const Mat& K : bp.K) CHECK(K.rows() == 0);
  // Hand recursion: S_i = Q_i + A' S_{i+1} A, s_i = q_i + A' s_{i+1}.
  Mat S = Q_N;
  Vec sv = q_N;
  for (int i = N - 1; i >= 0; --i) {
    S = steps[i].Q + steps[i].A.transpose() * S * steps[i].A;
    sv = steps[i].q + steps[i].A.transpose() * sv;
    CHECK((bp.value.S[i] - S).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((bp.value.s[i] - sv).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("the scalar one-step gain splits the terminal pressure in half") {
  TildeStep t;
  t.A = Mat::Identity(1, 1);
  t.B = Mat::Identity(1, 1);
  t.k = Vec::Zero(1);
  t.o = 0.0;
  t.q = Vec::Zero(1);
  t.r = Vec::Zero(1);
  t.Q = Mat::Identity(1, 1);
  t.R = Mat::Identity(1, 1);
  t.P = Mat::Zero(1, 1);
  const BackwardPass bp =
      riccati_backward({t}, Mat::Identity(1, 1), Vec::Zero(1));
  REQUIRE(bp.K.size() == 1);
  CHECK(std::abs(bp.K[0](0, 0) - 0.5) <= 1e-12);
  CHECK(std::abs(bp.k[0][0]) <= 1e-12);
  CHECK(std::abs(bp.value.S[1](0, 0) - 1.0) <= 1e-12);
  CHECK(std::abs(bp.value.S[0](0, 0) - 1.5) <= 1e-12);
}

TEST_CASE("the recursive solution matches the dense stacked solve with active rows") {
  TestRng rng(2718);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = rng.uniform_int(1, 3);
    const int m = rng.uniform_int(1, 3);
    const int N = rng.uniform_int(3, 8);
    RandomInstance inst = random_instance(rng, n, m, N, /*with_rows=*/true);
    const InnerSolution sol = solve_inner(inst.coeffs, inst.lin);
    const auto oracle = kkt_solve(inst.coeffs, inst.lin);
    REQUIRE(sol.du.size() == oracle.du.size());
    CHECK(entrywise_gap(sol.du, oracle.du) <= 1e-6);
    CHECK(entrywise_gap(sol.dx, oracle.dx) <= 1e-6);
  }
}

TEST_CASE("the recursive solution matches the dense stacked solve without rows") {
  TestRng rng(6283);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = rng.uniform_int(1, 3);
    const int m = rng.uniform_int(1, 3);
    const int N = rng.uniform_int(3, 8);
    RandomInstance inst = random_instance(rng, n, m, N, /*with_rows=*/false);
    const InnerSolution sol = solve_inner(inst.coeffs, inst.lin);
    const auto oracle = kkt_solve(inst.coeffs, inst.lin);
    CHECK(entrywise_gap(sol.du, oracle.du) <= 1e-6);
  }
}

TEST_CASE("one refinement pass of an exact quadratic lands on the stacked optimum") {
  const int n = 2, N = 30;
  Vec x0(n), goal(n);
  x0 << 0.1, -0.2;
  goal << 0.6, 0.4;
  const ChainModel model = make_integrator(n, 0.01);
  ProblemSpec spec = tracking_spec(n, x0, goal, N, 0.01);
  const InitialPath initial = line_path(x0, goal, N, 0.01);

  // Reference: stacked dense solve of the same expansion.
  LQCoefficients coeffs = expand_cost(spec, initial.x_des, initial.u_des);
  set_dynamics(coeffs, model.A, model.B, initial.x_des, initial.u_des);
  const auto oracle = kkt_solve(coeffs, no_rows(N, n));

  const PlanResult plan = iterate_plan(model, spec, initial, {});
  CHECK(plan.converged);
  CHECK(plan.iterations <= 2);
  REQUIRE(plan.u_final.size() == static_cast<std::size_t>(N));
  // Base inputs are zero, so the refined inputs are the correction itself.
  CHECK(entrywise_gap(plan.u_final, oracle.du) <= 1e-6);
}

TEST_CASE("refinement rejects a nominal that does not start at the initial state") {
  const int n = 2, N = 10;
  const ChainModel model = make_integrator(n, 0.01);
  ProblemSpec spec = tracking_spec(n, Vec::Zero(n), Vec::Ones(n), N, 0.01);
  InitialPath initial = line_path(Vec::Constant(n, 0.5), Vec::Ones(n), N, 0.01);
  CHECK_THROWS_AS(iterate_plan(model, spec, initial, {}), ValidationError);
}

TEST_CASE("refinement rejects a nominal rolled out at a different step size") {
  const int n = 2, N = 10;
  const ChainModel model = make_integrator(n, 0.01);
  ProblemSpec spec = tracking_spec(n, Vec::Zero(n), Vec::Ones(n), N, 0.01);
  InitialPath initial = line_path(Vec::Zero(n), Vec::Ones(n), N, 0.02);
  CHECK_THROWS_AS(iterate_plan(model, spec, initial, {}), ValidationError);
}

TEST_CASE("a barrier on one joint keeps the whole refined path inside its band") {
  const int n = 2, N = 200;
  const double dt = 0.01;
  Vec x0(n), goal(n);
  x0 << 0.0, 0.0;
  goal << 0.3, 0.2;  // joint 0 wants to travel far beyond its band
  const ChainModel model = make_integrator(n, dt);
  ProblemSpec spec = tracking_spec(n, x0, goal, N, dt);

  JointLimitBarrier band;
  band.joint_index = 0;
  band.x_min = -0.1;
  band.x_max = 0.1;
  const InitialPath initial = line_path(x0, goal, N, dt);
  const PlanResult plan = iterate_plan(model, spec, initial, {band});
  for (const Vec& x : plan.x_predicted) {
    CHECK(x[0] >= band.x_min - 1e-9);
    CHECK(x[0] <= band.x_max + 1e-9);
  }
  // The unconstrained joint still makes real progress toward its goal.
  CHECK(std::abs(plan.x_predicted.back()[1] - goal[1]) <= 0.05);
}

TEST_CASE("accepted iterations never raise the merit on an unconstrained problem") {
  TestRng rng(55);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 2, N = 40;
    const Vec x0 = rng.vector(n, 0.5);
    const Vec goal = rng.vector(n, 0.5);
    const ChainModel model = make_integrator(n, 0.01);
    ProblemSpec spec = tracking_spec(n, x0, goal, N, 0.01);
    spec.W_terminal = rng.pd(n, 3.0, 1.0);
    const InitialPath initial = line_path(x0, goal, N, 0.01);
    const PlanResult plan = iterate_plan(model, spec, initial, {});
    for (std::size_t i = 1; i < plan.merit_history.size(); ++i) {
      CHECK(plan.merit_history[i] <=
            plan.merit_history[i - 1] +
                1e-12 * std::max(1.0, plan.merit_history[i - 1]));
    }
  }
}

TEST_CASE("the value matrices stay symmetric positive semidefinite") {
  TestRng rng(56);
  RandomInstance inst = random_instance(rng, 3, 2, 8, /*with_rows=*/true);
  std::vector<TildeStep> tilde;
  for (int i = 0; i < 8; ++i) {
    const ConstrainedComponent cc = constrained_component(
        inst.lin, inst.coeffs, i, Vec::Zero(3), Vec::Zero(3));
    tilde.push_back(
        reparametrize(inst.coeffs.steps[i], cc.Gamma, cc.Theta, cc.Nbasis));
  }
  const BackwardPass bp =
      riccati_backward(tilde, inst.coeffs.Q_N, inst.coeffs.q_N);
  for (const Mat& S : bp.value.S) {
    CHECK((S - S.transpose()).cwiseAbs().maxCoeff() <= 1e-9);
    Eigen::SelfAdjointEigenSolver<Mat> eig(S);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
  }
}

TEST_CASE("any free-direction input still satisfies the propagated rows exactly") {
  TestRng rng(57);
  int checked = 0;
  while (checked < 100) {
    const int n = rng.uniform_int(2, 3);
    const int m = rng.uniform_int(2, 3);
    RandomInstance inst = random_instance(rng, n, m, 6, /*with_rows=*/true);
    for (StepCoefficients& s : inst.coeffs.steps) s.c = Vec::Zero(n);
    for (int step = 0; step < 6; ++step) {
      const ConstraintBlock& blk = inst.lin.steps[step + 1];
      const int rows = static_cast<int>(blk.D.rows() + blk.C.rows());
      if (rows == 0) continue;
      const Vec dx = rng.vector(n, 0.5);
      const ConstrainedComponent cc =
          constrained_component(inst.lin, inst.coeffs, step, dx, Vec::Zero(n));
      const Vec free = cc.Nbasis.cols() > 0
                           ? Vec(cc.Nbasis * rng.vector(
                                                 static_cast<int>(cc.Nbasis.cols()),
                                                 2.0))
                           : Vec(Vec::Zero(m));
      const Vec du = cc.du_c + free;
      const Vec next = inst.coeffs.steps[step].A * dx +
                       inst.coeffs.steps[step].B * du;
      if (blk.D.rows() > 0) {
        CHECK((blk.D * next - blk.e).cwiseAbs().maxCoeff() <= 1e-8);
      }
      if (blk.C.rows() > 0) {
        CHECK((blk.C * next - blk.d).cwiseAbs().maxCoeff() <= 1e-8);
      }
      ++checked;
    }
  }
}

TEST_CASE("the full-horizon arm plan converges within the iteration budget") {
  const Scenario scn = load_scenario_file(data_path("scenarios/fig2_goal.json"));
  const Vec q_goal = scenario_goal_configuration(scn);
  const InitialPath seed =
      estimate_path(scn.model, scn.start, q_goal, scn.steps(), scn.gamma, scn.dt);
  const ProblemSpec spec = make_problem_spec(scn, scn.start, q_goal);
  const PlanResult plan = iterate_plan(scn.model, spec, seed, scn.barriers);
  CHECK(plan.converged);
  CHECK(plan.iterations <= 20);
  REQUIRE(plan.x_predicted.size() == 5001);
  // The refined plan lands the end effector on the goal position.
  const Vec3 ee =
      forward_kinematics(scn.model, plan.x_predicted.back()).position;
  CHECK((ee - scn.goal).norm() <= 0.1);
}
