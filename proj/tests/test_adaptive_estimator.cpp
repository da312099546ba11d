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
#include <string>

#include "optadapt/adaptive_estimator.hpp"
#include "optadapt/chain_model.hpp"
#include "optadapt/errors.hpp"
#include "optadapt/scenario.hpp"
#include "optadapt/types.hpp"
#include "support/test_helpers.hpp"

using namespace optadapt;
using optadapt::testing::data_path;
using optadapt::testing::make_integrator;
using optadapt::testing::TestRng;

namespace {

AdaptiveState fresh_state(int n, double dt = 1.0) {
  AdaptiveState s;
  s.gamma = Vec::Ones(n);
  s.dt = dt;
  s.error_prev = Vec::Zero(n);
  s.error_integral = Vec::Zero(n);
  return s;
}

}  // namespace

TEST_CASE("zero error with clean history shapes to exactly zero") {
  const auto out = lambda_fn(fresh_state(3), Vec::Zero(3));
  CHECK(out.value.cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.next.error_integral.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("unit error on the first unit-dt step shapes to three") {
  // error 1 with zero previous error and zero integral: the cube, the
  // derivative term, and the (freshly accumulated) integral term each
  // contribute exactly 1.
  AdaptiveState s = fresh_state(1, 1.0);
  Vec e(1);
  e << 1.0;
  const auto out = lambda_fn(s, e);
  CHECK(std::abs(out.value[0] - 3.0) <= 1e-12);
  CHECK(std::abs(out.next.error_integral[0] - 1.0) <= 1e-12);
  CHECK(std::abs(out.next.error_prev[0] - 1.0) <= 1e-12);
}

TEST_CASE("negating the whole error history negates the shaped output") {
  TestRng rng(8);
  AdaptiveState pos = fresh_state(2, 0.01);
  AdaptiveState neg = pos;
  for (int step = 0; step < 50; ++step) {
    const Vec e = rng.vector(2, 0.5);
    const auto a = lambda_fn(pos, e);
    const auto b = lambda_fn(neg, Vec(-e));
    pos = a.next;
    neg = b.next;
    CHECK((a.value + b.value).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("at the goal with clean history the torque is the gravity term alone") {
  AdaptiveState s = fresh_state(3);
  const Vec x = Vec::Constant(3, 0.7);
  Vec gravity(3);
  gravity << 0.3, -0.2, 1.0;
  const auto out = adaptive_torque(s, x, x, gravity);
  CHECK((out.value - gravity).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero gain passes the gravity term through for any error") {
  AdaptiveState s = fresh_state(2);
  s.gamma = Vec::Zero(2);
  Vec x(2), goal(2), gravity(2);
  x << 0.1, -0.4;
  goal << 1.2, 0.9;
  gravity << -0.5, 0.25;
  const auto out = adaptive_torque(s, x, goal, gravity);
  CHECK((out.value - gravity).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scalar gain, shaped error, and gravity combine linearly") {
  // gain 2 on a shaped value of 3 plus gravity 0.5 gives 6.5.
  AdaptiveState s = fresh_state(1, 1.0);
  s.gamma[0] = 2.0;
  Vec x(1), goal(1), gravity(1);
  x << 0.0;
  goal << 1.0;
  gravity << 0.5;
  const auto out = adaptive_torque(s, x, goal, gravity);
  CHECK(std::abs(out.value[0] - 6.5) <= 1e-12);
}

TEST_CASE("starting at the goal is a fixed point of the estimator rollout") {
  const ChainModel m = make_integrator(3);
  const Vec x0 = Vec::Constant(3, 0.25);
  const InitialPath path = estimate_path(m, x0, x0, 50, Vec::Ones(3), m.dt);
  REQUIRE(path.x_des.size() == 51);
  REQUIRE(path.u_des.size() == 50);
  for (const Vec& x : path.x_des) CHECK((x - x0).cwiseAbs().maxCoeff() == 0.0);
  for (const Vec& u : path.u_des) CHECK(u.cwiseAbs().maxCoeff() == 0.0);
  for (const Vec& t : path.tau) CHECK(t.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zeroing the input matrix freezes the state regardless of the law") {
  ChainModel m = make_integrator(1);
  m.B = Mat::Zero(1, 1);
  m.G = Mat::Zero(1, 1);  // consistent zero-velocity output map
  Vec x0(1), goal(1);
  x0 << 0.2;
  goal << 1.5;
  const InitialPath path = estimate_path(m, x0, goal, 100, Vec::Ones(1), m.dt);
  for (const Vec& x : path.x_des) CHECK(x[0] == 0.2);
  // The law keeps pushing (nonzero outputs) but nothing moves.
  CHECK(path.tau.front().cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("reference gains steer the seven-joint arm near the goal in five seconds") {
  const Scenario scn = load_scenario_file(data_path("scenarios/fig2_goal.json"));
  const Vec q_goal = scenario_goal_configuration(scn);
  const InitialPath path =
      estimate_path(scn.model, scn.start, q_goal, scn.steps(), scn.gamma, scn.dt);
  REQUIRE(path.x_des.size() == 5001);
  CHECK((path.x_des.back() - q_goal).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("the estimator rollout is bit-identical across runs") {
  const ChainModel m = make_integrator(4);
  TestRng rng(11);
  const Vec x0 = rng.vector(4, 1.0);
  const Vec goal = rng.vector(4, 1.0);
  const Vec gamma = Vec::Constant(4, 1.2);
  const InitialPath a = estimate_path(m, x0, goal, 500, gamma, m.dt);
  const InitialPath b = estimate_path(m, x0, goal, 500, gamma, m.dt);
  REQUIRE(a.x_des.size() == b.x_des.size());
  for (std::size_t i = 0; i < a.x_des.size(); ++i) {
    CHECK(a.x_des[i] == b.x_des[i]);
  }
  for (std::size_t i = 0; i < a.u_des.size(); ++i) {
    CHECK(a.u_des[i] == b.u_des[i]);
    CHECK(a.tau[i] == b.tau[i]);
  }
}

TEST_CASE("mirroring start and goal mirrors the whole estimated path") {
  const ChainModel m = make_integrator(2);
  Vec x0(2), goal(2);
  x0 << 0.1, -0.3;
  goal << 0.8, 0.4;
  const Vec c = Vec::Constant(2, 0.15);  // mirror point
  const Vec gamma = Vec::Constant(2, 1.5);
  const InitialPath fwd = estimate_path(m, x0, goal, 2000, gamma, m.dt);
  const InitialPath mir =
      estimate_path(m, Vec(2.0 * c - x0), Vec(2.0 * c - goal), 2000, gamma, m.dt);
  for (std::size_t i = 0; i < fwd.x_des.size(); ++i) {
    CHECK((fwd.x_des[i] + mir.x_des[i] - 2.0 * c).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("an unstable gain reports divergence naming the offending step") {
  const ChainModel m = make_integrator(2);
  Vec x0(2), goal(2);
  x0 << 0.0, 0.0;
  goal << 1.0, 1.0;
  // Far beyond any stable gain for this error scale.
  const Vec gamma = Vec::Constant(2, 1e7);
  try {
    estimate_path(m, x0, goal, 5000, gamma, m.dt);
    FAIL("expected the divergence error");
  } catch (const SolverDivergenceError& err) {
    CHECK(std::string(err.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("settled rollouts keep their final torques near the gravity term") {
  const ChainModel m = make_integrator(1);
  Vec x0(1), goal(1);
  x0 << 0.0;
  goal << 0.5;
  const Vec gamma = Vec::Constant(1, 1.2);
  const InitialPath path = estimate_path(m, x0, goal, 5000, gamma, m.dt);
  const double terminal_error =
      (path.x_des.back() - goal).cwiseAbs().maxCoeff();
  REQUIRE(terminal_error < 1e-3);
  // Massless chain: gravity is zero, so late torques are bounded by the
  // shaped residual, which the terminal error bounds via its largest term.
  double residual_bound = 0.0;
  for (std::size_t i = path.x_des.size() - 101; i < path.x_des.size(); ++i) {
    residual_bound = std::max(
        residual_bound, (path.x_des[i] - goal).cwiseAbs().maxCoeff());
  }
  const double integral_cap = 10.0;
  const double law_bound =
      gamma[0] * (std::pow(residual_bound, 3) +
                  residual_bound * integral_cap * integral_cap +
                  residual_bound);  // derivative term is tiny when settled
  for (std::size_t i = path.tau.size() - 100; i < path.tau.size(); ++i) {
    CHECK(path.tau[i].cwiseAbs().maxCoeff() <= law_bound + 1e-12);
  }
}

TEST_CASE("every emitted quantity is finite when no divergence is reported") {
  const ChainModel m = make_integrator(3);
  TestRng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec x0 = rng.vector(3, 0.5);
    const Vec goal = rng.vector(3, 0.5);
    const InitialPath path =
        estimate_path(m, x0, goal, 1000, Vec::Constant(3, 2.0), m.dt);
    for (const Vec& x : path.x_des) CHECK(x.allFinite());
    for (const Vec& u : path.u_des) CHECK(u.allFinite());
    for (const Vec& t : path.tau) CHECK(t.allFinite());
  }
}
