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

#include "optadapt/lq_optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "optadapt/errors.hpp"
#include "optadapt/io.hpp"

namespace optadapt {

namespace {

void check_spec(const ProblemSpec& spec) {
  const auto n = spec.x0.size();
  const auto m = spec.W_input.rows();
  if (n <= 0) throw DimensionError("problem x0 is empty");
  if (spec.horizon <= 0) {
    throw ValidationError("problem horizon must be positive, got " +
                          std::to_string(spec.horizon));
  }
  if (spec.dt <= 0.0) {
    throw ValidationError("problem dt must be positive");
  }
  if (spec.x_goal.size() != n) {
    throw DimensionError("x_goal size does not match x0");
  }
  if (spec.W_state.rows() != n || spec.W_state.cols() != n) {
    throw DimensionError("W_state must be n x n");
  }
  if (m <= 0 || spec.W_input.cols() != m) {
    throw DimensionError("W_input must be square and non-empty");
  }
  if (spec.W_cross.rows() != m || spec.W_cross.cols() != n) {
    throw DimensionError("W_cross must be m x n");
  }
  if (spec.W_terminal.rows() != n || spec.W_terminal.cols() != n) {
    throw DimensionError("W_terminal must be n x n");
  }
  if (spec.q_terminal.size() != n) {
    throw DimensionError("q_terminal size does not match x0");
  }
}

void check_model_dims(const ChainModel& model, int n, int m) {
  if (model.A.rows() != n || model.A.cols() != n || model.B.rows() != n ||
      model.B.cols() != m) {
    throw DimensionError("model dynamics (" + std::to_string(model.A.rows()) +
                         " states, " + std::to_string(model.B.cols()) +
                         " inputs) do not match the problem (" +
                         std::to_string(n) + ", " + std::to_string(m) + ")");
  }
}

// Rollout of the model dynamics from a fixed start state.
std::vector<Vec> rollout(const Mat& A, const Mat& B, const Vec& x0,
                         const std::vector<Vec>& u) {
  std::vector<Vec> x(u.size() + 1);
  x[0] = x0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    x[i + 1] = A * x[i] + B * u[i];
  }
  return x;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

LQCoefficients expand_cost(const ProblemSpec& spec,
                           const std::vector<Vec>& x_des,
                           const std::vector<Vec>& u_des) {
  check_spec(spec);
  const int N = spec.horizon;
  const auto n = spec.x0.size();
  const auto m = spec.W_input.rows();
  if (static_cast<int>(x_des.size()) != N + 1) {
    throw DimensionError("nominal states: expected " + std::to_string(N + 1) +
                         " entries, got " + std::to_string(x_des.size()));
  }
  if (static_cast<int>(u_des.size()) != N) {
    throw DimensionError("nominal inputs: expected " + std::to_string(N) +
                         " entries, got " + std::to_string(u_des.size()));
  }
  LQCoefficients out;
  out.n = static_cast<int>(n);
  out.m = static_cast<int>(m);
  out.steps.resize(N);
  for (int i = 0; i < N; ++i) {
    if (x_des[i].size() != n || u_des[i].size() != m) {
      throw DimensionError("nominal entry " + std::to_string(i) +
                           " has mismatched dimensions");
    }
    const Vec e = x_des[i] - spec.x_goal;
    const Vec& u = u_des[i];
    StepCoefficients& s = out.steps[i];
    s.o = 0.5 * e.dot(spec.W_state * e) + 0.5 * u.dot(spec.W_input * u) +
          u.dot(spec.W_cross * e);
    s.q = spec.W_state * e + spec.W_cross.transpose() * u;
    s.r = spec.W_input * u + spec.W_cross * e;
    s.Q = spec.W_state;
    s.R = spec.W_input;
    s.P = spec.W_cross;
  }
  if (x_des[N].size() != n) {
    throw DimensionError("terminal nominal state has mismatched dimension");
  }
  const Vec e_N = x_des[N] - spec.x_goal;
  out.o_N = 0.5 * e_N.dot(spec.W_terminal * e_N) + spec.q_terminal.dot(e_N);
  out.q_N = spec.W_terminal * e_N + spec.q_terminal;
  out.Q_N = spec.W_terminal;
  return out;
}

void set_dynamics(LQCoefficients& coeffs, const Mat& A, const Mat& B,
                  const std::vector<Vec>& x_des,
                  const std::vector<Vec>& u_des) {
  const int N = static_cast<int>(coeffs.steps.size());
  if (A.rows() != coeffs.n || A.cols() != coeffs.n || B.rows() != coeffs.n ||
      B.cols() != coeffs.m) {
    throw DimensionError("dynamics matrices do not match the expanded cost");
  }
  if (static_cast<int>(x_des.size()) != N + 1 ||
      static_cast<int>(u_des.size()) != N) {
    throw DimensionError("nominal length does not match the expanded cost");
  }
  for (int i = 0; i < N; ++i) {
    StepCoefficients& s = coeffs.steps[i];
    s.A = A;
    s.B = B;
    s.c = A * x_des[i] + B * u_des[i] - x_des[i + 1];
  }
}

double trajectory_cost(const ProblemSpec& spec, const std::vector<Vec>& x,
                       const std::vector<Vec>& u) {
  check_spec(spec);
  if (x.size() != u.size() + 1) {
    throw DimensionError("trajectory needs one more state than inputs");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Vec e = x[i] - spec.x_goal;
    total += 0.5 * e.dot(spec.W_state * e) +
             0.5 * u[i].dot(spec.W_input * u[i]) + u[i].dot(spec.W_cross * e);
  }
  const Vec e_N = x.back() - spec.x_goal;
  total += 0.5 * e_N.dot(spec.W_terminal * e_N) + spec.q_terminal.dot(e_N);
  return total;
}

ConstrainedComponent constrained_component(const LinearizedConstraints& lin,
                                           const LQCoefficients& coeffs,
                                           int step, const Vec& dx,
                                           const Vec& alpha) {
  const int N = static_cast<int>(coeffs.steps.size());
  const int n = coeffs.n;
  const int m = coeffs.m;
  if (step < 0 || step >= N) {
    throw DimensionError("constrained component step " + std::to_string(step) +
                         " out of range [0, " + std::to_string(N) + ")");
  }
  if (static_cast<int>(lin.steps.size()) != N + 1) {
    throw DimensionError("constraint blocks: expected " +
                         std::to_string(N + 1) + " entries, got " +
                         std::to_string(lin.steps.size()));
  }
  if (dx.size() != n || alpha.size() != n) {
    throw DimensionError("dx/alpha size does not match the state dimension");
  }

  // Rows at step+1 constrain the *next* state reached from this step's input;
  // rows attached to step 0 have no input upstream of them and are inert.
  const ConstraintBlock& blk = lin.steps[step + 1];
  const auto rows_d = blk.D.rows();
  const auto rows_c = blk.C.rows();
  const auto rows = rows_d + rows_c;

  ConstrainedComponent out;
  if (rows == 0) {
    out.Gamma = Mat::Zero(m, n);
    out.Theta = Vec::Zero(m);
    out.Nbasis = Mat::Identity(m, m);
    out.SdagFN = Mat::Zero(m, n);
    out.du_c = Vec::Zero(m);
    return out;
  }

  Mat M(rows, n);  // stacked [D; C]
  M.topRows(rows_d) = blk.D;
  M.bottomRows(rows_c) = blk.C;
  Vec rhs(rows);
  rhs.head(rows_d) = blk.e;
  rhs.tail(rows_c) = blk.d;

  const StepCoefficients& sc = coeffs.steps[step];
  const Mat S = M * sc.B;  // rows x m, input sensitivity of the rows
  const Mat F = M * sc.A;  // rows x n, state sensitivity of the rows
  const Mat S_dag = pseudoinverse(S);

  out.SdagFN = S_dag * F;
  out.Gamma = -out.SdagFN;
  out.Theta = S_dag * (rhs - M * sc.c) - out.SdagFN * alpha;
  out.Nbasis = nullspace_basis(S);
  out.du_c = out.Gamma * dx + out.Theta;
  return out;
}

TildeStep reparametrize(const StepCoefficients& step, const Mat& Gamma,
                        const Vec& Theta, const Mat& Nbasis) {
  TildeStep t;
  const Vec R_Theta = step.R * Theta;
  t.A = step.A + step.B * Gamma;
  t.B = step.B * Nbasis;
  t.k = step.B * Theta + step.c;
  t.o = step.o + Theta.dot(step.r) + 0.5 * Theta.dot(R_Theta);
  t.q = step.q + Gamma.transpose() * (step.r + R_Theta) +
        step.P.transpose() * Theta;
  t.r = Nbasis.transpose() * (step.r + R_Theta);
  t.Q = step.Q + Gamma.transpose() * step.R * Gamma +
        Gamma.transpose() * step.P + step.P.transpose() * Gamma;
  t.R = Nbasis.transpose() * step.R * Nbasis;
  t.P = Nbasis.transpose() * (step.P + step.R * Gamma);
  return t;
}

BackwardPass riccati_backward(const std::vector<TildeStep>& steps,
                              const Mat& Q_N, const Vec& q_N) {
  const int N = static_cast<int>(steps.size());
  if (N == 0) throw DimensionError("backward pass needs at least one step");
  const auto n = Q_N.rows();
  if (Q_N.cols() != n || q_N.size() != n) {
    throw DimensionError("terminal cost dimensions disagree");
  }

  BackwardPass bp;
  bp.K.resize(N);
  bp.k.resize(N);
  bp.value.S.resize(N + 1);
  bp.value.s.resize(N + 1);
  bp.value.S[N] = 0.5 * (Q_N + Q_N.transpose());
  bp.value.s[N] = q_N;

  for (int i = N - 1; i >= 0; --i) {
    const TildeStep& t = steps[i];
    const Mat& S_next = bp.value.S[i + 1];
    const Vec& s_next = bp.value.s[i + 1];
    const Vec Sk_s = S_next * t.k + s_next;  // S_{i+1} k~ + s_{i+1}
    const auto p = t.B.cols();

    if (p == 0) {
      // Every input direction is consumed by the equality rows: the value
      // function just propagates through the closed affine dynamics.
      bp.K[i] = Mat::Zero(0, n);
      bp.k[i] = Vec::Zero(0);
      const Mat S_i = t.Q + t.A.transpose() * S_next * t.A;
      bp.value.S[i] = 0.5 * (S_i + S_i.transpose());
      bp.value.s[i] = t.q + t.A.transpose() * Sk_s;
      if (!bp.value.S[i].allFinite() || !bp.value.s[i].allFinite()) {
        throw SolverDivergenceError(
            "backward value recursion became non-finite at step " +
            std::to_string(i));
      }
      continue;
    }

    Mat H = t.R + t.B.transpose() * S_next * t.B;
    H = 0.5 * (H + H.transpose());
    const Mat G = t.P + t.B.transpose() * S_next * t.A;
    const Vec g = t.r + t.B.transpose() * Sk_s;

    Mat K;
    Vec kff;
    Eigen::LLT<Mat> llt(H);
    if (llt.info() == Eigen::Success) {
      K = llt.solve(G);
      kff = -llt.solve(g);
    } else {
      // Semidefinite H (flat directions): minimum-norm stationary policy.
      const Mat H_dag = pseudoinverse(H);
      K = H_dag * G;
      kff = -(H_dag * g);
    }

    const Mat S_i = t.Q + t.A.transpose() * S_next * t.A - G.transpose() * K;
    bp.value.S[i] = 0.5 * (S_i + S_i.transpose());
    bp.value.s[i] = t.q + t.A.transpose() * Sk_s - K.transpose() * g;
    bp.K[i] = std::move(K);
    bp.k[i] = std::move(kff);
    if (!bp.value.S[i].allFinite() || !bp.value.s[i].allFinite()) {
      throw SolverDivergenceError(
          "backward value recursion became non-finite at step " +
          std::to_string(i));
    }
  }
  return bp;
}

InnerSolution solve_inner(const LQCoefficients& coeffs,
                          const LinearizedConstraints& lin) {
  const int N = static_cast<int>(coeffs.steps.size());
  if (N == 0) throw DimensionError("inner solve needs at least one step");
  const int n = coeffs.n;
  if (static_cast<int>(lin.steps.size()) != N + 1) {
    throw DimensionError("constraint blocks: expected " +
                         std::to_string(N + 1) + " entries, got " +
                         std::to_string(lin.steps.size()));
  }

  const Vec zero_state = Vec::Zero(n);
  std::vector<ConstrainedComponent> comp(N);
  std::vector<TildeStep> tilde(N);
  for (int i = 0; i < N; ++i) {
    comp[i] = constrained_component(lin, coeffs, i, zero_state, zero_state);
    tilde[i] = reparametrize(coeffs.steps[i], comp[i].Gamma, comp[i].Theta,
                             comp[i].Nbasis);
  }
  const BackwardPass bp = riccati_backward(tilde, coeffs.Q_N, coeffs.q_N);

  InnerSolution sol;
  sol.du.resize(N);
  sol.dx.resize(N + 1);
  sol.policy.resize(N);
  sol.dx[0] = Vec::Zero(n);
  for (int i = 0; i < N; ++i) {
    const StepCoefficients& s = coeffs.steps[i];
    const Vec v = bp.k[i] - bp.K[i] * sol.dx[i];
    sol.du[i] = comp[i].Gamma * sol.dx[i] + comp[i].Theta + comp[i].Nbasis * v;
    sol.dx[i + 1] = s.A * sol.dx[i] + s.B * sol.du[i] + s.c;
    StepPolicy& pol = sol.policy[i];
    pol.Gamma = std::move(comp[i].Gamma);
    pol.Theta = std::move(comp[i].Theta);
    pol.Nbasis = std::move(comp[i].Nbasis);
    pol.K = bp.K[i];
    pol.kff = bp.k[i];
    pol.SdagFN = std::move(comp[i].SdagFN);
  }

  double cost = coeffs.o_N + coeffs.q_N.dot(sol.dx[N]) +
                0.5 * sol.dx[N].dot(coeffs.Q_N * sol.dx[N]);
  for (int i = 0; i < N; ++i) {
    const StepCoefficients& s = coeffs.steps[i];
    cost += s.o + s.q.dot(sol.dx[i]) + s.r.dot(sol.du[i]) +
            0.5 * sol.dx[i].dot(s.Q * sol.dx[i]) +
            0.5 * sol.du[i].dot(s.R * sol.du[i]) +
            sol.du[i].dot(s.P * sol.dx[i]);
  }
  sol.predicted_cost = cost;
  return sol;
}

namespace {

// True when any state of the sequence lies beyond a barrier's hard limit
// (i.e. on the saturated side of the potential).
bool violates_barrier_limits(const std::vector<JointLimitBarrier>& barriers,
                             const std::vector<Vec>& x) {
  for (const JointLimitBarrier& b : barriers) {
    for (const Vec& xi : x) {
      const double v = xi[b.joint_index];
      if (v < b.x_min || v > b.x_max) return true;
    }
  }
  return false;
}

}  // namespace

PlanResult iterate_plan(const ChainModel& model, const ProblemSpec& spec,
                        const InitialPath& initial,
                        const std::vector<JointLimitBarrier>& barriers,
                        const PlanOptions& options) {
  check_spec(spec);
  const int N = spec.horizon;
  const int n = static_cast<int>(spec.x0.size());
  const int m = static_cast<int>(spec.W_input.rows());
  check_model_dims(model, n, m);
  if (static_cast<int>(initial.x_des.size()) != N + 1 ||
      static_cast<int>(initial.u_des.size()) != N) {
    throw DimensionError("initial path length does not match the horizon");
  }
  if ((initial.x_des[0] - spec.x0).lpNorm<Eigen::Infinity>() > 1e-9) {
    throw ValidationError("initial path does not start at the problem's x0");
  }
  if (std::abs(initial.dt - spec.dt) > 1e-12) {
    throw ValidationError("initial path dt does not match the problem dt");
  }
  if (options.tolerance <= 0.0 || options.max_iterations <= 0 ||
      options.max_cost_increases <= 0 || options.line_search_steps <= 0) {
    throw ValidationError("plan options must all be positive");
  }

  const auto t_start = std::chrono::steady_clock::now();
  std::vector<Vec> x_nom = initial.x_des;
  std::vector<Vec> u_nom = initial.u_des;

  PlanResult out;
  std::vector<StepPolicy> policy;
  int cost_increase_streak = 0;
  double previous_cost = std::numeric_limits<double>::infinity();
  bool converged = false;

  for (int iter = 0; iter < options.max_iterations && !converged; ++iter) {
    const auto t_iter = std::chrono::steady_clock::now();

    // Linearize the active barriers and expand the cost about the current
    // nominal. On the first pass the nominal is the supplied initial path,
    // which need not be a rollout of its own inputs; the per-step defect c_i
    // absorbs the mismatch. Accepted iterates are rollouts, so from the
    // second pass on the defects vanish.
    const LinearizedConstraints lin = linearize_constraints(barriers, x_nom);
    LQCoefficients coeffs = expand_cost(spec, x_nom, u_nom);
    set_dynamics(coeffs, model.A, model.B, x_nom, u_nom);
    InnerSolution inner = solve_inner(coeffs, lin);

    // The acceptance baseline must be an achievable pair: the supplied
    // nominal may pair a desired state path with inputs that do not generate
    // it, and such a pair's cost is not attainable by any rollout. Accepted
    // iterates are rollouts, so from the second iteration this recomputation
    // reproduces x_nom exactly.
    const std::vector<Vec> x_base = rollout(model.A, model.B, spec.x0, u_nom);
    const double merit_nom = trajectory_cost(spec, x_base, u_nom) +
                             barrier_magnitude(barriers, x_base);
    double du_max = 0.0;
    for (const Vec& du : inner.du) {
      du_max = std::max(du_max, du.lpNorm<Eigen::Infinity>());
    }

    // Backtracking on the step scale: accept the first scale whose merit
    // does not exceed the current nominal's.
    bool accepted = false;
    double accepted_scale = 1.0;
    double accepted_merit = 0.0;
    std::vector<Vec> best_x;
    std::vector<Vec> best_u;
    double scale = 1.0;
    for (int ls = 0; ls < options.line_search_steps; ++ls, scale *= 0.5) {
      std::vector<Vec> trial_u(N);
      for (int i = 0; i < N; ++i) trial_u[i] = u_nom[i] + scale * inner.du[i];
      std::vector<Vec> trial_x = rollout(model.A, model.B, spec.x0, trial_u);
      const double merit_trial = trajectory_cost(spec, trial_x, trial_u) +
                                 barrier_magnitude(barriers, trial_x);
      if (merit_trial <= merit_nom) {
        accepted = true;
        accepted_scale = scale;
        accepted_merit = merit_trial;
        best_x = std::move(trial_x);
        best_u = std::move(trial_u);
        break;
      }
    }

    out.iteration_seconds.push_back(seconds_since(t_iter));
    ++out.iterations;

    if (!accepted) {
      // No scale of the Newton direction lowers the merit: the nominal is
      // stationary where the tracking pull balances the barrier push. That
      // is the answer — unless the path still sits beyond a limit, which
      // means the search is stuck on a saturated plateau it cannot descend.
      converged = !violates_barrier_limits(barriers, x_base);
      break;
    }

    x_nom = std::move(best_x);
    u_nom = std::move(best_u);
    policy = std::move(inner.policy);
    const double residual = accepted_scale * du_max;
    const double cost = trajectory_cost(spec, x_nom, u_nom);
    // A damped step may trade tracking cost for barrier relief; a long run
    // of such steps means the iterates climb the cost surface unboundedly.
    if (accepted_scale < 1.0 && cost > previous_cost * (1.0 + 1e-12)) {
      if (++cost_increase_streak >= options.max_cost_increases) {
        throw SolverDivergenceError(
            "plan refinement diverged: tracking cost rose over " +
            std::to_string(cost_increase_streak) +
            " consecutive damped steps (cost " + format_double(cost) + ")");
      }
    } else {
      cost_increase_streak = 0;
    }
    previous_cost = cost;
    out.residual_history.push_back(residual);
    out.cost_history.push_back(cost);
    out.merit_history.push_back(accepted_merit);
    converged = residual <= options.tolerance;
  }

  out.converged = converged;
  out.policy = std::move(policy);
  out.u_final = std::move(u_nom);
  if (options.clamp_velocity && m == model.n) {
    // Inputs are joint velocities whenever the input dimension matches the
    // joint count; clamp them to the per-joint limits.
    const Vec v_max = model.velocity_limits();
    for (Vec& u : out.u_final) {
      u = u.cwiseMax(-v_max).cwiseMin(v_max);
    }
  }
  out.x_predicted = rollout(model.A, model.B, spec.x0, out.u_final);
  out.planning_seconds = seconds_since(t_start);
  return out;
}

InitialPath lqr_initial_path(const ChainModel& model, const ProblemSpec& spec,
                             const Vec& clamp_min, const Vec& clamp_max) {
  check_spec(spec);
  const int N = spec.horizon;
  const int n = static_cast<int>(spec.x0.size());
  const int m = static_cast<int>(spec.W_input.rows());
  check_model_dims(model, n, m);
  const bool clamp = clamp_min.size() > 0 && clamp_max.size() > 0;
  if (clamp && (clamp_min.size() != n || clamp_max.size() != n)) {
    throw DimensionError("seed clamp box size does not match the state size");
  }

  // Straight-line interpolation toward the goal; the i = 0 point must stay
  // exactly at x0 so the expansion starts where the rollout starts.
  InitialPath path;
  path.dt = spec.dt;
  path.x_des.resize(N + 1);
  path.x_des[0] = spec.x0;
  for (int i = 1; i <= N; ++i) {
    Vec x = spec.x0 + (static_cast<double>(i) / N) * (spec.x_goal - spec.x0);
    if (clamp) x = x.cwiseMax(clamp_min).cwiseMin(clamp_max);
    path.x_des[i] = std::move(x);
  }
  path.u_des.resize(N);
  for (int i = 0; i < N; ++i) path.u_des[i] = model.G * path.x_des[i];
  path.tau = path.u_des;
  return path;
}

void write_trajectory_csv(const std::string& path, const std::vector<Vec>& x,
                          const std::vector<Vec>& u, double dt) {
  if (x.size() != u.size() + 1) {
    throw DimensionError("trajectory needs one more state than inputs");
  }
  const auto n = x[0].size();
  const auto m = u.empty() ? 0 : u[0].size();
  std::vector<std::string> cells;
  cells.reserve(2 + n + m);
  cells.push_back("step");
  cells.push_back("t");
  for (int j = 0; j < n; ++j) cells.push_back("x" + std::to_string(j));
  for (int j = 0; j < m; ++j) cells.push_back("u" + std::to_string(j));
  std::string body = csv_row(cells);

  for (std::size_t i = 0; i < x.size(); ++i) {
    cells.clear();
    cells.push_back(std::to_string(i));
    cells.push_back(format_double(static_cast<double>(i) * dt));
    for (int j = 0; j < n; ++j) cells.push_back(format_double(x[i](j)));
    for (int j = 0; j < m; ++j) {
      cells.push_back(format_double(i < u.size() ? u[i](j) : 0.0));
    }
    body += csv_row(cells);
  }
  atomic_write_file(path, body);
}

void write_plan_summary_json(const std::string& path, const PlanResult& plan) {
  nlohmann::json j;
  j["schema"] = "optadapt.plan_summary/1";
  j["steps"] = plan.u_final.size();
  j["iterations"] = plan.iterations;
  j["converged"] = plan.converged;
  j["residual_history"] = plan.residual_history;
  j["cost_history"] = plan.cost_history;
  j["merit_history"] = plan.merit_history;
  j["iteration_seconds"] = plan.iteration_seconds;
  j["planning_seconds"] = plan.planning_seconds;
  atomic_write_file(path, j.dump(2) + "\n");
}

}  // namespace optadapt
