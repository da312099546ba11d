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
// Constrained linear-quadratic plan refinement.
//
// Around a nominal pair (x_des, u_des) the quadratic tracking cost is
// expanded in deviation variables (dx, du) and the active joint-limit rows
// are enforced through a per-step decomposition
//
//   du_i = du_i^c + N_i du_i^m ,   du_i^c = Gamma_i dx_i + Theta_i ,
//
// where du^c is the minimum-norm input satisfying the next step's equality
// rows and N_i spans their input nullspace. Substituting the decomposition
// reparametrizes the problem in du^m, which a Riccati backward pass solves
// exactly; the refined input follows u <- u + s * du with a backtracking
// step scale s.

#ifndef OPTADAPT_LQ_OPTIMIZER_HPP_
#define OPTADAPT_LQ_OPTIMIZER_HPP_

#include <string>
#include <vector>

#include "optadapt/adaptive_estimator.hpp"
#include "optadapt/chain_model.hpp"
#include "optadapt/constraint_fields.hpp"
#include "optadapt/types.hpp"

namespace optadapt {

// ---------------------------------------------------------------------------
// Numerics shared by the solver: Moore-Penrose pseudoinverse and an
// orthonormal nullspace basis, both via SVD with singular values below
// rel_tol * sigma_max treated as zero.
// ---------------------------------------------------------------------------

Mat pseudoinverse(const Mat& M, double rel_tol = 1e-10);

// Orthonormal basis of ker(M) as columns (cols(M) x nullity). For a matrix
// with zero rows, returns the identity.
Mat nullspace_basis(const Mat& M, double rel_tol = 1e-10);

// ---------------------------------------------------------------------------
// Problem definition and its quadratic expansion.
// ---------------------------------------------------------------------------

// Quadratic tracking problem around a goal configuration:
//   running  f_i(x, u) = 1/2 (x-g)' Wx (x-g) + 1/2 u' Wu u + u' Wc (x-g)
//   terminal phi(x_N)  = 1/2 (x-g)' Wt (x-g) + qt' (x-g)
struct ProblemSpec {
  Mat W_state;     // n x n, PSD
  Mat W_input;     // m x m, PD
  Mat W_cross;     // m x n (zero for pure tracking)
  Mat W_terminal;  // n x n, PSD
  Vec q_terminal;  // n, linear terminal term (usually zero)
  Vec x_goal;      // n
  Vec x0;          // n
  int horizon = 0;  // N, > 0
  double dt = 1e-3;
};

// Exact second-order expansion of the cost about one nominal step plus the
// linear dynamics (A, B) and the nominal-consistency defect
//   c_i = A x_des[i] + B u_des[i] - x_des[i+1]
// (zero whenever the nominal is its own rollout).
struct StepCoefficients {
  double o = 0.0;  // cost at the nominal
  Vec q;           // n, d cost / d dx
  Vec r;           // m, d cost / d du
  Mat Q;           // n x n
  Mat R;           // m x m
  Mat P;           // m x n, cross term (du' P dx)
  Mat A;           // n x n
  Mat B;           // n x m
  Vec c;           // n, defect
};

struct LQCoefficients {
  std::vector<StepCoefficients> steps;  // N entries
  double o_N = 0.0;                     // terminal cost at the nominal
  Vec q_N;                              // n
  Mat Q_N;                              // n x n
  int n = 0;
  int m = 0;
};

// Expands the cost about (x_des, u_des). Dynamics/defect fields are filled
// separately (set_dynamics) because the expansion is model independent.
LQCoefficients expand_cost(const ProblemSpec& spec,
                           const std::vector<Vec>& x_des,
                           const std::vector<Vec>& u_des);

// Fills A, B and the defects for the given nominal under the model dynamics.
void set_dynamics(LQCoefficients& coeffs, const Mat& A, const Mat& B,
                  const std::vector<Vec>& x_des, const std::vector<Vec>& u_des);

// Exact cost of an absolute trajectory under the spec (used by the merit).
double trajectory_cost(const ProblemSpec& spec, const std::vector<Vec>& x,
                       const std::vector<Vec>& u);

// ---------------------------------------------------------------------------
// Per-step constrained decomposition.
// ---------------------------------------------------------------------------

// For step i with next-step rows [D; C] (stacked S = [D B; C B]):
//   Gamma_i = -S^+ [D A; C A]
//   Theta_i =  S^+ ([e; d] - [D; C] c_i) - S^+ [D A; C A] alpha
//   du_c    =  Gamma_i dx + Theta_i        (minimum-norm particular solution)
//   N_i     =  nullspace_basis(S)          (free directions)
// alpha is the measurement-feedback displacement; zero during planning.
struct ConstrainedComponent {
  Vec du_c;    // m
  Mat Gamma;   // m x n
  Vec Theta;   // m
  Mat Nbasis;  // m x p
  Mat SdagFN;  // m x n, S^+ [D A; C A]  (alpha injection for closed loop)
};

ConstrainedComponent constrained_component(const LinearizedConstraints& lin,
                                           const LQCoefficients& coeffs,
                                           int step, const Vec& dx,
                                           const Vec& alpha);

// ---------------------------------------------------------------------------
// Reparametrization in the nullspace coordinate v = du^m.
// ---------------------------------------------------------------------------

struct TildeStep {
  Mat A;    // n x n,  A + B Gamma
  Mat B;    // n x p,  B N
  Vec k;    // n,      B Theta + c (affine term)
  double o = 0.0;  //  o + Theta' r + 1/2 Theta' R Theta
  Vec q;    // n,      q + Gamma' r + P' Theta + Gamma' R Theta
  Vec r;    // p,      N' (r + R Theta)
  Mat Q;    // n x n,  Q + Gamma' R Gamma + Gamma' P + P' Gamma
  Mat R;    // p x p,  N' R N
  Mat P;    // p x n,  N' (P + R Gamma)
};

TildeStep reparametrize(const StepCoefficients& step, const Mat& Gamma,
                        const Vec& Theta, const Mat& Nbasis);

// ---------------------------------------------------------------------------
// Riccati backward pass over the reparametrized problem.
// ---------------------------------------------------------------------------

// Value function V_i(dx) = 1/2 dx' S_i dx + s_i' dx + const, S symmetrized
// every step. The minimizing policy is
//   v_i = -K_i dx_i + k_i
//   K_i = H^+ (P~ + B~' S_{i+1} A~),  k_i = -H^+ (r~ + B~'(s_{i+1} + S_{i+1} k~)),
//   H   = R~ + B~' S_{i+1} B~   (pseudoinverse; Cholesky fast path when PD).
struct RiccatiState {
  std::vector<Mat> S;  // N+1 matrices, symmetric
  std::vector<Vec> s;  // N+1 vectors
};

struct BackwardPass {
  std::vector<Mat> K;   // N gains, p_i x n
  std::vector<Vec> k;   // N feedforwards, p_i
  RiccatiState value;
};

BackwardPass riccati_backward(const std::vector<TildeStep>& steps,
                              const Mat& Q_N, const Vec& q_N);

// ---------------------------------------------------------------------------
// One inner (Newton) solve and the outer refinement loop.
// ---------------------------------------------------------------------------

// Per-step pieces of the refinement policy, kept for closed-loop execution:
//   du(dx, alpha) = Gamma dx + Theta - SdagFN alpha + N (-K dx + k)
struct StepPolicy {
  Mat Gamma;
  Vec Theta;
  Mat Nbasis;
  Mat K;
  Vec kff;
  Mat SdagFN;
};

// Exact solution of the expanded problem with fixed constraint rows:
// backward pass + forward rollout of the deviation dynamics from dx_0 = 0.
struct InnerSolution {
  std::vector<Vec> du;  // N
  std::vector<Vec> dx;  // N+1
  std::vector<StepPolicy> policy;
  double predicted_cost = 0.0;  // expanded-model cost of the solution
};

InnerSolution solve_inner(const LQCoefficients& coeffs,
                          const LinearizedConstraints& lin);

struct PlanOptions {
  double tolerance = 1e-4;    // rad/s, on the accepted ||du||_inf
  int max_iterations = 20;
  int max_cost_increases = 5; // consecutive accepted damped steps that raise
                              // the tracking cost before declaring divergence
  int line_search_steps = 6;  // scales 1, 1/2, ..., 1/32
  bool clamp_velocity = true;
};

struct PlanResult {
  std::vector<Vec> u_final;      // N inputs, clamped to velocity limits
  std::vector<Vec> x_predicted;  // N+1 states, model rollout of u_final
  std::vector<StepPolicy> policy;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;  // accepted ||du||_inf per iteration
  std::vector<double> cost_history;      // tracking cost after each iteration
  std::vector<double> merit_history;     // cost + barrier magnitude
  std::vector<double> iteration_seconds;
  double planning_seconds = 0.0;
};

// Outer refinement loop: linearize constraints about the current nominal,
// expand the cost, solve the constrained LQ problem exactly, backtrack on
// the step scale (accepting the first scale that does not increase the
// merit = tracking cost + barrier potential), and repeat until the accepted
// ||du||_inf falls below tolerance. When no scale is acceptable the nominal
// is merit-stationary along the step direction: the loop stops and reports
// converged (or a non-converged result if the nominal still sits beyond a
// barrier limit — infeasibility is never an error). Throws
// SolverDivergenceError when the tracking cost rises over max_cost_increases
// consecutive accepted damped steps, i.e. the iterates climb the cost
// surface without settling, or when the value recursion turns non-finite.
PlanResult iterate_plan(const ChainModel& model, const ProblemSpec& spec,
                        const InitialPath& initial,
                        const std::vector<JointLimitBarrier>& barriers,
                        const PlanOptions& options = {});

// Naive tracking seed for the refinement-only baseline: states interpolate
// linearly from x0 to the goal configuration, desired inputs follow the
// model's input-estimation map G. When a clamp box is given (both vectors
// non-empty), every interpolated state after the first is clamped into it,
// so the seed never starts on top of a limit barrier.
InitialPath lqr_initial_path(const ChainModel& model, const ProblemSpec& spec,
                             const Vec& clamp_min = {},
                             const Vec& clamp_max = {});

// CSV export of the refined plan: header "step,t,x0..,u0..", one row per
// step, final state row with zero input cells. Atomic write.
void write_trajectory_csv(const std::string& path,
                          const std::vector<Vec>& x, const std::vector<Vec>& u,
                          double dt);

// Structured refinement summary (iterations, convergence, residual and cost
// history, per-iteration wall seconds). Atomic write.
void write_plan_summary_json(const std::string& path, const PlanResult& plan);

}  // namespace optadapt

#endif  // OPTADAPT_LQ_OPTIMIZER_HPP_
