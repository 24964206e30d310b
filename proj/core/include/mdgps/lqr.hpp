/*
 Copyright 2026 The MDGPS Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <vector>

#include "mdgps/trajdist.hpp"

namespace mdgps {

/// Q-function and value function of one backward step, in absolute
/// coordinates: Q(x,u) = 0.5 [x;u]' Q [x;u] + [qx;qu]'[x;u] + q0 and
/// V(x) = 0.5 x' Vxx x + vx' x + v0.
struct QFunctionStep {
  Mat qxx;
  Mat quu;  // after regularization
  Mat qux;
  Vec qx;
  Vec qu;
  double q0 = 0.0;
  Mat vxx;
  Vec vx;
  double v0 = 0.0;
  double regularization = 0.0;  // mu added to Quu, 0 if none
};

struct QFunction {
  std::vector<QFunctionStep> steps;
  /// Number of steps whose Quu needed regularization.
  int regularized_steps = 0;
};

struct LqrOptions {
  double initial_regularization = 1e-6;
  double max_regularization = 1e10;
  /// Value Hessian norm above which the recursion counts as divergent.
  double divergence_threshold = 1e12;
};

struct BackwardResult {
  TimeVaryingLinGauss controller;
  QFunction q;
};

/// Builds (1/eta) l(x,u) - log pi_bar(u|x) as a quadratic expansion around the
/// same points as `cost`. Throws InvalidInput if eta <= 0.
QuadraticCostExpansion surrogate_expand(const QuadraticCostExpansion& cost,
                                        const TimeVaryingLinGauss& pi_bar, double eta);

/// Maximum-entropy LQR: minimizes sum_t E[l(x_t,u_t)] - H(p(u_t|x_t)) under
/// linear-Gaussian dynamics. Returns p(u|x) = N(Kx + k, Quu^{-1}).
///
/// Quu is used as is when its Cholesky factorization succeeds; otherwise
/// mu I is added with mu doubling from 1e-6 until it does. Throws
/// NumericalError naming the step if the value Hessian norm exceeds the
/// divergence threshold.
BackwardResult maxent_lqr_backward(const TimeVaryingLinGauss& dyn,
                                   const QuadraticCostExpansion& cost,
                                   const LqrOptions& options = {});

struct DualOptions {
  /// Acceptance band: |kl - epsilon| <= kl_tolerance * epsilon.
  double kl_tolerance = 0.05;
  /// The search keeps bisecting until this tighter band is reached (or the
  /// iteration budget runs out).
  double target_tolerance = 1e-3;
  double bracket_lo = 1e-4;
  double bracket_hi = 1e4;
  double eta_min = 1e-8;
  double eta_max = 1e16;
  double expand_factor = 10.0;
  int max_iterations = 50;
  LqrOptions lqr;
};

struct DualCandidate {
  double eta = 0.0;
  double kl = 0.0;
  /// False if the backward pass diverged at this eta (treated as kl = +inf).
  bool valid = true;
};

struct DualState {
  double epsilon = 0.0;
  double eta = 0.0;
  double eta_lo = 0.0;
  double eta_hi = 0.0;
  std::vector<DualCandidate> trace;
  /// |kl - epsilon| within the acceptance band.
  bool converged = false;
  /// Constraint inactive even at eta_min; the unconstrained-side solution is returned.
  bool slack = false;
  /// Iteration budget exhausted; the best feasible candidate is returned.
  bool exhausted = false;
};

struct CStepResult {
  TimeVaryingLinGauss controller;
  double achieved_kl = 0.0;
  DualState dual;
  QFunction q;
};

/// KL-constrained local policy update against the linearized global policy:
/// argmin_p E_p[sum l] s.t. KL(p(tau) || pi_bar(tau)) <= epsilon, solved by a
/// bracketing bisection on log(eta) of the surrogate LQR problem.
/// `warm_eta` seeds the bracket.
CStepResult c_step(const TimeVaryingLinGauss& dyn, const QuadraticCostExpansion& cost,
                   const TimeVaryingLinGauss& pi_bar, double epsilon, const GaussianState& init,
                   double warm_eta = 1.0, const DualOptions& options = {});

}  // namespace mdgps
