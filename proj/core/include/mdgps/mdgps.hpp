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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdgps/bounds.hpp"
#include "mdgps/envs.hpp"
#include "mdgps/fitting.hpp"
#include "mdgps/gmm.hpp"
#include "mdgps/lqr.hpp"
#include "mdgps/policy.hpp"
#include "mdgps/step_size.hpp"

namespace mdgps {

/// Which policy generates the iteration's samples.
enum class SamplingMode { kOnPolicy, kOffPolicy };
enum class StepRule { kClassic, kGlobal };

std::string to_string(SamplingMode mode);
std::string to_string(StepRule rule);
SamplingMode parse_sampling_mode(const std::string& text);
StepRule parse_step_rule(const std::string& text);
std::string to_string(DegenerateStep response);
DegenerateStep parse_degenerate_step(const std::string& text);

struct MdgpsOptions {
  SamplingMode sampling = SamplingMode::kOffPolicy;
  StepRule step_rule = StepRule::kClassic;
  double initial_epsilon = 1.0;
  StepClamps clamps;
  /// When false, epsilon stays at initial_epsilon.
  bool adjust_step = true;
  int samples_per_condition = 5;
  /// Rollouts per condition used to evaluate the local and global policies.
  int eval_rollouts_per_condition = 5;
  GmmOptions dynamics_gmm;
  GmmOptions policy_gmm;
  /// The dynamics prior is fit on at most buffer_factor * T points per condition.
  int buffer_factor = 20;
  FitOptions fit;
  PolicyFitTarget policy_fit_target = PolicyFitTarget::kPolicyMean;
  DualOptions dual;
  SgdConfig sgd;
  /// Exact linear-Gaussian dynamics on [x; u]. When set, dynamics are not fit,
  /// the cost is expanded around the analytic mean trajectory, and an affine
  /// global policy is linearized and projected exactly (closed-form S-step on
  /// sigma points of the local state marginals).
  std::optional<LinGaussStep> exact_dynamics;
  std::uint64_t seed = 0;
};

/// Expected total costs of one condition. Naming follows StepCosts:
/// l_<dynamics iteration>_<policy iteration>[_pi].
struct ConditionCosts {
  double prev_prev = 0.0;     // l_{k-1}^{k-1}
  double prev_prev_pi = 0.0;  // l_{k-1}^{k-1,pi}
  double prev_cur = 0.0;      // l_{k-1}^{k}
  double prev_cur_pi = 0.0;   // l_{k-1}^{k,pi}
  double cur_cur = 0.0;       // l_k^k
  double cur_cur_pi = 0.0;    // l_k^{k,pi}
};

struct ConditionRecord {
  /// Step size used by this iteration's C-step.
  double epsilon = 0.0;
  double eta = 0.0;
  double achieved_kl = 0.0;
  bool dual_converged = false;
  bool step_degenerate = false;
  ConditionCosts costs;
  BoundReport bound;
};

struct IterationRecord {
  int iteration = 0;  // 1-based
  std::vector<ConditionRecord> conditions;
  /// Mean total cost of the samples that drove this iteration.
  double sample_return = 0.0;
  /// Mean total cost of the updated local controllers (stochastic).
  double local_return = 0.0;
  /// Mean total cost, success rate and final distance of the updated global
  /// policy acting with its mean.
  double global_return = 0.0;
  double global_success = 0.0;
  double global_final_distance = 0.0;
  /// Final distance of the samples that drove this iteration.
  double sample_final_distance = 0.0;
  double s_step_loss = 0.0;
  /// Largest bound epsilon over conditions and steps, and the mean cost bound.
  double bound_max_epsilon = 0.0;
  double bound_cost = 0.0;
  double wall_seconds = 0.0;

  /// Throws InvalidInput if a cost estimate is non-finite or a condition is missing.
  void validate(int num_conditions) const;
};

/// Per-condition quantities carried between iterations.
struct ConditionState {
  TimeVaryingLinGauss local;
  double epsilon = 1.0;
  double eta = 1.0;
  /// Joint rows [x; u; x'] of the previous iteration's samples, pooled with
  /// the current ones for the dynamics prior.
  Mat prev_rows;
  /// Previous iteration's fitted models, for the step-size quantities.
  std::optional<TimeVaryingLinGauss> prev_dynamics;
  std::optional<TimeVaryingLinGauss> prev_pi_bar;
  std::optional<TimeVaryingLinGauss> prev_local;
  std::optional<QuadraticCostExpansion> prev_cost;
};

struct MdgpsState {
  int iteration = 0;  // completed iterations
  GlobalPolicy policy;
  std::vector<ConditionState> conditions;
};

/// Local controllers start at the global policy's linearization (its mean map
/// with its covariance); epsilon at options.initial_epsilon.
MdgpsState initialize(const Env& env, const GlobalPolicy& policy, const MdgpsOptions& options);

/// One iteration: sample, fit dynamics and the global linearization, adjust
/// the step sizes, C-step per condition, S-step, evaluate.
IterationRecord run_iteration(const Env& env, MdgpsState& state, const MdgpsOptions& options);

/// Time-invariant conditional equivalent of an affine policy over `horizon` steps.
TimeVaryingLinGauss affine_policy_controller(const GlobalPolicy& policy, int horizon);

/// Analytic expected total cost of a controller under linear-Gaussian dynamics,
/// with the cost expanded along the controller's own mean trajectory.
double analytic_cost(const Env& env, const TimeVaryingLinGauss& controller,
                     const TimeVaryingLinGauss& dynamics, int condition);

/// 2d sigma points m +- sqrt(d) L e_i of N(m, S) with S = L L'; their sample
/// mean and (biased) covariance equal m and S exactly.
std::vector<Vec> sigma_points(const Vec& mean, const Mat& cov);

}  // namespace mdgps
