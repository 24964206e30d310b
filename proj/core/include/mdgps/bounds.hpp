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

#include "mdgps/policy.hpp"
#include "mdgps/samples.hpp"
#include "mdgps/trajdist.hpp"

namespace mdgps {

/// Cost-bound diagnostics of a global policy against a local controller.
///
/// epsilon[t] is the largest KL(p(.|x) || pi(.|x)) over the sampled states of
/// step t. It is an empirical quantity: a lower bound on the maximum over all
/// states. Total variation is reported as the raw L1 distance ||p - q||_1;
/// half of it is the other common convention.
struct BoundReport {
  std::vector<double> epsilon;
  /// 2 sum_{t' <= t} sqrt(2 epsilon[t']).
  std::vector<double> tv_bound;
  /// Largest sampled stage cost (at least 0).
  std::vector<double> max_cost;
  /// sum_{t' >= t} max_cost[t'].
  std::vector<double> q_max;
  /// Expected stage cost of the local controller.
  std::vector<double> expected_local_cost;
  /// sum_t E_p[l_t] + sqrt(2 eps_t) max_cost[t] + 2 sqrt(2 eps_t) q_max[t].
  double cost_bound = 0.0;
  /// Monte-Carlo total cost of the global policy, if the caller supplied one.
  double global_cost_estimate = 0.0;

  double max_epsilon() const;
};

/// Cumulative bound 2 sum_{t' <= t} sqrt(2 eps_t') for every t.
std::vector<double> tv_bound(const std::vector<double>& epsilon);

/// Right-hand side of the cost bound from per-step expected local costs,
/// maximal stage costs and epsilons (all of equal length).
double cost_bound_rhs(const std::vector<double>& expected_local_cost,
                      const std::vector<double>& max_cost, const std::vector<double>& epsilon,
                      std::vector<double>* q_max = nullptr);

/// Throws InvalidInput for empty samples or a horizon mismatch.
BoundReport compute_bound(const TimeVaryingLinGauss& local, const GlobalPolicy& policy,
                          const SampleSet& samples, const std::vector<double>& expected_local_cost);

// ---------------------------------------------------------------------------
// Finite MDPs, used to check the bounds exactly.

/// Finite-horizon MDP with time-invariant transitions and nonnegative costs.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  int horizon = 0;
  Vec initial;                          // distribution over states
  std::vector<Mat> transition;          // per action: P[a](s, s')
  std::vector<Mat> cost;                // per step: c[t](s, a) >= 0

  void validate() const;
};

/// Per step: pi[t](s, a) = probability of action a in state s.
using TabularPolicy = std::vector<Mat>;

/// State marginals for t = 0..horizon-1 by forward recursion.
std::vector<Vec> tabular_state_marginals(const TabularMdp& mdp, const TabularPolicy& policy);

/// Expected stage costs under the policy.
std::vector<double> tabular_expected_cost(const TabularMdp& mdp, const TabularPolicy& policy);

/// Per step max over states of KL(p(.|s) || q(.|s)).
std::vector<double> tabular_max_kl(const TabularPolicy& p, const TabularPolicy& q);

/// Per step max over (s, a) of the cost.
std::vector<double> tabular_max_cost(const TabularMdp& mdp);

/// Bound on the expected total cost of q built from p's expected costs and the
/// per-step max KL of p against q.
double tabular_cost_bound(const TabularMdp& mdp, const TabularPolicy& p, const TabularPolicy& q);

}  // namespace mdgps
