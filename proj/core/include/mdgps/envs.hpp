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
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mdgps/policy.hpp"
#include "mdgps/random.hpp"
#include "mdgps/samples.hpp"
#include "mdgps/trajdist.hpp"

namespace mdgps {

/// Task-level constants shared by every environment.
struct EnvSpec {
  std::string name;
  int dx = 0;
  int du = 0;
  int horizon = 0;
  double dt = 0.05;
  /// Initial states x_1^i, one per condition.
  std::vector<Vec> initial_states;
  /// Standard deviation of the per-coordinate Gaussian process noise.
  double noise_std = 1e-3;
  /// Standard deviation of the Gaussian perturbation of x_1^i.
  double init_noise_std = 0.0;
  /// State coordinates visible to the global policy.
  std::vector<int> selector;
  /// Final target distance below which a rollout counts as a success.
  double success_threshold = 0.1;

  int num_conditions() const { return static_cast<int>(initial_states.size()); }
};

/// Simulated control task. Implementations are stateless after construction
/// and safe to share between threads.
class Env {
 public:
  virtual ~Env() = default;

  const EnvSpec& spec() const { return spec_; }

  /// Next state for action u and a standard-normal draw `noise` (length dx),
  /// which the environment scales by noise_std. Throws NumericalError on a
  /// non-finite result.
  virtual Vec step(const Vec& x, const Vec& u, const Vec& noise) const = 0;

  /// Stage cost at step t (0-based); t == horizon - 1 is the final step.
  virtual double cost(const Vec& x, const Vec& u, int t) const = 0;

  /// Exact gradient and Hessian of cost at (x, u); l0 is the cost value.
  virtual CostStep cost_expansion(const Vec& x, const Vec& u, int t) const = 0;

  /// Distance between the controlled point and the target.
  virtual double target_distance(const Vec& x) const = 0;

  /// Gaussian N(x_1^i, init_noise_std^2 I) over the first state.
  GaussianState initial_distribution(int condition) const;

 protected:
  explicit Env(EnvSpec spec);
  void check_inputs(const Vec& x, const Vec& u) const;
  Vec check_finite(Vec next, const Vec& x, const Vec& u) const;

  EnvSpec spec_;
};

/// Overrides applied when building an environment by name. Non-positive
/// values keep the environment's default.
struct EnvParams {
  int num_conditions = 0;
  int horizon = 0;
  double noise_std = -1.0;
  double success_threshold = -1.0;
};

/// Known names: point_mass, point_mass_lq (no obstacles), reacher,
/// reacher_blind.
std::unique_ptr<Env> make_env(const std::string& name, const EnvParams& params = {});

std::vector<std::string> env_names();

// ---------------------------------------------------------------------------
// Rollouts

/// Produces u_t from (t, x_t) and the rollout's random stream.
using ActorFn = std::function<Vec(int t, const Vec& x, Rng& rng)>;

/// u ~ N(K_t x + k_t, C_t).
ActorFn local_actor(const TimeVaryingLinGauss& controller);
/// u ~ N(mu(x), Sigma).
ActorFn global_actor(const GlobalPolicy& policy);
/// u = mu(x).
ActorFn global_mean_actor(const GlobalPolicy& policy);

Vec env_step(const Env& env, const Vec& x, const Vec& u, const Vec& noise);

/// Expansion of the cost around every (x_t, u_t) of a trajectory.
QuadraticCostExpansion cost_expand(const Env& env, const std::vector<Vec>& states,
                                   const std::vector<Vec>& actions);

/// One rollout from condition i with its own seed.
Rollout sample_rollout(const Env& env, const ActorFn& actor, int condition, std::uint64_t seed);

/// n_samples rollouts; sample j uses derive_seed(seed, {condition, j}).
std::vector<Rollout> sample_rollouts(const Env& env, const ActorFn& actor, int condition,
                                     int n_samples, std::uint64_t seed);

/// Fraction of rollouts whose final state is within the success threshold.
/// Throws InvalidInput on an empty list.
double success_rate(const Env& env, const std::vector<Rollout>& rollouts);

/// Mean final target distance. Throws InvalidInput on an empty list.
double mean_final_distance(const Env& env, const std::vector<Rollout>& rollouts);

/// Mean state and action trajectories of a sample set.
std::pair<std::vector<Vec>, std::vector<Vec>> mean_trajectory(const SampleSet& samples);

}  // namespace mdgps
