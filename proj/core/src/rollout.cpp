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


#include <fmt/format.h>

#include "mdgps/envs.hpp"
#include "mdgps/errors.hpp"

namespace mdgps {

ActorFn local_actor(const TimeVaryingLinGauss& controller) {
  return [controller](int t, const Vec& x, Rng& rng) -> Vec {
    const Vec z = standard_normal(rng, controller.out_dim());
    return controller.mean(t, x) + controller.chol(t) * z;
  };
}

ActorFn global_actor(const GlobalPolicy& policy) {
  return [policy](int, const Vec& x, Rng& rng) -> Vec {
    const Vec z = standard_normal(rng, policy.action_dim());
    return policy.mean(x) + policy.cov_chol() * z;
  };
}

ActorFn global_mean_actor(const GlobalPolicy& policy) {
  return [policy](int, const Vec& x, Rng&) -> Vec { return policy.mean(x); };
}

Vec env_step(const Env& env, const Vec& x, const Vec& u, const Vec& noise) {
  return env.step(x, u, noise);
}

QuadraticCostExpansion cost_expand(const Env& env, const std::vector<Vec>& states,
                                   const std::vector<Vec>& actions) {
  const int horizon = env.spec().horizon;
  if (static_cast<int>(states.size()) != horizon || static_cast<int>(actions.size()) != horizon) {
    throw InvalidInput(fmt::format("cost_expand: trajectory length {} / {} differs from horizon {}",
                                   states.size(), actions.size(), horizon));
  }
  QuadraticCostExpansion out;
  out.steps.reserve(horizon);
  for (int t = 0; t < horizon; ++t) out.steps.push_back(env.cost_expansion(states[t], actions[t], t));
  return out;
}

Rollout sample_rollout(const Env& env, const ActorFn& actor, int condition, std::uint64_t seed) {
  const EnvSpec& spec = env.spec();
  if (condition < 0 || condition >= spec.num_conditions()) {
    throw InvalidInput(fmt::format("sample_rollout: condition {} out of range", condition));
  }
  Rng rng(seed);
  Rollout r;
  r.condition = condition;
  r.noise_seed = seed;
  r.states.reserve(spec.horizon);
  r.actions.reserve(spec.horizon);
  r.costs.reserve(spec.horizon);
  Vec x = spec.initial_states[condition] + spec.init_noise_std * standard_normal(rng, spec.dx);
  for (int t = 0; t < spec.horizon; ++t) {
    Vec u = actor(t, x, rng);
    if (u.size() != spec.du) {
      throw InvalidInput(fmt::format("sample_rollout: actor returned {} actions, expected {}",
                                     u.size(), spec.du));
    }
    const double c = env.cost(x, u, t);
    r.total_cost += c;
    r.costs.push_back(c);
    const Vec noise = standard_normal(rng, spec.dx);
    Vec next = env.step(x, u, noise);
    r.states.push_back(std::move(x));
    r.actions.push_back(std::move(u));
    x = std::move(next);
  }
  return r;
}

std::vector<Rollout> sample_rollouts(const Env& env, const ActorFn& actor, int condition,
                                     int n_samples, std::uint64_t seed) {
  if (n_samples <= 0) throw InvalidInput("sample_rollouts: n_samples must be positive");
  std::vector<Rollout> out;
  out.reserve(n_samples);
  for (int j = 0; j < n_samples; ++j) {
    out.push_back(sample_rollout(env, actor, condition,
                                 derive_seed(seed, {static_cast<std::uint64_t>(condition),
                                                    static_cast<std::uint64_t>(j)})));
  }
  return out;
}

double success_rate(const Env& env, const std::vector<Rollout>& rollouts) {
  if (rollouts.empty()) throw InvalidInput("success_rate: no rollouts");
  int hits = 0;
  for (const auto& r : rollouts) {
    if (r.states.empty()) throw InvalidInput("success_rate: empty rollout");
    if (env.target_distance(r.states.back()) < env.spec().success_threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rollouts.size());
}

double mean_final_distance(const Env& env, const std::vector<Rollout>& rollouts) {
  if (rollouts.empty()) throw InvalidInput("mean_final_distance: no rollouts");
  double sum = 0.0;
  for (const auto& r : rollouts) {
    if (r.states.empty()) throw InvalidInput("mean_final_distance: empty rollout");
    sum += env.target_distance(r.states.back());
  }
  return sum / static_cast<double>(rollouts.size());
}

std::pair<std::vector<Vec>, std::vector<Vec>> mean_trajectory(const SampleSet& samples) {
  samples.validate();
  const int horizon = samples.horizon();
  std::vector<Vec> xs(horizon, Vec::Zero(samples.dx()));
  std::vector<Vec> us(horizon, Vec::Zero(samples.du()));
  for (const auto& r : samples.rollouts) {
    for (int t = 0; t < horizon; ++t) {
      xs[t] += r.states[t];
      us[t] += r.actions[t];
    }
  }
  const double n = samples.size();
  for (int t = 0; t < horizon; ++t) {
    xs[t] /= n;
    us[t] /= n;
  }
  return {xs, us};
}

}  // namespace mdgps
