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
#include <memory>
#include <string>
#include <vector>

#include "mdgps/envs.hpp"
#include "mdgps/mdgps.hpp"
#include "mdgps/policy.hpp"

namespace mdgps::harness {

/// One training experiment. Stored as flat `key = value` text; see
/// configs/defaults.cfg for every key with its default.
struct ExperimentConfig {
  std::string env = "point_mass";
  int conditions = 0;              // 0: every condition the environment defines
  int horizon = 0;                 // 0: environment default
  double noise_std = -1.0;         // negative: environment default
  double success_threshold = -1.0; // negative: environment default
  int samples_per_condition = 5;
  int eval_rollouts = 5;
  int iterations = 12;
  SamplingMode sampling = SamplingMode::kOffPolicy;
  StepRule step_rule = StepRule::kClassic;
  double epsilon = 1.0;
  bool adjust_step = true;
  double clamp_factor = 5.0;
  double epsilon_min = 1e-4;
  double epsilon_max = 10.0;
  DegenerateStep degenerate_step = DegenerateStep::kGrow;
  Architecture architecture = Architecture::kMlp;
  std::vector<int> hidden = {40, 40};
  double init_policy_std = 1.0;
  int sgd_batch = 32;
  int sgd_steps = 2000;
  double sgd_learning_rate = 1e-3;
  double sgd_momentum = 0.9;
  bool sgd_normalize_inputs = true;
  int gmm_components = 4;
  int gmm_iterations = 100;
  int gmm_restarts = 2;
  double gmm_strength = 1.0;
  int buffer_factor = 20;
  bool policy_fit_sampled_actions = false;
  std::uint64_t seed = 1;
  std::string output = "runs/default";
  /// Free-form run label used to group runs in tables; empty means derived.
  std::string label;

  /// Throws InvalidInput naming the offending key.
  void validate() const;
  /// The label, or env/sampling/step_rule when none is set.
  std::string variant_label() const;
};

/// Parses `key = value` lines on top of `base`; '#' starts a comment. Unknown
/// keys and malformed values throw InvalidInput with the line number.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
/// Every key, one per line, in schema order; parse_config inverts it exactly.
std::string serialize_config(const ExperimentConfig& config);
/// Sets one key from its text form.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);
std::vector<std::string> config_keys();

EnvParams env_params(const ExperimentConfig& config);
MdgpsOptions mdgps_options(const ExperimentConfig& config);
/// Initial global policy: zero mean, covariance init_policy_std^2 I, the
/// environment's observation selector.
GlobalPolicy initial_policy(const ExperimentConfig& config, const Env& env);

}  // namespace mdgps::harness
