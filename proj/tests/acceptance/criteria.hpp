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

#include <functional>
#include <string>
#include <vector>

namespace mdgps::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id = 0;
  std::string name;
  std::function<Outcome()> run;
};

/// Exact-identity and oracle-equivalence checks (1 to 4 and 6 to 8).
Outcome kl_identity();
Outcome marginal_propagation();
Outcome lqr_riccati_oracle();
Outcome c_step_constraint();
Outcome tabular_bounds();
Outcome step_rules();
Outcome s_step_oracle();

/// Training-loop checks (5 and 9 to 11).
Outcome linear_quadratic_monotone();
Outcome point_mass_trend();
Outcome blind_reacher_improvement();
Outcome training_determinism();

std::vector<Criterion> all_criteria();

/// Directory holding the shipped configs; MDGPS_CONFIG_DIR overrides the
/// build-time default.
std::string config_dir();
/// Fresh scratch directory for training runs.
std::string scratch_dir(const std::string& name);

}  // namespace mdgps::acceptance
