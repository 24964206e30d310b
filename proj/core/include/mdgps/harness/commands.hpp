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
#include <ostream>
#include <string>
#include <vector>

#include "mdgps/harness/config.hpp"

namespace mdgps::harness {

/// Command-line values that take precedence over the config file.
struct TrainOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::optional<SamplingMode> sampling;
  std::optional<StepRule> step_rule;
  std::optional<double> epsilon;
  std::optional<std::string> output;
};

/// Applies the overrides and validates the result.
ExperimentConfig resolve_config(ExperimentConfig config, const TrainOverrides& overrides);

/// Runs training and writes into config.output: config.cfg (resolved),
/// runlog.csv, checkpoints/iter_<k>.json per iteration and summary.json.
/// Returns 0 on success and 1 after a mid-run failure (logs written so far are kept).
int cmd_train(const ExperimentConfig& config, std::ostream& out);

struct EvalArgs {
  std::string checkpoint;
  /// Empty: the environment stored in the checkpoint.
  std::string env;
  int rollouts = 5;
  std::uint64_t seed = 1;
  /// Optional JSON output path.
  std::string output;
};

struct EvalSummary {
  std::string env;
  int rollouts = 0;
  double mean_return = 0.0;
  double mean_final_distance = 0.0;
  double min_final_distance = 0.0;
  double max_final_distance = 0.0;
  double success_rate = 0.0;
};

/// Mean-action rollouts of a stored policy: `rollouts` per condition. Throws
/// InvalidInput for rollouts <= 0 or an incompatible checkpoint.
EvalSummary evaluate_checkpoint(const EvalArgs& args);
int cmd_eval(const EvalArgs& args, std::ostream& out);

inline const std::vector<int> kTableIterations = {3, 6, 9, 12};

struct TableRow {
  std::string label;
  int runs = 0;
  /// Mean global success rate per column; empty when no run reached it.
  std::vector<std::optional<double>> cells;
};

/// Groups runs by their label and averages global success over runs that
/// reached each iteration in kTableIterations.
std::vector<TableRow> success_table(const std::vector<std::string>& run_dirs);
std::string format_table(const std::vector<TableRow>& rows);
int cmd_table(const std::vector<std::string>& run_dirs, std::ostream& out);

}  // namespace mdgps::harness
