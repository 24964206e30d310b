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


#include <CLI11.hpp>

#include <iostream>

#include "mdgps/errors.hpp"
#include "mdgps/harness/commands.hpp"
#include "mdgps/log.hpp"

namespace {

constexpr int kExitUsage = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace mdgps;
  using namespace mdgps::harness;

  CLI::App app{"Mirror descent guided policy search experiments"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Run training and write logs and checkpoints");
  std::string config_path;
  TrainOverrides overrides;
  std::uint64_t seed = 0;
  int iterations = 0;
  std::string sampling;
  std::string step_rule;
  double epsilon = 0.0;
  std::string output;
  train->add_option("--config", config_path, "Config file (key = value)")->check(CLI::ExistingFile);
  auto* seed_opt = train->add_option("--seed", seed, "Master seed");
  auto* iter_opt = train->add_option("--iterations", iterations, "Number of iterations")
                       ->check(CLI::PositiveNumber);
  auto* sampling_opt = train->add_option("--sampling", sampling, "Sample source")
                           ->check(CLI::IsMember({"on_policy", "off_policy"}));
  auto* rule_opt = train->add_option("--step-rule", step_rule, "Step-size rule")
                       ->check(CLI::IsMember({"classic", "global"}));
  auto* eps_opt = train->add_option("--epsilon", epsilon, "Initial KL step size")
                      ->check(CLI::PositiveNumber);
  auto* out_opt = train->add_option("--output", output, "Output directory");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a policy checkpoint");
  EvalArgs eval_args;
  eval->add_option("checkpoint", eval_args.checkpoint, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--env", eval_args.env, "Environment (default: the checkpoint's)");
  eval->add_option("--rollouts", eval_args.rollouts, "Rollouts per condition");
  eval->add_option("--seed", eval_args.seed, "Seed");
  eval->add_option("--output", eval_args.output, "JSON summary path");

  // table
  auto* table = app.add_subcommand("table", "Success rates at iterations 3, 6, 9 and 12");
  std::vector<std::string> run_dirs;
  table->add_option("runs", run_dirs, "Run directories")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
      if (*seed_opt) overrides.seed = seed;
      if (*iter_opt) overrides.iterations = iterations;
      if (*sampling_opt) overrides.sampling = parse_sampling_mode(sampling);
      if (*rule_opt) overrides.step_rule = parse_step_rule(step_rule);
      if (*eps_opt) overrides.epsilon = epsilon;
      if (*out_opt) overrides.output = output;
      return cmd_train(resolve_config(std::move(config), overrides), std::cout);
    }
    if (*eval) return cmd_eval(eval_args, std::cout);
    if (*table) return cmd_table(run_dirs, std::cout);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
