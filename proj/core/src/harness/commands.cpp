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


#include "mdgps/harness/commands.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include "mdgps/errors.hpp"
#include "mdgps/harness/checkpoint.hpp"
#include "mdgps/harness/runlog.hpp"
#include "mdgps/log.hpp"

namespace mdgps::harness {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentConfig resolve_config(ExperimentConfig config, const TrainOverrides& o) {
  if (o.seed) config.seed = *o.seed;
  if (o.iterations) config.iterations = *o.iterations;
  if (o.sampling) config.sampling = *o.sampling;
  if (o.step_rule) config.step_rule = *o.step_rule;
  if (o.epsilon) config.epsilon = *o.epsilon;
  if (o.output) config.output = *o.output;
  config.validate();
  return config;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InvalidInput(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

}  // namespace

int cmd_train(const ExperimentConfig& config, std::ostream& out) {
  config.validate();
  const fs::path dir(config.output);
  fs::create_directories(dir / "checkpoints");
  write_text(dir / "config.cfg", serialize_config(config));

  const auto env = make_env(config.env, env_params(config));
  const MdgpsOptions options = mdgps_options(config);
  MdgpsState state = initialize(*env, initial_policy(config, *env), options);
  const int n_cond = env->spec().num_conditions();

  RunLogWriter log((dir / "runlog.csv").string(),
                   {{"env", config.env},
                    {"sampling", to_string(config.sampling)},
                    {"step_rule", to_string(config.step_rule)},
                    {"seed", fmt::format("{}", config.seed)},
                    {"conditions", fmt::format("{}", n_cond)},
                    {"label", config.variant_label()}},
                   n_cond);

  json summary = {{"env", config.env},
                  {"label", config.variant_label()},
                  {"sampling", to_string(config.sampling)},
                  {"step_rule", to_string(config.step_rule)},
                  {"seed", config.seed},
                  {"iterations_requested", config.iterations}};
  json eps_trace = json::array();
  int status = 0;
  try {
    for (int k = 1; k <= config.iterations; ++k) {
      const IterationRecord rec = run_iteration(*env, state, options);
      log.append(rec);
      save_checkpoint((dir / "checkpoints" / fmt::format("iter_{:03d}.json", k)).string(),
                      Checkpoint{state.policy, config.env, k});
      std::vector<double> eps;
      for (const auto& c : rec.conditions) eps.push_back(c.epsilon);
      eps_trace.push_back(eps);
      summary["final_success_rate"] = rec.global_success;
      summary["final_mean_return"] = rec.global_return;
      summary["final_mean_distance"] = rec.global_final_distance;
      out << fmt::format("iteration {:3d}  global return {:10.4f}  success {:.3f}  distance {:.4f}\n",
                         k, rec.global_return, rec.global_success, rec.global_final_distance);
    }
    summary["status"] = "completed";
  } catch (const std::exception& e) {
    logger().error("training failed: {}", e.what());
    summary["status"] = "failed";
    summary["error"] = e.what();
    status = 1;
  }
  summary["iterations_completed"] = state.iteration;
  summary["epsilon_trace"] = eps_trace;
  write_text(dir / "summary.json", summary.dump(1) + "\n");
  return status;
}

EvalSummary evaluate_checkpoint(const EvalArgs& args) {
  if (args.rollouts <= 0) throw InvalidInput("eval: rollouts must be positive");
  const Checkpoint cp = load_checkpoint(args.checkpoint);
  const std::string env_name = args.env.empty() ? cp.env : args.env;
  const auto env = make_env(env_name);
  const EnvSpec& spec = env->spec();
  if (cp.policy.state_dim() != spec.dx || cp.policy.action_dim() != spec.du) {
    throw InvalidInput(fmt::format("eval: checkpoint policy is {}->{}, '{}' needs {}->{}",
                                   cp.policy.state_dim(), cp.policy.action_dim(), env_name, spec.dx,
                                   spec.du));
  }
  std::vector<Rollout> rollouts;
  for (int i = 0; i < spec.num_conditions(); ++i) {
    auto r = sample_rollouts(*env, global_mean_actor(cp.policy), i, args.rollouts, args.seed);
    rollouts.insert(rollouts.end(), r.begin(), r.end());
  }
  EvalSummary s;
  s.env = env_name;
  s.rollouts = static_cast<int>(rollouts.size());
  s.min_final_distance = std::numeric_limits<double>::infinity();
  s.max_final_distance = 0.0;
  for (const auto& r : rollouts) {
    s.mean_return += r.total_cost / rollouts.size();
    const double d = env->target_distance(r.states.back());
    s.min_final_distance = std::min(s.min_final_distance, d);
    s.max_final_distance = std::max(s.max_final_distance, d);
  }
  s.mean_final_distance = mean_final_distance(*env, rollouts);
  s.success_rate = success_rate(*env, rollouts);
  return s;
}

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  const EvalSummary s = evaluate_checkpoint(args);
  out << fmt::format(
      "env {}  rollouts {}\nmean return {:.6f}\nfinal distance mean {:.6f} min {:.6f} max {:.6f}\n"
      "success rate {:.4f}\n",
      s.env, s.rollouts, s.mean_return, s.mean_final_distance, s.min_final_distance,
      s.max_final_distance, s.success_rate);
  if (!args.output.empty()) {
    const json doc = {{"env", s.env},
                      {"checkpoint", args.checkpoint},
                      {"seed", args.seed},
                      {"rollouts", s.rollouts},
                      {"mean_return", s.mean_return},
                      {"mean_final_distance", s.mean_final_distance},
                      {"min_final_distance", s.min_final_distance},
                      {"max_final_distance", s.max_final_distance},
                      {"success_rate", s.success_rate}};
    write_text(args.output, doc.dump(1) + "\n");
  }
  return 0;
}

std::vector<TableRow> success_table(const std::vector<std::string>& run_dirs) {
  if (run_dirs.empty()) throw InvalidInput("table: no run directories given");
  std::vector<std::string> order;
  std::map<std::string, std::vector<RunLog>> groups;
  for (const auto& d : run_dirs) {
    RunLog log = read_runlog((fs::path(d) / "runlog.csv").string());
    const auto it = log.metadata.find("label");
    const std::string label = it != log.metadata.end() ? it->second : d;
    if (!groups.count(label)) order.push_back(label);
    groups[label].push_back(std::move(log));
  }
  std::vector<TableRow> rows;
  for (const auto& label : order) {
    const auto& logs = groups[label];
    TableRow row{label, static_cast<int>(logs.size()), {}};
    for (int k : kTableIterations) {
      double sum = 0.0;
      int n = 0;
      for (const auto& log : logs) {
        double v = 0.0;
        if (log.value_at(k, "global_success", &v)) {
          sum += v;
          ++n;
        }
      }
      row.cells.push_back(n == static_cast<int>(logs.size()) ? std::optional<double>(sum / n)
                                                             : std::nullopt);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_table(const std::vector<TableRow>& rows) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.label.size());
  std::string out = fmt::format("{:<{}}  {:>4}", "run", width, "runs");
  for (int k : kTableIterations) out += fmt::format("  {:>8}", fmt::format("iter {}", k));
  out += "\n";
  for (const auto& r : rows) {
    out += fmt::format("{:<{}}  {:>4}", r.label, width, r.runs);
    for (const auto& c : r.cells) {
      out += c ? fmt::format("  {:>7.1f}%", 100.0 * *c) : fmt::format("  {:>8}", "-");
    }
    out += "\n";
  }
  return out;
}

int cmd_table(const std::vector<std::string>& run_dirs, std::ostream& out) {
  out << format_table(success_table(run_dirs));
  return 0;
}

}  // namespace mdgps::harness
