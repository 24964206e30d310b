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


#include "mdgps/harness/config.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "mdgps/errors.hpp"
#include "mdgps/random.hpp"

namespace mdgps::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw InvalidInput(fmt::format("config key '{}': cannot parse '{}'", key, text));
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw InvalidInput(fmt::format("config key '{}': expected true or false, got '{}'", key, text));
}

std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  return out;
}

Architecture parse_architecture(const std::string& text) {
  if (text == "affine") return Architecture::kAffine;
  if (text == "mlp") return Architecture::kMlp;
  throw InvalidInput(fmt::format("config key 'architecture': expected affine or mlp, got '{}'", text));
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define MDGPS_NUM_FIELD(name, type)                                                  \
  Field {                                                                            \
    #name, [](const ExperimentConfig& c) { return fmt::format("{}", c.name); },      \
        [](ExperimentConfig& c, const std::string& v) { c.name = parse_number<type>(#name, v); } \
  }
#define MDGPS_BOOL_FIELD(name)                                                       \
  Field {                                                                            \
    #name, [](const ExperimentConfig& c) { return fmt_bool(c.name); },               \
        [](ExperimentConfig& c, const std::string& v) { c.name = parse_bool(#name, v); } \
  }

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = {
      Field{"env", [](const ExperimentConfig& c) { return c.env; },
            [](ExperimentConfig& c, const std::string& v) { c.env = v; }},
      MDGPS_NUM_FIELD(conditions, int),
      MDGPS_NUM_FIELD(horizon, int),
      MDGPS_NUM_FIELD(noise_std, double),
      MDGPS_NUM_FIELD(success_threshold, double),
      MDGPS_NUM_FIELD(samples_per_condition, int),
      MDGPS_NUM_FIELD(eval_rollouts, int),
      MDGPS_NUM_FIELD(iterations, int),
      Field{"sampling", [](const ExperimentConfig& c) { return to_string(c.sampling); },
            [](ExperimentConfig& c, const std::string& v) { c.sampling = parse_sampling_mode(v); }},
      Field{"step_rule", [](const ExperimentConfig& c) { return to_string(c.step_rule); },
            [](ExperimentConfig& c, const std::string& v) { c.step_rule = parse_step_rule(v); }},
      MDGPS_NUM_FIELD(epsilon, double),
      MDGPS_BOOL_FIELD(adjust_step),
      MDGPS_NUM_FIELD(clamp_factor, double),
      MDGPS_NUM_FIELD(epsilon_min, double),
      MDGPS_NUM_FIELD(epsilon_max, double),
      Field{"degenerate_step",
            [](const ExperimentConfig& c) { return to_string(c.degenerate_step); },
            [](ExperimentConfig& c, const std::string& v) {
              c.degenerate_step = parse_degenerate_step(v);
            }},
      Field{"architecture",
            [](const ExperimentConfig& c) {
              return std::string(c.architecture == Architecture::kAffine ? "affine" : "mlp");
            },
            [](ExperimentConfig& c, const std::string& v) { c.architecture = parse_architecture(v); }},
      Field{"hidden", [](const ExperimentConfig& c) { return fmt::format("{}", fmt::join(c.hidden, ",")); },
            [](ExperimentConfig& c, const std::string& v) { c.hidden = parse_int_list("hidden", v); }},
      MDGPS_NUM_FIELD(init_policy_std, double),
      MDGPS_NUM_FIELD(sgd_batch, int),
      MDGPS_NUM_FIELD(sgd_steps, int),
      MDGPS_NUM_FIELD(sgd_learning_rate, double),
      MDGPS_NUM_FIELD(sgd_momentum, double),
      MDGPS_BOOL_FIELD(sgd_normalize_inputs),
      MDGPS_NUM_FIELD(gmm_components, int),
      MDGPS_NUM_FIELD(gmm_iterations, int),
      MDGPS_NUM_FIELD(gmm_restarts, int),
      MDGPS_NUM_FIELD(gmm_strength, double),
      MDGPS_NUM_FIELD(buffer_factor, int),
      MDGPS_BOOL_FIELD(policy_fit_sampled_actions),
      MDGPS_NUM_FIELD(seed, std::uint64_t),
      Field{"output", [](const ExperimentConfig& c) { return c.output; },
            [](ExperimentConfig& c, const std::string& v) { c.output = v; }},
      Field{"label", [](const ExperimentConfig& c) { return c.label; },
            [](ExperimentConfig& c, const std::string& v) { c.label = v; }},
  };
  return fields;
}

#undef MDGPS_NUM_FIELD
#undef MDGPS_BOOL_FIELD

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw InvalidInput(fmt::format("config key '{}': {}", key, what));
}

}  // namespace

void ExperimentConfig::validate() const {
  const auto names = env_names();
  require(std::find(names.begin(), names.end(), env) != names.end(), "env", "unknown environment");
  require(conditions >= 0, "conditions", "must be nonnegative");
  require(horizon >= 0, "horizon", "must be nonnegative");
  require(samples_per_condition > 0, "samples_per_condition", "must be positive");
  require(eval_rollouts > 0, "eval_rollouts", "must be positive");
  require(iterations > 0, "iterations", "must be positive");
  require(epsilon > 0.0, "epsilon", "must be positive");
  require(clamp_factor >= 1.0, "clamp_factor", "must be at least 1");
  require(epsilon_min > 0.0, "epsilon_min", "must be positive");
  require(epsilon_max >= epsilon_min, "epsilon_max", "must be at least epsilon_min");
  require(!hidden.empty() &&
              std::all_of(hidden.begin(), hidden.end(), [](int h) { return h > 0; }),
          "hidden", "layer sizes must be positive");
  require(init_policy_std > 0.0, "init_policy_std", "must be positive");
  require(sgd_batch > 0, "sgd_batch", "must be positive");
  require(sgd_steps >= 0, "sgd_steps", "must be nonnegative");
  require(sgd_learning_rate > 0.0, "sgd_learning_rate", "must be positive");
  require(sgd_momentum >= 0.0 && sgd_momentum < 1.0, "sgd_momentum", "must be in [0, 1)");
  require(gmm_components > 0, "gmm_components", "must be positive");
  require(gmm_iterations > 0, "gmm_iterations", "must be positive");
  require(gmm_restarts > 0, "gmm_restarts", "must be positive");
  require(gmm_strength >= 0.0, "gmm_strength", "must be nonnegative");
  require(buffer_factor > 0, "buffer_factor", "must be positive");
  require(!output.empty(), "output", "must not be empty");
}

std::string ExperimentConfig::variant_label() const {
  if (!label.empty()) return label;
  return fmt::format("{}/{}/{}", env, to_string(sampling), to_string(step_rule));
}

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  for (const auto& f : schema()) {
    if (f.key == key) {
      f.set(config, value);
      return;
    }
  }
  throw InvalidInput(fmt::format("unknown config key '{}'", key));
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : schema()) keys.push_back(f.key);
  return keys;
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput(fmt::format("config line {}: expected key = value", number));
    }
    try {
      set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const InvalidInput& e) {
      throw InvalidInput(fmt::format("config line {}: {}", number, e.what()));
    }
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(fmt::format("cannot open config file '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& f : schema()) out += fmt::format("{} = {}\n", f.key, f.get(config));
  return out;
}

EnvParams env_params(const ExperimentConfig& config) {
  EnvParams p;
  p.num_conditions = config.conditions;
  p.horizon = config.horizon;
  p.noise_std = config.noise_std;
  p.success_threshold = config.success_threshold;
  return p;
}

MdgpsOptions mdgps_options(const ExperimentConfig& config) {
  MdgpsOptions o;
  o.sampling = config.sampling;
  o.step_rule = config.step_rule;
  o.initial_epsilon = config.epsilon;
  o.adjust_step = config.adjust_step;
  o.clamps = StepClamps{config.clamp_factor, config.epsilon_min, config.epsilon_max,
                        config.degenerate_step};
  o.samples_per_condition = config.samples_per_condition;
  o.eval_rollouts_per_condition = config.eval_rollouts;
  o.dynamics_gmm.n_components = config.gmm_components;
  o.dynamics_gmm.max_em_iters = config.gmm_iterations;
  o.dynamics_gmm.restarts = config.gmm_restarts;
  o.dynamics_gmm.strength = config.gmm_strength;
  o.policy_gmm = o.dynamics_gmm;
  o.buffer_factor = config.buffer_factor;
  o.policy_fit_target = config.policy_fit_sampled_actions ? PolicyFitTarget::kSampledAction
                                                          : PolicyFitTarget::kPolicyMean;
  o.sgd.batch_size = config.sgd_batch;
  o.sgd.steps = config.sgd_steps;
  o.sgd.learning_rate = config.sgd_learning_rate;
  o.sgd.momentum = config.sgd_momentum;
  o.sgd.normalize_inputs = config.sgd_normalize_inputs;
  o.seed = config.seed;
  return o;
}

GlobalPolicy initial_policy(const ExperimentConfig& config, const Env& env) {
  const EnvSpec& s = env.spec();
  const Mat cov = config.init_policy_std * config.init_policy_std * Mat::Identity(s.du, s.du);
  if (config.architecture == Architecture::kAffine) {
    return GlobalPolicy::affine(s.dx, s.du, s.selector, cov);
  }
  return GlobalPolicy::mlp(s.dx, s.du, s.selector, config.hidden, cov,
                           derive_seed(config.seed, {0xA11CEull}));
}

}  // namespace mdgps::harness
