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


#include "mdgps/envs.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <sstream>

#include "mdgps/errors.hpp"
#include "mdgps/point_mass.hpp"
#include "mdgps/two_link_reacher.hpp"

namespace mdgps {

Env::Env(EnvSpec spec) : spec_(std::move(spec)) {
  if (spec_.dx <= 0 || spec_.du <= 0 || spec_.horizon <= 0) {
    throw InvalidInput(fmt::format("{}: dimensions and horizon must be positive", spec_.name));
  }
  if (spec_.initial_states.empty()) {
    throw InvalidInput(fmt::format("{}: at least one condition is required", spec_.name));
  }
  for (const auto& x : spec_.initial_states) linalg::check_dims(x, spec_.dx, "initial state");
  for (int i : spec_.selector) {
    if (i < 0 || i >= spec_.dx) {
      throw InvalidInput(fmt::format("{}: selector index {} out of range", spec_.name, i));
    }
  }
  if (spec_.noise_std < 0.0 || spec_.init_noise_std < 0.0 || spec_.success_threshold <= 0.0) {
    throw InvalidInput(fmt::format("{}: invalid noise or threshold", spec_.name));
  }
}

void Env::check_inputs(const Vec& x, const Vec& u) const {
  linalg::check_dims(x, spec_.dx, "state");
  linalg::check_dims(u, spec_.du, "action");
}

Vec Env::check_finite(Vec next, const Vec& x, const Vec& u) const {
  if (!next.allFinite()) {
    const Eigen::IOFormat row(Eigen::StreamPrecision, Eigen::DontAlignCols, ", ", ", ", "", "",
                              "[", "]");
    std::ostringstream msg;
    msg << spec_.name << ": non-finite state after x = " << x.transpose().format(row)
        << ", u = " << u.transpose().format(row);
    throw NumericalError(msg.str());
  }
  return next;
}

GaussianState Env::initial_distribution(int condition) const {
  if (condition < 0 || condition >= spec_.num_conditions()) {
    throw InvalidInput(fmt::format("{}: condition {} out of range", spec_.name, condition));
  }
  const double var = std::max(spec_.init_noise_std * spec_.init_noise_std, 0.0);
  return GaussianState{spec_.initial_states[condition], var * Mat::Identity(spec_.dx, spec_.dx)};
}

namespace {

template <typename Config>
void apply_common(Config& c, const EnvParams& p) {
  if (p.horizon > 0) c.horizon = p.horizon;
  if (p.noise_std >= 0.0) c.noise_std = p.noise_std;
  if (p.success_threshold > 0.0) c.success_threshold = p.success_threshold;
}

template <typename T>
void truncate_conditions(std::vector<T>& v, int n, const std::string& name) {
  if (n <= 0) return;
  if (n > static_cast<int>(v.size())) {
    throw InvalidInput(
        fmt::format("{}: {} conditions requested, {} available", name, n, v.size()));
  }
  v.resize(n);
}

}  // namespace

std::unique_ptr<Env> make_env(const std::string& name, const EnvParams& params) {
  if (name == "point_mass" || name == "point_mass_lq") {
    PointMassConfig c =
        name == "point_mass" ? PointMassConfig::navigation() : PointMassConfig::linear_quadratic();
    apply_common(c, params);
    truncate_conditions(c.start_positions, params.num_conditions, name);
    return std::make_unique<PointMass>(std::move(c));
  }
  if (name == "reacher" || name == "reacher_blind") {
    ReacherConfig c = ReacherConfig::four_targets(name == "reacher_blind");
    apply_common(c, params);
    truncate_conditions(c.initial_angles, params.num_conditions, name);
    truncate_conditions(c.targets, params.num_conditions, name);
    return std::make_unique<TwoLinkReacher>(std::move(c));
  }
  throw InvalidInput(fmt::format("unknown environment '{}'", name));
}

std::vector<std::string> env_names() {
  return {"point_mass", "point_mass_lq", "reacher", "reacher_blind"};
}

}  // namespace mdgps
