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


#include "mdgps/two_link_reacher.hpp"

#include <cmath>

#include "mdgps/errors.hpp"

namespace mdgps {

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec fk(const ReacherConfig& c, const Vec& q) {
  return vec2(c.link_length1 * std::cos(q(0)) + c.link_length2 * std::cos(q(0) + q(1)),
              c.link_length1 * std::sin(q(0)) + c.link_length2 * std::sin(q(0) + q(1)));
}

EnvSpec make_spec(const ReacherConfig& c) {
  if (c.initial_angles.size() != c.targets.size()) {
    throw InvalidInput("reacher: initial_angles and targets must have one entry per condition");
  }
  EnvSpec s;
  s.name = c.blind ? "reacher_blind" : "reacher";
  s.dx = 6;
  s.du = 2;
  s.horizon = c.horizon;
  s.dt = c.dt;
  for (std::size_t i = 0; i < c.initial_angles.size(); ++i) {
    linalg::check_dims(c.initial_angles[i], 2, "reacher initial angles");
    linalg::check_dims(c.targets[i], 2, "reacher target");
    Vec x = Vec::Zero(6);
    x.head(2) = c.initial_angles[i];
    x.tail(2) = fk(c, c.initial_angles[i]) - c.targets[i];
    s.initial_states.push_back(x);
  }
  s.noise_std = c.noise_std;
  s.init_noise_std = c.init_noise_std;
  s.selector = c.blind ? std::vector<int>{0, 1, 2, 3} : std::vector<int>{0, 1, 2, 3, 4, 5};
  s.success_threshold = c.success_threshold;
  return s;
}

}  // namespace

ReacherConfig ReacherConfig::four_targets(bool blind) {
  ReacherConfig c;
  c.blind = blind;
  for (double q1 : {-1.2, -0.4, 0.4, 1.2}) {
    const Vec q0 = vec2(q1, 1.2);
    c.initial_angles.push_back(q0);
    c.targets.push_back(fk(c, q0 + vec2(0.8, -0.6)));
  }
  return c;
}

TwoLinkReacher::TwoLinkReacher(ReacherConfig config)
    : Env(make_spec(config)), config_(std::move(config)) {
  if (config_.dt <= 0.0 || config_.substeps <= 0 || config_.link_length1 <= 0.0 ||
      config_.link_length2 <= 0.0 || config_.link_mass1 <= 0.0 || config_.link_mass2 <= 0.0 ||
      config_.damping < 0.0) {
    throw InvalidInput("reacher: invalid physical parameters");
  }
}

Vec TwoLinkReacher::forward_kinematics(const Vec& q) const {
  linalg::check_dims(q, 2, "joint angles");
  return fk(config_, q);
}

Mat TwoLinkReacher::mass_matrix(double q2) const {
  const auto& c = config_;
  const double lc1 = 0.5 * c.link_length1;
  const double lc2 = 0.5 * c.link_length2;
  const double i1 = c.link_mass1 * c.link_length1 * c.link_length1 / 12.0;
  const double i2 = c.link_mass2 * c.link_length2 * c.link_length2 / 12.0;
  const double a = i1 + i2 + c.link_mass1 * lc1 * lc1 +
                   c.link_mass2 * (c.link_length1 * c.link_length1 + lc2 * lc2);
  const double b = c.link_mass2 * c.link_length1 * lc2;
  const double d = i2 + c.link_mass2 * lc2 * lc2;
  Mat m(2, 2);
  m << a + 2.0 * b * std::cos(q2), d + b * std::cos(q2), d + b * std::cos(q2), d;
  return m;
}

Vec TwoLinkReacher::joint_acceleration(const Vec& joints, const Vec& u) const {
  const auto& c = config_;
  const double q1 = joints(0), q2 = joints(1), dq1 = joints(2), dq2 = joints(3);
  const double lc2 = 0.5 * c.link_length2;
  const double h = c.link_mass2 * c.link_length1 * lc2 * std::sin(q2);
  const Vec coriolis = vec2(-h * dq2 * (2.0 * dq1 + dq2), h * dq1 * dq1);
  const double g12 = c.link_mass2 * lc2 * c.gravity * std::cos(q1 + q2);
  const Vec gravity =
      vec2((c.link_mass1 * 0.5 * c.link_length1 + c.link_mass2 * c.link_length1) * c.gravity *
                   std::cos(q1) +
               g12,
           g12);
  const Vec rhs = u - coriolis - gravity - c.damping * joints.tail(2);
  return mass_matrix(q2).llt().solve(rhs);
}

double TwoLinkReacher::kinetic_energy(const Vec& joints) const {
  const Vec dq = joints.tail(2);
  return 0.5 * dq.dot(mass_matrix(joints(1)) * dq);
}

Vec TwoLinkReacher::make_state(const Vec& joints, int condition) const {
  linalg::check_dims(joints, 4, "joint state");
  Vec x(6);
  x.head(4) = joints;
  x.tail(2) = fk(config_, joints.head(2)) - config_.targets.at(condition);
  return x;
}

Vec TwoLinkReacher::step(const Vec& x, const Vec& u, const Vec& noise) const {
  check_inputs(x, u);
  linalg::check_dims(noise, 6, "noise");
  const Vec target = fk(config_, x.head(2)) - x.tail(2);
  auto deriv = [&](const Vec& j) {
    Vec d(4);
    d.head(2) = j.tail(2);
    d.tail(2) = joint_acceleration(j, u);
    return d;
  };
  const double h = config_.dt / config_.substeps;
  Vec j = x.head(4);
  for (int s = 0; s < config_.substeps; ++s) {
    const Vec k1 = deriv(j);
    const Vec k2 = deriv(j + 0.5 * h * k1);
    const Vec k3 = deriv(j + 0.5 * h * k2);
    const Vec k4 = deriv(j + h * k3);
    j += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  j += config_.noise_std * noise.head(4);
  Vec next(6);
  next.head(4) = j;
  next.tail(2) = fk(config_, j.head(2)) - target;
  return check_finite(std::move(next), x, u);
}

double TwoLinkReacher::cost(const Vec& x, const Vec& u, int t) const {
  check_inputs(x, u);
  const double f = t == config_.horizon - 1 ? config_.final_weight : 1.0;
  return 0.5 * f * (config_.position_weight * x.tail(2).squaredNorm() +
                    config_.velocity_weight * x.segment(2, 2).squaredNorm()) +
         0.5 * config_.action_weight * u.squaredNorm();
}

CostStep TwoLinkReacher::cost_expansion(const Vec& x, const Vec& u, int t) const {
  check_inputs(x, u);
  const double f = t == config_.horizon - 1 ? config_.final_weight : 1.0;
  CostStep c = CostStep::zero(6, 2);
  c.x_hat = x;
  c.u_hat = u;
  c.l0 = cost(x, u, t);
  c.lxx.block(2, 2, 2, 2) = f * config_.velocity_weight * Mat::Identity(2, 2);
  c.lxx.block(4, 4, 2, 2) = f * config_.position_weight * Mat::Identity(2, 2);
  c.lx.segment(2, 2) = f * config_.velocity_weight * x.segment(2, 2);
  c.lx.tail(2) = f * config_.position_weight * x.tail(2);
  c.luu = config_.action_weight * Mat::Identity(2, 2);
  c.lu = config_.action_weight * u;
  return c;
}

double TwoLinkReacher::target_distance(const Vec& x) const {
  linalg::check_dims(x, 6, "state");
  return x.tail(2).norm();
}

}  // namespace mdgps
