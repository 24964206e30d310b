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


#include "mdgps/point_mass.hpp"

#include <fmt/format.h>

#include <cmath>

#include "mdgps/errors.hpp"

namespace mdgps {

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

std::vector<Vec> default_starts() {
  std::vector<Vec> s;
  for (double y : {-0.8, -0.4, 0.0, 0.4, 0.8}) s.push_back(vec2(-1.5, y));
  return s;
}

EnvSpec make_spec(const PointMassConfig& c) {
  EnvSpec s;
  s.name = c.obstacles.empty() ? "point_mass_lq" : "point_mass";
  s.dx = 4;
  s.du = 2;
  s.horizon = c.horizon;
  s.dt = c.dt;
  for (const auto& p : c.start_positions) {
    linalg::check_dims(p, 2, "point mass start");
    Vec x = Vec::Zero(4);
    x.head(2) = p - c.target;
    s.initial_states.push_back(x);
  }
  s.noise_std = c.noise_std;
  s.init_noise_std = c.init_noise_std;
  s.selector = {0, 1, 2, 3};
  s.success_threshold = c.success_threshold;
  return s;
}

// softplus_s(d) = s log(1 + exp(d / s)), evaluated without overflow.
double softplus(double d, double s) {
  const double z = d / s;
  return s * (z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)));
}

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

PointMassConfig PointMassConfig::navigation() {
  PointMassConfig c;
  c.start_positions = default_starts();
  c.obstacles = {CircleObstacle{vec2(-0.8, 0.45), 0.15}, CircleObstacle{vec2(-0.8, -0.15), 0.15}};
  return c;
}

PointMassConfig PointMassConfig::linear_quadratic() {
  PointMassConfig c;
  c.start_positions = default_starts();
  return c;
}

PointMass::PointMass(PointMassConfig config) : Env(make_spec(config)), config_(std::move(config)) {
  linalg::check_dims(config_.target, 2, "point mass target");
  if (config_.dt <= 0.0 || config_.hinge_scale <= 0.0) {
    throw InvalidInput("point_mass: dt and hinge_scale must be positive");
  }
  for (const auto& o : config_.obstacles) {
    linalg::check_dims(o.center, 2, "obstacle center");
    if (o.radius <= 0.0) throw InvalidInput("point_mass: obstacle radius must be positive");
  }
}

LinGaussStep PointMass::linear_dynamics() const {
  const double dt = config_.dt;
  Mat gain = Mat::Zero(4, 6);
  gain.block(0, 0, 4, 4).setIdentity();
  gain.block(0, 2, 2, 2) += dt * Mat::Identity(2, 2);
  gain.block(0, 4, 2, 2) = 0.5 * dt * dt * Mat::Identity(2, 2);
  gain.block(2, 4, 2, 2) = dt * Mat::Identity(2, 2);
  const double var = std::max(config_.noise_std * config_.noise_std, 1e-12);
  return LinGaussStep{gain, Vec::Zero(4), var * Mat::Identity(4, 4)};
}

Vec PointMass::step(const Vec& x, const Vec& u, const Vec& noise) const {
  check_inputs(x, u);
  linalg::check_dims(noise, 4, "noise");
  const double dt = config_.dt;
  Vec next(4);
  next.head(2) = x.head(2) + dt * x.tail(2) + 0.5 * dt * dt * u;
  next.tail(2) = x.tail(2) + dt * u;
  next += config_.noise_std * noise;
  return check_finite(std::move(next), x, u);
}

double PointMass::obstacle_penalty(const Vec& p_rel, Vec* grad, Mat* hess) const {
  const double s = config_.hinge_scale;
  const double w = config_.obstacle_weight;
  const Vec p = p_rel + config_.target;
  double value = 0.0;
  if (grad) grad->setZero(2);
  if (hess) hess->setZero(2, 2);
  for (const auto& o : config_.obstacles) {
    const Vec diff = p - o.center;
    const double rho = diff.norm();
    const double d = o.radius - rho;
    const double sp = softplus(d, s);
    value += w * sp * sp;
    if (!grad && !hess) continue;
    if (rho < 1e-12) continue;  // gradient of the distance is undefined at the center
    const Vec n = diff / rho;
    const double sig = sigmoid(d / s);
    const double dphi = 2.0 * sp * sig;
    const double ddphi = 2.0 * sig * sig + 2.0 * sp * sig * (1.0 - sig) / s;
    if (grad) *grad -= w * dphi * n;
    if (hess) {
      const Mat nn = n * n.transpose();
      *hess += w * (ddphi * nn - dphi * (Mat::Identity(2, 2) - nn) / rho);
    }
  }
  return value;
}

double PointMass::cost(const Vec& x, const Vec& u, int t) const {
  check_inputs(x, u);
  const double f = t == config_.horizon - 1 ? config_.final_weight : 1.0;
  return 0.5 * f * (config_.position_weight * x.head(2).squaredNorm() +
                    config_.velocity_weight * x.tail(2).squaredNorm()) +
         0.5 * config_.action_weight * u.squaredNorm() + obstacle_penalty(x.head(2), nullptr, nullptr);
}

CostStep PointMass::cost_expansion(const Vec& x, const Vec& u, int t) const {
  check_inputs(x, u);
  const double f = t == config_.horizon - 1 ? config_.final_weight : 1.0;
  CostStep c = CostStep::zero(4, 2);
  c.x_hat = x;
  c.u_hat = u;
  c.l0 = cost(x, u, t);
  Vec g;
  Mat h;
  obstacle_penalty(x.head(2), &g, &h);
  c.lxx.topLeftCorner(2, 2) = f * config_.position_weight * Mat::Identity(2, 2) + h;
  c.lxx.bottomRightCorner(2, 2) = f * config_.velocity_weight * Mat::Identity(2, 2);
  c.lx.head(2) = f * config_.position_weight * x.head(2) + g;
  c.lx.tail(2) = f * config_.velocity_weight * x.tail(2);
  c.luu = config_.action_weight * Mat::Identity(2, 2);
  c.lu = config_.action_weight * u;
  return c;
}

double PointMass::target_distance(const Vec& x) const {
  linalg::check_dims(x, 4, "state");
  return x.head(2).norm();
}

}  // namespace mdgps
