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

#include <vector>

#include "mdgps/envs.hpp"

namespace mdgps {

struct CircleObstacle {
  Vec center;  // absolute position
  double radius = 0.0;
};

/// Point-mass navigation. State [p - target; v] (dx = 4), action = planar
/// acceleration (du = 2), zero-order-hold double integrator
/// p' = p + dt v + dt^2/2 u, v' = v + dt u.
struct PointMassConfig {
  int horizon = 100;
  double dt = 0.05;
  Vec target = Vec::Zero(2);
  std::vector<Vec> start_positions;
  std::vector<CircleObstacle> obstacles;
  double position_weight = 1.0;
  double velocity_weight = 0.1;
  double action_weight = 0.01;
  /// Multiplier on the state terms at the final step.
  double final_weight = 10.0;
  /// Penalty w * softplus_s(r - |p - c|)^2 per obstacle.
  double obstacle_weight = 200.0;
  double hinge_scale = 0.05;
  double noise_std = 1e-3;
  double init_noise_std = 0.01;
  double success_threshold = 0.1;

  /// Five starts at x = -1.5 with two obstacles between them and the target.
  static PointMassConfig navigation();
  /// Same starts, no obstacles: exactly linear-quadratic.
  static PointMassConfig linear_quadratic();
};

class PointMass final : public Env {
 public:
  explicit PointMass(PointMassConfig config);

  const PointMassConfig& config() const { return config_; }

  Vec step(const Vec& x, const Vec& u, const Vec& noise) const override;
  double cost(const Vec& x, const Vec& u, int t) const override;
  CostStep cost_expansion(const Vec& x, const Vec& u, int t) const override;
  double target_distance(const Vec& x) const override;

  /// The exact dynamics as a linear-Gaussian conditional on [x; u].
  LinGaussStep linear_dynamics() const;

  /// Obstacle penalty, gradient and Hessian with respect to the relative position.
  double obstacle_penalty(const Vec& p_rel, Vec* grad, Mat* hess) const;

 private:
  PointMassConfig config_;
};

}  // namespace mdgps
