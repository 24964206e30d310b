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

/// Torque-driven planar two-link arm with uniform rod links.
/// State [q1, q2, dq1, dq2, e_x, e_y] (dx = 6) where e is the end effector
/// position relative to the target; action = joint torques (du = 2).
/// Integrated by fixed-step RK4; process noise enters the joint coordinates.
struct ReacherConfig {
  int horizon = 100;
  double dt = 0.05;
  int substeps = 2;
  double link_length1 = 0.5;
  double link_length2 = 0.5;
  double link_mass1 = 1.0;
  double link_mass2 = 1.0;
  double damping = 0.1;
  double gravity = 0.0;
  /// Initial joint angles, one per condition.
  std::vector<Vec> initial_angles;
  /// Target positions, one per condition.
  std::vector<Vec> targets;
  double position_weight = 1.0;
  double velocity_weight = 0.01;
  double action_weight = 0.01;
  double final_weight = 10.0;
  double noise_std = 1e-3;
  double init_noise_std = 0.0;
  double success_threshold = 0.06;
  /// Global policy sees only the joint coordinates.
  bool blind = false;

  static ReacherConfig four_targets(bool blind);
};

class TwoLinkReacher final : public Env {
 public:
  explicit TwoLinkReacher(ReacherConfig config);

  const ReacherConfig& config() const { return config_; }

  Vec step(const Vec& x, const Vec& u, const Vec& noise) const override;
  double cost(const Vec& x, const Vec& u, int t) const override;
  CostStep cost_expansion(const Vec& x, const Vec& u, int t) const override;
  double target_distance(const Vec& x) const override;

  /// End effector position for joint angles q.
  Vec forward_kinematics(const Vec& q) const;
  /// Joint accelerations for joint state [q; dq] and torque u.
  Vec joint_acceleration(const Vec& joints, const Vec& u) const;
  /// Kinetic energy of joint state [q; dq].
  double kinetic_energy(const Vec& joints) const;
  /// Full state for joint state [q; dq] in a given condition.
  Vec make_state(const Vec& joints, int condition) const;

 private:
  Mat mass_matrix(double q2) const;

  ReacherConfig config_;
};

}  // namespace mdgps
