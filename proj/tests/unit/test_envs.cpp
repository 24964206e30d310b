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


#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mdgps/envs.hpp"
#include "mdgps/errors.hpp"
#include "mdgps/fitting.hpp"
#include "mdgps/point_mass.hpp"
#include "mdgps/two_link_reacher.hpp"
#include "test_util.hpp"

namespace mdgps {
namespace {

using test::random_vector;

const PointMass& as_point_mass(const Env& env) { return dynamic_cast<const PointMass&>(env); }
const TwoLinkReacher& as_reacher(const Env& env) { return dynamic_cast<const TwoLinkReacher&>(env); }

double rel_error(const Mat& analytic, const Mat& numeric) {
  return (analytic - numeric).norm() / std::max(numeric.norm(), 1e-3);
}

// Central-difference gradient of the cost and Hessian of the analytic gradient.
void check_cost_derivatives(const Env& env, const Vec& x, const Vec& u, int t) {
  const int dx = env.spec().dx;
  const int du = env.spec().du;
  const int n = dx + du;
  Vec z(n);
  z << x, u;
  auto cost_at = [&](const Vec& v) { return env.cost(v.head(dx), v.tail(du), t); };
  auto grad_at = [&](const Vec& v) { return env.cost_expansion(v.head(dx), v.tail(du), t).gradient(); };
  Vec g(n);
  Mat h(n, n);
  for (int k = 0; k < n; ++k) {
    const double step = 1e-6 * std::max(1.0, std::abs(z(k)));
    Vec plus = z;
    Vec minus = z;
    plus(k) += step;
    minus(k) -= step;
    g(k) = (cost_at(plus) - cost_at(minus)) / (2.0 * step);
    h.col(k) = (grad_at(plus) - grad_at(minus)) / (2.0 * step);
  }
  const CostStep e = env.cost_expansion(x, u, t);
  EXPECT_NEAR(e.l0, env.cost(x, u, t), 1e-12 * std::max(1.0, std::abs(e.l0)));
  EXPECT_EQ(e.x_hat, x);
  EXPECT_EQ(e.u_hat, u);
  EXPECT_LT(rel_error(e.gradient(), g), 1e-4) << env.spec().name << " t=" << t;
  EXPECT_LT(rel_error(e.hessian(), h), 1e-4) << env.spec().name << " t=" << t;
  EXPECT_EQ(e.hessian(), e.hessian().transpose());
}

Rollout rollout_ending_at(const Env& env, const Vec& final_state) {
  Rollout r;
  for (int t = 0; t < env.spec().horizon; ++t) {
    r.states.push_back(final_state);
    r.actions.push_back(Vec::Zero(env.spec().du));
    r.costs.push_back(0.0);
  }
  return r;
}

TEST(PointMass, ZeroStateAndActionIsAFixedPoint) {
  const auto env = make_env("point_mass");
  Vec x(4);
  x << 0.3, -0.7, 0.0, 0.0;
  EXPECT_EQ(env->step(x, Vec::Zero(2), Vec::Zero(4)), x);
}

TEST(PointMass, UnitAccelerationIncreasesVelocityByDt) {
  const auto env = make_env("point_mass");
  const double dt = env->spec().dt;
  Vec x(4);
  x << 0.1, 0.2, 0.5, -0.25;
  const Vec next = env->step(x, Vec::Ones(2), Vec::Zero(4));
  EXPECT_DOUBLE_EQ(next(2), 0.5 + dt);
  EXPECT_DOUBLE_EQ(next(3), -0.25 + dt);
  EXPECT_NEAR(next(0), 0.1 + dt * 0.5 + 0.5 * dt * dt, 1e-15);
}

TEST(PointMass, DefaultGeometry) {
  const auto env = make_env("point_mass");
  EXPECT_EQ(env->spec().dx, 4);
  EXPECT_EQ(env->spec().du, 2);
  EXPECT_EQ(env->spec().horizon, 100);
  EXPECT_DOUBLE_EQ(env->spec().dt, 0.05);
  EXPECT_EQ(env->spec().num_conditions(), 5);
  EXPECT_DOUBLE_EQ(env->spec().noise_std, 1e-3);
  EXPECT_DOUBLE_EQ(env->spec().success_threshold, 0.1);
}

TEST(PointMass, CostDerivativesMatchFiniteDifferences) {
  const auto env = make_env("point_mass");
  const auto& pm = as_point_mass(*env);
  Rng rng(1);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    Vec x = random_vector(rng, 4);
    if (i % 2 == 0) {
      // Place the position on the hinge shoulder of an obstacle.
      const auto& obs = pm.config().obstacles[static_cast<std::size_t>(i / 2) % pm.config().obstacles.size()];
      const double angle = M_PI * unif(rng);
      const double rho = obs.radius + 0.1 * unif(rng);
      x(0) = obs.center(0) - pm.config().target(0) + rho * std::cos(angle);
      x(1) = obs.center(1) - pm.config().target(1) + rho * std::sin(angle);
    }
    const int t = i % 3 == 0 ? env->spec().horizon - 1 : i % env->spec().horizon;
    check_cost_derivatives(*env, x, random_vector(rng, 2), t);
  }
}

TEST(PointMass, ObstaclePenaltyIsInactiveFarAway) {
  const auto env = make_env("point_mass");
  const auto& pm = as_point_mass(*env);
  Vec grad;
  Mat hess;
  Vec far(2);
  far << 1.5, 1.5;
  const double value = pm.obstacle_penalty(far, &grad, &hess);
  EXPECT_LT(value, 1e-8);
  EXPECT_LT(grad.cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(hess.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(PointMass, QuadraticCostExpansionIsExactEverywhere) {
  const auto env = make_env("point_mass_lq");
  Rng rng(2);
  for (int t : {0, 50, 99}) {
    const CostStep e = env->cost_expansion(random_vector(rng, 4), random_vector(rng, 2), t);
    for (int i = 0; i < 10; ++i) {
      const Vec x = random_vector(rng, 4, 3.0);
      const Vec u = random_vector(rng, 2, 3.0);
      EXPECT_NEAR(e.evaluate(x, u), env->cost(x, u, t), 1e-10 * std::max(1.0, env->cost(x, u, t)));
    }
  }
}

TEST(PointMass, LinearDynamicsAreRecoveredByRegression) {
  EnvParams params;
  params.noise_std = 0.05;
  const auto env = make_env("point_mass_lq", params);
  const LinGaussStep truth = as_point_mass(*env).linear_dynamics();
  Rng rng(3);
  const int n = 60;
  SampleSet set;
  for (int j = 0; j < n; ++j) {
    Rollout r;
    Vec x = random_vector(rng, 4);
    for (int t = 0; t < 2; ++t) {
      const Vec u = random_vector(rng, 2);
      r.states.push_back(x);
      r.actions.push_back(u);
      r.costs.push_back(env->cost(x, u, t));
      x = env->step(x, u, standard_normal(rng, 4));
    }
    set.rollouts.push_back(std::move(r));
  }
  const auto fit = fit_linear_gaussian(set, GmmPrior{}, FitMode::kDynamics, 2);
  Mat design(n, 7);
  for (int j = 0; j < n; ++j) {
    design.row(j) << set.rollouts[j].states[0].transpose(), set.rollouts[j].actions[0].transpose(), 1.0;
  }
  const Mat inv = (design.transpose() * design).inverse();
  const double var = 0.05 * 0.05;
  for (int row = 0; row < 4; ++row) {
    for (int col = 0; col < 6; ++col) {
      EXPECT_LT(std::abs(fit.gain(0)(row, col) - truth.gain(row, col)), 3.0 * std::sqrt(var * inv(col, col)) + 1e-12)
          << row << "," << col;
    }
    EXPECT_LT(std::abs(fit.bias(0)(row) - truth.bias(row)), 3.0 * std::sqrt(var * inv(6, 6)) + 1e-12);
  }
}

TEST(TwoLinkReacher, ZeroTorqueFromRestStaysAtRest) {
  const auto env = make_env("reacher");
  const auto& arm = as_reacher(*env);
  Vec joints(4);
  joints << 0.3, 1.1, 0.0, 0.0;
  const Vec x = arm.make_state(joints, 0);
  const Vec next = env->step(x, Vec::Zero(2), Vec::Zero(6));
  EXPECT_NEAR(next(2), 0.0, 1e-8);
  EXPECT_NEAR(next(3), 0.0, 1e-8);
  EXPECT_NEAR(next(0), 0.3, 1e-12);
  EXPECT_NEAR(next(1), 1.1, 1e-12);
}

TEST(TwoLinkReacher, FreeMotionConservesEnergy) {
  ReacherConfig cfg = ReacherConfig::four_targets(false);
  cfg.damping = 0.0;
  cfg.noise_std = 0.0;
  const TwoLinkReacher arm(cfg);
  Vec joints(4);
  joints << 0.2, -0.5, 1.3, -0.8;
  const double e0 = arm.kinetic_energy(joints);
  Vec x = arm.make_state(joints, 1);
  for (int t = 0; t < 20; ++t) x = arm.step(x, Vec::Zero(2), Vec::Zero(6));
  EXPECT_NEAR(arm.kinetic_energy(x.head(4)), e0, 1e-6 * e0);
}

TEST(TwoLinkReacher, StateTracksForwardKinematics) {
  const auto env = make_env("reacher");
  const auto& arm = as_reacher(*env);
  Rng rng(4);
  Vec joints(4);
  joints << 0.1, 0.9, 0.4, -0.3;
  Vec x = arm.make_state(joints, 2);
  const Vec target = arm.forward_kinematics(x.head(2)) - x.tail(2);
  for (int t = 0; t < 10; ++t) {
    x = env->step(x, random_vector(rng, 2), standard_normal(rng, 6));
    EXPECT_LT((x.tail(2) - (arm.forward_kinematics(x.head(2)) - target)).norm(), 1e-12);
  }
}

TEST(TwoLinkReacher, CostDerivativesMatchFiniteDifferences) {
  const auto env = make_env("reacher");
  const auto& arm = as_reacher(*env);
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const Vec joints = random_vector(rng, 4);
    const Vec x = arm.make_state(joints, i % 4);
    const int t = i % 4 == 0 ? env->spec().horizon - 1 : i;
    check_cost_derivatives(*env, x, random_vector(rng, 2), t);
  }
}

TEST(TwoLinkReacher, BlindObservationCannotDistinguishConditions) {
  const auto env = make_env("reacher_blind");
  const auto& arm = as_reacher(*env);
  const GlobalPolicy policy =
      GlobalPolicy::mlp(6, 2, env->spec().selector, {8}, Mat::Identity(2, 2), 1);
  Vec joints(4);
  joints << 0.4, -0.2, 0.1, 0.3;
  const Vec obs0 = policy.observe(arm.make_state(joints, 0));
  for (int i = 1; i < env->spec().num_conditions(); ++i) {
    const Vec xi = arm.make_state(joints, i);
    EXPECT_EQ(policy.observe(xi), obs0);
    EXPECT_NE(xi, arm.make_state(joints, 0));
  }
  const auto sighted = make_env("reacher");
  EXPECT_EQ(sighted->spec().selector.size(), 6u);
}

TEST(Rollouts, SameSeedGivesBitIdenticalRollouts) {
  EnvParams params;
  params.noise_std = 0.0;
  const auto env = make_env("point_mass", params);
  const GlobalPolicy policy = GlobalPolicy::affine(4, 2, {0, 1, 2, 3}, Mat::Identity(2, 2))
                                  .with_params(Vec::Constant(10, -0.3));
  const auto a = sample_rollouts(*env, global_mean_actor(policy), 1, 3, 42);
  const auto b = sample_rollouts(*env, global_mean_actor(policy), 1, 3, 42);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    EXPECT_EQ(a[j].states, b[j].states);
    EXPECT_EQ(a[j].actions, b[j].actions);
    EXPECT_EQ(a[j].costs, b[j].costs);
  }
  const auto stochastic_a = sample_rollouts(*make_env("point_mass"), global_actor(policy), 0, 2, 7);
  const auto stochastic_b = sample_rollouts(*make_env("point_mass"), global_actor(policy), 0, 2, 7);
  EXPECT_EQ(stochastic_a[1].states, stochastic_b[1].states);
  EXPECT_NE(stochastic_a[0].states, stochastic_a[1].states);
}

TEST(Rollouts, FiveSamplesPerConditionGiveTwentyFive) {
  const auto env = make_env("point_mass");
  const GlobalPolicy policy = GlobalPolicy::affine(4, 2, {0, 1, 2, 3}, Mat::Identity(2, 2));
  std::size_t total = 0;
  for (int i = 0; i < env->spec().num_conditions(); ++i) {
    const auto rs = sample_rollouts(*env, global_actor(policy), i, 5, 3);
    for (const auto& r : rs) {
      EXPECT_EQ(r.condition, i);
      EXPECT_EQ(r.horizon(), env->spec().horizon);
      double sum = 0.0;
      for (double c : r.costs) sum += c;
      EXPECT_NEAR(r.total_cost, sum, 1e-10);
    }
    total += rs.size();
  }
  EXPECT_EQ(total, 25u);
}

TEST(Rollouts, ActorDimensionMismatchIsRejected) {
  const auto env = make_env("point_mass");
  const GlobalPolicy policy = GlobalPolicy::affine(6, 2, {0, 1, 2, 3, 4, 5}, Mat::Identity(2, 2));
  EXPECT_THROW(sample_rollouts(*env, global_actor(policy), 0, 1, 1), InvalidInput);
}

TEST(Rollouts, NonFiniteStateIsARunError) {
  const auto env = make_env("point_mass");
  Vec x = Vec::Zero(4);
  x(2) = std::numeric_limits<double>::max();
  EXPECT_THROW(env->step(x, Vec::Constant(2, std::numeric_limits<double>::max()), Vec::Zero(4)),
               NumericalError);
}

TEST(SuccessRate, Examples) {
  const auto pm = make_env("point_mass");
  std::vector<Rollout> at_target(3, rollout_ending_at(*pm, Vec::Zero(4)));
  EXPECT_DOUBLE_EQ(success_rate(*pm, at_target), 1.0);
  EXPECT_THROW(success_rate(*pm, {}), InvalidInput);
  EXPECT_THROW(mean_final_distance(*pm, {}), InvalidInput);

  const auto arm = make_env("reacher");
  ASSERT_DOUBLE_EQ(arm->spec().success_threshold, 0.06);
  Vec x = Vec::Zero(6);
  x(4) = 0.059;
  Vec miss = Vec::Zero(6);
  miss(5) = 0.061;
  EXPECT_DOUBLE_EQ(success_rate(*arm, {rollout_ending_at(*arm, x)}), 1.0);
  EXPECT_DOUBLE_EQ(success_rate(*arm, {rollout_ending_at(*arm, x), rollout_ending_at(*arm, miss)}), 0.5);
}

TEST(MakeEnv, RejectsUnknownNamesAndTooManyConditions) {
  EXPECT_THROW(make_env("peg"), InvalidInput);
  EnvParams params;
  params.num_conditions = 9;
  EXPECT_THROW(make_env("point_mass", params), InvalidInput);
  params.num_conditions = 2;
  EXPECT_EQ(make_env("reacher", params)->spec().num_conditions(), 2);
}

}  // namespace
}  // namespace mdgps
