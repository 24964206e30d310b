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

#include <algorithm>
#include <cmath>

#include "mdgps/errors.hpp"
#include "mdgps/lqr.hpp"
#include "test_util.hpp"

namespace mdgps {
namespace {

using test::random_controller;
using test::random_cost;
using test::random_dynamics;
using test::random_matrix;
using test::random_pd;
using test::random_vector;

GaussianState random_init(Rng& rng, int dx) { return {random_vector(rng, dx), random_pd(rng, dx, 0.1, 0.5)}; }

// Expected cost minus total policy entropy: the objective the max-entropy
// backward pass minimizes.
double maxent_objective(const TimeVaryingLinGauss& ctrl, const TimeVaryingLinGauss& dyn,
                        const QuadraticCostExpansion& cost, const GaussianState& init) {
  const auto h = entropy(ctrl);
  double total_entropy = 0.0;
  for (double v : h) total_entropy += v;
  return expected_cost(propagate_marginals(ctrl, dyn, init), cost) - total_entropy;
}

TEST(SurrogateExpand, MatchesPointwiseDensity) {
  Rng rng(1);
  const int dx = 3;
  const int du = 2;
  const auto cost = random_cost(rng, 4, dx, du);
  const auto pi_bar = random_controller(rng, 4, dx, du);
  for (double eta : {0.1, 1.0, 7.5}) {
    const auto sur = surrogate_expand(cost, pi_bar, eta);
    for (int i = 0; i < 100; ++i) {
      const int t = i % 4;
      const Vec x = random_vector(rng, dx, 2.0);
      const Vec u = random_vector(rng, du, 2.0);
      const double expect = cost.steps[t].evaluate(x, u) / eta -
                            test::log_normal_pdf(u, pi_bar.mean(t, x), pi_bar.cov(t));
      EXPECT_NEAR(sur.steps[t].evaluate(x, u), expect, 1e-9 * std::max(1.0, std::abs(expect)));
    }
  }
}

TEST(SurrogateExpand, ZeroCostHessianIsNegativeLogPolicyHessian) {
  Rng rng(2);
  const auto pi_bar = random_controller(rng, 3, 2, 2);
  const auto sur = surrogate_expand(QuadraticCostExpansion::zero(3, 2, 2), pi_bar, 1.0);
  for (int t = 0; t < 3; ++t) {
    const Mat p = pi_bar.cov(t).inverse();
    const Mat& k = pi_bar.gain(t);
    Mat expect(4, 4);
    expect << k.transpose() * p * k, -k.transpose() * p, -p * k, p;
    EXPECT_LT((sur.steps[t].hessian() - expect).cwiseAbs().maxCoeff(), 1e-9);
    Eigen::SelfAdjointEigenSolver<Mat> es(sur.steps[t].hessian());
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(SurrogateExpand, RejectsNonPositiveEta) {
  Rng rng(3);
  const auto pi_bar = random_controller(rng, 2, 1, 1);
  const auto cost = QuadraticCostExpansion::zero(2, 1, 1);
  EXPECT_THROW(surrogate_expand(cost, pi_bar, 0.0), InvalidInput);
  EXPECT_THROW(surrogate_expand(cost, pi_bar, -1.0), InvalidInput);
}

TEST(SurrogateExpand, LargeEtaSolutionIsThePolicyLinearization) {
  Rng rng(4);
  const auto dyn = random_dynamics(rng, 5, 2, 2);
  const auto cost = random_cost(rng, 5, 2, 2);
  const auto pi_bar = random_controller(rng, 5, 2, 2);
  const auto ctrl = maxent_lqr_backward(dyn, surrogate_expand(cost, pi_bar, 1e12)).controller;
  for (int t = 0; t < 5; ++t) {
    EXPECT_LT((ctrl.gain(t) - pi_bar.gain(t)).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((ctrl.bias(t) - pi_bar.bias(t)).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((ctrl.cov(t) - pi_bar.cov(t)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(MaxentLqrBackward, SingleStepIsotropicCost) {
  const auto dyn = TimeVaryingLinGauss::constant(1, Mat::Identity(2, 4), Vec::Zero(2),
                                                 Mat::Identity(2, 2));
  auto cost = QuadraticCostExpansion::zero(1, 2, 2);
  cost.steps[0].luu = Mat::Identity(2, 2);
  const auto res = maxent_lqr_backward(dyn, cost);
  EXPECT_LT(res.controller.gain(0).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(res.controller.bias(0).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((res.controller.cov(0) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(res.q.regularized_steps, 0);
}

TEST(MaxentLqrBackward, ScalarSystemMatchesRiccatiRecursion) {
  const int horizon = 20;
  Mat g(1, 2);
  g << 1.0, 1.0;
  const auto dyn = TimeVaryingLinGauss::constant(horizon, g, Vec::Zero(1), Mat::Constant(1, 1, 0.01));
  auto cost = QuadraticCostExpansion::zero(horizon, 1, 1);
  for (auto& s : cost.steps) {
    s.lxx(0, 0) = 2.0;
    s.luu(0, 0) = 2.0;
  }
  const auto ctrl = maxent_lqr_backward(dyn, cost).controller;
  double p = 0.0;
  for (int t = horizon - 1; t >= 0; --t) {
    const double quu = 2.0 + p;
    EXPECT_NEAR(ctrl.gain(t)(0, 0), -p / quu, 1e-9) << "t=" << t;
    EXPECT_NEAR(ctrl.bias(t)(0), 0.0, 1e-9);
    EXPECT_NEAR(ctrl.cov(t)(0, 0), 1.0 / quu, 1e-9);
    p = 2.0 + p - p * p / quu;
  }
}

TEST(MaxentLqrBackward, ControllerSatisfiesQFunctionIdentities) {
  Rng rng(5);
  const auto dyn = random_dynamics(rng, 6, 3, 2);
  const auto res = maxent_lqr_backward(dyn, random_cost(rng, 6, 3, 2));
  for (int t = 0; t < 6; ++t) {
    const auto& q = res.q.steps[t];
    const Mat quu_inv = q.quu.inverse();
    EXPECT_LT((res.controller.gain(t) + quu_inv * q.qux).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((res.controller.cov(t) - quu_inv).cwiseAbs().maxCoeff(), 1e-9);
    // In absolute coordinates the action minimizing Q at x = 0 is the bias.
    EXPECT_LT((res.controller.bias(t) + quu_inv * q.qu).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(MaxentLqrBackward, BeatsRandomPerturbations) {
  Rng rng(6);
  const int horizon = 5;
  const auto dyn = random_dynamics(rng, horizon, 2, 2);
  const auto cost = random_cost(rng, horizon, 2, 2);
  const GaussianState init = random_init(rng, 2);
  const auto opt = maxent_lqr_backward(dyn, cost).controller;
  const double best = maxent_objective(opt, dyn, cost, init);
  std::uniform_real_distribution<double> unif(-0.3, 0.3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<LinGaussStep> steps;
    for (int t = 0; t < horizon; ++t) {
      const double scale = 1.0 + unif(rng);
      steps.push_back({opt.gain(t) + random_matrix(rng, 2, 2, 0.05),
                       opt.bias(t) + random_vector(rng, 2, 0.05),
                       scale * opt.cov(t) + random_pd(rng, 2, 0.0, 0.05)});
    }
    const TimeVaryingLinGauss perturbed(std::move(steps));
    EXPECT_LE(best, maxent_objective(perturbed, dyn, cost, init) + 1e-10);
  }
}

TEST(MaxentLqrBackward, RegularizesIndefiniteActionHessian) {
  Rng rng(7);
  const auto dyn = random_dynamics(rng, 3, 2, 1);
  auto cost = random_cost(rng, 3, 2, 1);
  cost.steps[2].luu(0, 0) = -5.0;
  cost.steps[2].lux.setZero();
  const auto res = maxent_lqr_backward(dyn, cost);
  EXPECT_GE(res.q.regularized_steps, 1);
  EXPECT_GT(res.q.steps[2].regularization, 0.0);
  Eigen::LLT<Mat> llt(res.q.steps[2].quu);
  EXPECT_EQ(llt.info(), Eigen::Success);
}

TEST(MaxentLqrBackward, DivergentRecursionNamesTheStep) {
  const int horizon = 30;
  Mat g(1, 2);
  g << 50.0, 1e-6;
  const auto dyn = TimeVaryingLinGauss::constant(horizon, g, Vec::Zero(1), Mat::Identity(1, 1));
  auto cost = QuadraticCostExpansion::zero(horizon, 1, 1);
  for (auto& s : cost.steps) {
    s.lxx(0, 0) = 1.0;
    s.luu(0, 0) = 1.0;
  }
  try {
    maxent_lqr_backward(dyn, cost);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos) << e.what();
  }
}

TEST(MaxentLqrBackward, RejectsDimensionMismatch) {
  Rng rng(8);
  const auto dyn = random_dynamics(rng, 3, 2, 1);
  EXPECT_THROW(maxent_lqr_backward(dyn, random_cost(rng, 4, 2, 1)), InvalidInput);
  EXPECT_THROW(maxent_lqr_backward(dyn, random_cost(rng, 3, 2, 2)), InvalidInput);
}

TEST(CStep, ZeroCostReturnsThePolicyLinearization) {
  Rng rng(9);
  const auto dyn = random_dynamics(rng, 4, 2, 1);
  const auto pi_bar = random_controller(rng, 4, 2, 1);
  const GaussianState init = random_init(rng, 2);
  for (double eps : {1e-3, 0.5, 10.0}) {
    const auto res = c_step(dyn, QuadraticCostExpansion::zero(4, 2, 1), pi_bar, eps, init);
    EXPECT_LE(res.achieved_kl, 1e-8);
    for (int t = 0; t < 4; ++t) {
      EXPECT_LT((res.controller.gain(t) - pi_bar.gain(t)).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_LT((res.controller.bias(t) - pi_bar.bias(t)).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(CStep, TinyEpsilonPinsTheSolutionToThePolicyLinearization) {
  Rng rng(10);
  const auto dyn = random_dynamics(rng, 5, 2, 2);
  const auto pi_bar = random_controller(rng, 5, 2, 2);
  const auto res = c_step(dyn, random_cost(rng, 5, 2, 2), pi_bar, 1e-6, random_init(rng, 2));
  EXPECT_LE(res.achieved_kl, 1.05e-6);
  for (int t = 0; t < 5; ++t) {
    EXPECT_LT((res.controller.gain(t) - pi_bar.gain(t)).cwiseAbs().maxCoeff(), 1e-3);
    EXPECT_LT((res.controller.bias(t) - pi_bar.bias(t)).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(CStep, ScalarExampleMatchesGridSearchOracle) {
  const auto dyn = TimeVaryingLinGauss::constant(2, (Mat(1, 2) << 1.0, 1.0).finished(), Vec::Zero(1),
                                                 Mat::Constant(1, 1, 0.1));
  auto cost = QuadraticCostExpansion::zero(2, 1, 1);
  for (auto& s : cost.steps) {
    s.luu(0, 0) = 10.0;
    s.lu(0) = -10.0;  // 5 (u - 1)^2 up to a constant
  }
  const auto pi_bar = TimeVaryingLinGauss::constant(2, Mat::Zero(1, 1), Vec::Zero(1), Mat::Identity(1, 1));
  const GaussianState init{Vec::Zero(1), Mat::Constant(1, 1, 0.1)};
  const auto res = c_step(dyn, cost, pi_bar, 0.5, init);
  EXPECT_GE(res.achieved_kl, 0.475);
  EXPECT_LE(res.achieved_kl, 0.525);
  const auto oracle = test::dual_grid_oracle(dyn, cost, pi_bar, 0.5, init);
  for (int t = 0; t < 2; ++t) {
    EXPECT_NEAR(res.controller.bias(t)(0), oracle.controller.bias(t)(0), 1e-3);
    EXPECT_NEAR(res.controller.gain(t)(0, 0), oracle.controller.gain(t)(0, 0), 1e-3);
  }
}

TEST(CStep, ActiveConstraintIsMetAndDualTraceIsMonotone) {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const int horizon = 3 + trial % 4;
    const auto dyn = random_dynamics(rng, horizon, 2, 2);
    const auto cost = random_cost(rng, horizon, 2, 2, 5.0);
    const auto pi_bar = random_controller(rng, horizon, 2, 2);
    const GaussianState init = random_init(rng, 2);
    const double eps = 0.2;
    const auto res = c_step(dyn, cost, pi_bar, eps, init);
    ASSERT_TRUE(res.dual.converged) << "trial " << trial;
    EXPECT_FALSE(res.dual.slack);
    EXPECT_GE(res.achieved_kl, 0.95 * eps);
    EXPECT_LE(res.achieved_kl, 1.05 * eps);
    EXPECT_NEAR(res.achieved_kl, traj_kl(res.controller, pi_bar, dyn, init), 1e-12);
    EXPECT_LT(res.dual.eta_lo, res.dual.eta_hi);
    auto trace = res.dual.trace;
    std::sort(trace.begin(), trace.end(),
              [](const DualCandidate& a, const DualCandidate& b) { return a.eta < b.eta; });
    for (std::size_t i = 1; i < trace.size(); ++i) {
      if (trace[i].valid && trace[i - 1].valid) {
        EXPECT_LE(trace[i].kl, trace[i - 1].kl + 1e-9) << "trial " << trial;
      }
    }
    // The constrained update improves the true cost over the starting point.
    const double local_cost = expected_cost(propagate_marginals(res.controller, dyn, init), cost);
    const double prior_cost = expected_cost(propagate_marginals(pi_bar, dyn, init), cost);
    EXPECT_LE(local_cost, prior_cost + 1e-9);
  }
}

TEST(CStep, SlackConstraintReturnsUnconstrainedSide) {
  Rng rng(12);
  const auto dyn = random_dynamics(rng, 3, 1, 1);
  const auto pi_bar = random_controller(rng, 3, 1, 1);
  auto cost = QuadraticCostExpansion::zero(3, 1, 1);
  for (auto& s : cost.steps) s.luu(0, 0) = 1e-3;
  const auto res = c_step(dyn, cost, pi_bar, 1e3, random_init(rng, 1));
  EXPECT_TRUE(res.dual.slack);
  EXPECT_LE(res.achieved_kl, 1e3);
}

TEST(CStep, WarmStartDoesNotChangeTheAnswer) {
  Rng rng(13);
  const auto dyn = random_dynamics(rng, 4, 2, 1);
  const auto cost = random_cost(rng, 4, 2, 1, 3.0);
  const auto pi_bar = random_controller(rng, 4, 2, 1);
  const GaussianState init = random_init(rng, 2);
  const auto cold = c_step(dyn, cost, pi_bar, 0.3, init, 1.0);
  const auto warm = c_step(dyn, cost, pi_bar, 0.3, init, cold.dual.eta * 3.0);
  EXPECT_NEAR(cold.achieved_kl, warm.achieved_kl, 0.3 * 2e-3);
  for (int t = 0; t < 4; ++t) {
    EXPECT_LT((cold.controller.bias(t) - warm.controller.bias(t)).cwiseAbs().maxCoeff(), 1e-2);
  }
}

TEST(CStep, RejectsInvalidArguments) {
  Rng rng(14);
  const auto dyn = random_dynamics(rng, 3, 1, 1);
  const auto pi_bar = random_controller(rng, 3, 1, 1);
  const auto cost = QuadraticCostExpansion::zero(3, 1, 1);
  const GaussianState init{Vec::Zero(1), Mat::Identity(1, 1)};
  EXPECT_THROW(c_step(dyn, cost, pi_bar, 0.0, init), InvalidInput);
  EXPECT_THROW(c_step(dyn, cost, random_controller(rng, 4, 1, 1), 0.1, init), InvalidInput);
}

}  // namespace
}  // namespace mdgps
