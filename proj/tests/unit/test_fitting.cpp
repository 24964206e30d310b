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

#include "mdgps/errors.hpp"
#include "mdgps/fitting.hpp"
#include "mdgps/gmm.hpp"
#include "mdgps/policy.hpp"
#include "test_util.hpp"

namespace mdgps {
namespace {

using test::random_matrix;
using test::random_pd;
using test::random_vector;

Mat gaussian_rows(Rng& rng, int n, const Vec& mean, const Mat& cov) {
  const Mat chol = test::chol_psd(cov);
  Mat out(n, mean.size());
  for (int i = 0; i < n; ++i) out.row(i) = test::sample_gaussian(rng, mean, chol).transpose();
  return out;
}

// Ordinary least squares with an intercept: returns [gain | bias] for outputs
// regressed on inputs.
Mat ols(const Mat& in, const Mat& out) {
  Mat design(in.rows(), in.cols() + 1);
  design << in, Vec::Ones(in.rows());
  return design.colPivHouseholderQr().solve(out).transpose();
}

GmmPrior single_component(const Vec& mean, const Mat& cov, double strength) {
  GmmPrior prior;
  prior.components.push_back({1.0, mean, cov});
  prior.strength = strength;
  return prior;
}

SampleSet linear_samples(Rng& rng, int n, int horizon, const Mat& a, const Mat& b, const Vec& c,
                         double noise) {
  SampleSet set;
  const int dx = static_cast<int>(a.rows());
  const int du = static_cast<int>(b.cols());
  for (int j = 0; j < n; ++j) {
    Rollout r;
    Vec x = random_vector(rng, dx);
    for (int t = 0; t < horizon; ++t) {
      const Vec u = random_vector(rng, du);
      r.states.push_back(x);
      r.actions.push_back(u);
      r.costs.push_back(0.0);
      x = a * x + b * u + c + noise * random_vector(rng, dx);
    }
    set.rollouts.push_back(std::move(r));
  }
  return set;
}

TEST(FitGmm, SingleComponentMatchesSampleMoments) {
  Rng rng(3);
  const Vec mean = random_vector(rng, 3);
  const Mat cov = random_pd(rng, 3);
  const Mat data = gaussian_rows(rng, 2000, mean, cov);
  GmmOptions opt;
  opt.n_components = 1;
  opt.seed = 4;
  const GmmPrior gmm = fit_gmm(data, opt);
  ASSERT_EQ(gmm.size(), 1);
  const Vec emp_mean = data.colwise().mean();
  const Mat centered = data.rowwise() - emp_mean.transpose();
  const Mat emp_cov = centered.transpose() * centered / static_cast<double>(data.rows());
  EXPECT_NEAR(gmm.components[0].weight, 1.0, 1e-12);
  EXPECT_LT((gmm.components[0].mean - emp_mean).norm(), 1e-8);
  EXPECT_LT((gmm.components[0].cov - emp_cov).cwiseAbs().maxCoeff(), 1e-6);
  for (int d = 0; d < 3; ++d) {
    const double se = std::sqrt(emp_cov(d, d) / static_cast<double>(data.rows()));
    EXPECT_LT(std::abs(gmm.components[0].mean(d) - mean(d)), 3.0 * se);
  }
}

TEST(FitGmm, SeparatedClustersAreAssignedToDistinctComponents) {
  Rng rng(5);
  const int n = 300;
  Mat data(2 * n, 2);
  data.topRows(n) = gaussian_rows(rng, n, Vec::Constant(2, 10.0), Mat::Identity(2, 2));
  data.bottomRows(n) = gaussian_rows(rng, n, Vec::Constant(2, -10.0), Mat::Identity(2, 2));
  GmmOptions opt;
  opt.n_components = 2;
  opt.seed = 6;
  const GmmPrior gmm = fit_gmm(data, opt);
  for (int cluster = 0; cluster < 2; ++cluster) {
    int counts[2] = {0, 0};
    for (int i = cluster * n; i < (cluster + 1) * n; ++i) {
      const Vec r = gmm.responsibilities(data.row(i).transpose());
      Eigen::Index best = 0;
      r.maxCoeff(&best);
      ++counts[best];
    }
    EXPECT_GT(std::max(counts[0], counts[1]), static_cast<int>(0.99 * n));
  }
  const Vec r_pos = gmm.responsibilities(Vec::Constant(2, 10.0));
  const Vec r_neg = gmm.responsibilities(Vec::Constant(2, -10.0));
  Eigen::Index a = 0;
  Eigen::Index b = 0;
  r_pos.maxCoeff(&a);
  r_neg.maxCoeff(&b);
  EXPECT_NE(a, b);
}

TEST(FitGmm, LogLikelihoodIsNonDecreasing) {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat data = random_matrix(rng, 200, 3, 2.0);
    GmmOptions opt;
    opt.n_components = 3;
    opt.seed = static_cast<std::uint64_t>(trial);
    const GmmPrior gmm = fit_gmm(data, opt);
    ASSERT_FALSE(gmm.log_likelihood_trace.empty());
    for (std::size_t i = 1; i < gmm.log_likelihood_trace.size(); ++i) {
      EXPECT_GE(gmm.log_likelihood_trace[i], gmm.log_likelihood_trace[i - 1] - 1e-10);
    }
  }
}

TEST(FitGmm, WeightsSumToOneAndCovariancesArePositiveDefinite) {
  Rng rng(8);
  const Mat data = random_matrix(rng, 150, 4);
  GmmOptions opt;
  opt.seed = 1;
  const GmmPrior gmm = fit_gmm(data, opt);
  double total = 0.0;
  for (const auto& c : gmm.components) {
    EXPECT_GT(c.weight, 0.0);
    total += c.weight;
    Eigen::SelfAdjointEigenSolver<Mat> es(c.cov);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(FitGmm, RankDeficientDataIsRegularizedAndFlagged) {
  Rng rng(9);
  Mat data(100, 3);
  data.leftCols(2) = random_matrix(rng, 100, 2);
  data.col(2) = data.col(0) + data.col(1);
  GmmOptions opt;
  opt.n_components = 2;
  opt.seed = 2;
  const GmmPrior gmm = fit_gmm(data, opt);
  EXPECT_TRUE(gmm.regularized);
  for (const auto& c : gmm.components) {
    Eigen::SelfAdjointEigenSolver<Mat> es(c.cov);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(FitGmm, IsDeterministicGivenSeed) {
  Rng rng(10);
  const Mat data = random_matrix(rng, 120, 3);
  GmmOptions opt;
  opt.seed = 11;
  const GmmPrior a = fit_gmm(data, opt);
  const GmmPrior b = fit_gmm(data, opt);
  ASSERT_EQ(a.size(), b.size());
  for (int k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a.components[k].weight, b.components[k].weight);
    EXPECT_EQ(a.components[k].mean, b.components[k].mean);
    EXPECT_EQ(a.components[k].cov, b.components[k].cov);
  }
}

TEST(FitGmm, RejectsTooFewDistinctPoints) {
  Mat data = Mat::Ones(10, 2);
  GmmOptions opt;
  opt.n_components = 2;
  EXPECT_THROW(fit_gmm(data, opt), InvalidInput);
}

TEST(FitLinearGaussian, NoiselessScalarSystemIsRecoveredExactly) {
  Rng rng(12);
  const Mat a = Mat::Constant(1, 1, 2.0);
  const Mat b = Mat::Constant(1, 1, 1.0);
  const Vec c = Vec::Constant(1, 1.0);
  const SampleSet set = linear_samples(rng, 5, 6, a, b, c, 0.0);
  const auto fit = fit_linear_gaussian(set, GmmPrior{}, FitMode::kDynamics, 6);
  for (int t = 0; t < fit.horizon(); ++t) {
    EXPECT_NEAR(fit.gain(t)(0, 0), 2.0, 1e-8);
    EXPECT_NEAR(fit.gain(t)(0, 1), 1.0, 1e-8);
    EXPECT_NEAR(fit.bias(t)(0), 1.0, 1e-8);
    EXPECT_NEAR(fit.cov(t)(0, 0), 1e-6, 1e-12);
  }
}

TEST(FitLinearGaussian, ZeroStrengthEqualsOrdinaryLeastSquares) {
  Rng rng(13);
  const Mat a = random_matrix(rng, 2, 2, 0.5);
  const Mat b = random_matrix(rng, 2, 1);
  const Vec c = random_vector(rng, 2);
  const SampleSet set = linear_samples(rng, 20, 4, a, b, c, 0.1);
  GmmOptions gopt;
  gopt.seed = 1;
  GmmPrior prior = fit_gmm(joint_vectors(set, FitMode::kDynamics), gopt);
  prior.strength = 0.0;
  const auto fit = fit_linear_gaussian(set, prior, FitMode::kDynamics, 4);
  for (int t = 0; t < 3; ++t) {
    Mat in(20, 3);
    Mat out(20, 2);
    for (int j = 0; j < 20; ++j) {
      in.row(j) << set.rollouts[j].states[t].transpose(), set.rollouts[j].actions[t].transpose();
      out.row(j) = set.rollouts[j].states[t + 1].transpose();
    }
    const Mat oracle = ols(in, out);
    EXPECT_LT((fit.gain(t) - oracle.leftCols(3)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((fit.bias(t) - oracle.col(3)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(FitLinearGaussian, NoisyFitWithPriorIsWithinRegressionErrorOfTruth) {
  Rng rng(14);
  const Mat a = Mat::Constant(1, 1, 0.9);
  const Mat b = Mat::Constant(1, 1, 0.5);
  const Vec c = Vec::Constant(1, 0.2);
  const double noise = 0.1;
  const int n = 50;
  const SampleSet set = linear_samples(rng, n, 3, a, b, c, noise);
  GmmOptions gopt;
  gopt.seed = 2;
  gopt.n_components = 2;
  const GmmPrior prior = fit_gmm(joint_vectors(set, FitMode::kDynamics), gopt);
  const auto fit = fit_linear_gaussian(set, prior, FitMode::kDynamics, 3);
  for (int t = 0; t < 2; ++t) {
    Mat design(n, 3);
    Mat out(n, 1);
    for (int j = 0; j < n; ++j) {
      design.row(j) << set.rollouts[j].states[t](0), set.rollouts[j].actions[t](0), 1.0;
      out(j, 0) = set.rollouts[j].states[t + 1](0);
    }
    const Mat coef = design.colPivHouseholderQr().solve(out);
    const double resid = (out - design * coef).squaredNorm() / (n - 3);
    const Mat cov_coef = resid * (design.transpose() * design).inverse();
    const Vec truth = (Vec(3) << 0.9, 0.5, 0.2).finished();
    const Vec fitted = (Vec(3) << fit.gain(t)(0, 0), fit.gain(t)(0, 1), fit.bias(t)(0)).finished();
    for (int k = 0; k < 3; ++k) {
      EXPECT_LT(std::abs(fitted(k) - truth(k)), 3.0 * std::sqrt(cov_coef(k, k))) << "t=" << t << " k=" << k;
    }
  }
}

TEST(FitLinearGaussian, LargeStrengthConvergesToPriorConditional) {
  Rng rng(15);
  const Vec mean = random_vector(rng, 3);
  const Mat cov = random_pd(rng, 3, 0.5);
  const GmmPrior prior = single_component(mean, cov, 1e6);
  const Mat in = random_matrix(rng, 10, 2);
  const Mat out = random_matrix(rng, 10, 1);
  const LinGaussStep s = fit_conditional(in, out, prior);
  const Mat gain = cov.block(2, 0, 1, 2) * cov.topLeftCorner(2, 2).inverse();
  const Vec bias = mean.tail(1) - gain * mean.head(2);
  const Mat cond = cov.bottomRightCorner(1, 1) - gain * cov.block(0, 2, 2, 1);
  EXPECT_LT((s.gain - gain).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LT((s.bias - bias).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LT((s.cov - cond).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(FitLinearGaussian, OutputCovarianceIsFlooredPositiveDefinite) {
  Rng rng(16);
  const SampleSet set = linear_samples(rng, 3, 5, random_matrix(rng, 3, 3), random_matrix(rng, 3, 2),
                                       random_vector(rng, 3), 0.0);
  const auto fit = fit_linear_gaussian(set, GmmPrior{}, FitMode::kDynamics, 5);
  for (int t = 0; t < fit.horizon(); ++t) {
    Eigen::SelfAdjointEigenSolver<Mat> es(fit.cov(t));
    EXPECT_GE(es.eigenvalues().minCoeff(), 1e-6 - 1e-15);
  }
}

TEST(FitLinearGaussian, RejectsHorizonMismatchAndEmptySamples) {
  Rng rng(17);
  const SampleSet set = linear_samples(rng, 4, 5, Mat::Identity(1, 1), Mat::Identity(1, 1),
                                       Vec::Zero(1), 0.1);
  EXPECT_THROW(fit_linear_gaussian(set, GmmPrior{}, FitMode::kDynamics, 6), InvalidInput);
  EXPECT_THROW(fit_linear_gaussian(SampleSet{}, GmmPrior{}, FitMode::kDynamics, 5), InvalidInput);
}

TEST(FitLinearGaussian, RejectsPriorOfWrongDimension) {
  Rng rng(18);
  const SampleSet set = linear_samples(rng, 4, 3, Mat::Identity(1, 1), Mat::Identity(1, 1),
                                       Vec::Zero(1), 0.1);
  const GmmPrior prior = single_component(Vec::Zero(5), Mat::Identity(5, 5), 1.0);
  EXPECT_THROW(fit_linear_gaussian(set, prior, FitMode::kDynamics, 3), InvalidInput);
}

TEST(FitPolicyLinearization, AffinePolicyIsRecovered) {
  Rng rng(19);
  const Mat a = random_matrix(rng, 2, 3);
  const Vec b = random_vector(rng, 2);
  Vec params(8);
  for (int r = 0; r < 2; ++r) params.segment(3 * r, 3) = a.row(r).transpose();
  params.tail(2) = b;
  const GlobalPolicy policy =
      GlobalPolicy::affine(3, 2, {0, 1, 2}, 0.3 * Mat::Identity(2, 2)).with_params(params);
  const SampleSet set = linear_samples(rng, 6, 4, 0.9 * Mat::Identity(3, 3),
                                       random_matrix(rng, 3, 2), Vec::Zero(3), 0.2);
  const auto fit = fit_policy_linearization(set, policy, GmmPrior{});
  for (int t = 0; t < 4; ++t) {
    EXPECT_LT((fit.gain(t) - a).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((fit.bias(t) - b).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_EQ(fit.cov(t), policy.cov());
  }
}

TEST(FitPolicyLinearization, ConstantPolicyGivesZeroGain) {
  Rng rng(20);
  Vec params = Vec::Zero(4);
  params(3) = 0.7;
  const GlobalPolicy policy =
      GlobalPolicy::affine(3, 1, {0, 1, 2}, Mat::Identity(1, 1)).with_params(params);
  const SampleSet set = linear_samples(rng, 6, 3, Mat::Identity(3, 3), random_matrix(rng, 3, 1),
                                       Vec::Zero(3), 0.2);
  const auto fit = fit_policy_linearization(set, policy, GmmPrior{});
  for (int t = 0; t < 3; ++t) {
    EXPECT_LT(fit.gain(t).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(fit.bias(t)(0), 0.7, 1e-9);
  }
}

TEST(FitPolicyLinearization, TanhMeanGainMatchesJacobianForTightStates) {
  Rng rng(21);
  std::normal_distribution<double> normal;
  for (double center : {0.0, 0.3, -0.5}) {
    const int n = 40;
    Mat in(n, 1);
    Mat out(n, 1);
    for (int j = 0; j < n; ++j) {
      in(j, 0) = center + 0.05 * normal(rng);
      out(j, 0) = std::tanh(in(j, 0));
    }
    const LinGaussStep s = fit_conditional(in, out, GmmPrior{});
    const double mean_x = in.col(0).mean();
    const double jac = 1.0 - std::tanh(mean_x) * std::tanh(mean_x);
    EXPECT_LT(std::abs(s.gain(0, 0) - jac), 0.1 * jac) << "center=" << center;
  }
}

TEST(FitPolicyLinearization, RejectsDimensionMismatch) {
  Rng rng(22);
  const GlobalPolicy policy = GlobalPolicy::affine(2, 1, {0, 1}, Mat::Identity(1, 1));
  const SampleSet set = linear_samples(rng, 3, 3, Mat::Identity(3, 3), random_matrix(rng, 3, 1),
                                       Vec::Zero(3), 0.2);
  EXPECT_THROW(fit_policy_linearization(set, policy, GmmPrior{}), InvalidInput);
}

}  // namespace
}  // namespace mdgps
