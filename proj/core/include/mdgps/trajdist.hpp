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

#include <Eigen/Cholesky>

#include <vector>

#include "mdgps/linalg.hpp"

namespace mdgps {

/// One affine-Gaussian conditional N(gain * in + bias, cov).
struct LinGaussStep {
  Mat gain;
  Vec bias;
  Mat cov;
};

/// A length-T sequence of affine-Gaussian conditionals.
///
/// Used for local controllers p(u|x) (in = state, out = action), for global
/// policy linearizations, and for fitted dynamics p(x'|x,u) (in = [x; u],
/// out = x'). Every covariance is Cholesky-factored on construction; failure
/// to factor (or asymmetry beyond 1e-10) throws InvalidInput. Instances are
/// immutable.
class TimeVaryingLinGauss {
 public:
  TimeVaryingLinGauss() = default;
  explicit TimeVaryingLinGauss(std::vector<LinGaussStep> steps);

  /// Same conditional repeated over `horizon` steps.
  static TimeVaryingLinGauss constant(int horizon, const Mat& gain, const Vec& bias,
                                      const Mat& cov);

  int horizon() const { return static_cast<int>(steps_.size()); }
  int in_dim() const { return steps_.empty() ? 0 : static_cast<int>(steps_[0].gain.cols()); }
  int out_dim() const { return steps_.empty() ? 0 : static_cast<int>(steps_[0].gain.rows()); }

  const LinGaussStep& step(int t) const { return steps_.at(t); }
  const std::vector<LinGaussStep>& steps() const { return steps_; }
  const Mat& gain(int t) const { return steps_.at(t).gain; }
  const Vec& bias(int t) const { return steps_.at(t).bias; }
  const Mat& cov(int t) const { return steps_.at(t).cov; }

  /// Lower Cholesky factor of cov(t).
  const Mat& chol(int t) const { return chol_.at(t); }
  double log_det_cov(int t) const { return log_det_.at(t); }
  Mat precision(int t) const;

  Vec mean(int t, const Vec& in) const { return gain(t) * in + bias(t); }

 private:
  std::vector<LinGaussStep> steps_;
  std::vector<Mat> chol_;
  std::vector<double> log_det_;
};

struct GaussianState {
  Vec mean;
  Mat cov;
};

/// Per-step joint state-action moments under a controller and dynamics.
struct GaussianMarginals {
  int dx = 0;
  int du = 0;
  std::vector<Vec> joint_mean;  // [x_t; u_t]
  std::vector<Mat> joint_cov;
  std::vector<Vec> next_mean;   // x_{t+1}
  std::vector<Mat> next_cov;

  int horizon() const { return static_cast<int>(joint_mean.size()); }
  Vec state_mean(int t) const { return joint_mean[t].head(dx); }
  Mat state_cov(int t) const { return joint_cov[t].topLeftCorner(dx, dx); }
};

/// Second-order expansion of l(x,u) around (x_hat, u_hat):
/// l ~ 0.5 d'H d + g'd + l0 with d = [x - x_hat; u - u_hat].
struct CostStep {
  Mat lxx;
  Mat luu;
  Mat lux;  // du x dx
  Vec lx;
  Vec lu;
  double l0 = 0.0;
  Vec x_hat;
  Vec u_hat;

  Mat hessian() const;
  Vec gradient() const;
  double evaluate(const Vec& x, const Vec& u) const;

  static CostStep zero(int dx, int du);
};

struct QuadraticCostExpansion {
  std::vector<CostStep> steps;

  int horizon() const { return static_cast<int>(steps.size()); }
  int dx() const { return steps.empty() ? 0 : static_cast<int>(steps[0].lx.size()); }
  int du() const { return steps.empty() ? 0 : static_cast<int>(steps[0].lu.size()); }

  /// Smallest eigenvalue of the full (dx+du) Hessian over all steps; may be
  /// negative before regularization.
  double min_hessian_eigenvalue() const;

  static QuadraticCostExpansion zero(int horizon, int dx, int du);
};

/// E_{x ~ N(state_mean, state_cov)}[KL(p(.|x) || q(.|x))] at step t, in closed form.
double kl_step(const TimeVaryingLinGauss& p, const TimeVaryingLinGauss& q, int t,
               const Vec& state_mean, const Mat& state_cov);

/// Moments of (x_t, u_t) by forward propagation from N(init.mean, init.cov).
GaussianMarginals propagate_marginals(const TimeVaryingLinGauss& ctrl,
                                      const TimeVaryingLinGauss& dyn, const GaussianState& init);

/// KL(p(tau) || q(tau)) for two controllers sharing dynamics and initial state;
/// the sum of kl_step over the marginals of p.
double traj_kl(const TimeVaryingLinGauss& p, const TimeVaryingLinGauss& q,
               const TimeVaryingLinGauss& dyn, const GaussianState& init);

/// Per-step KL terms of traj_kl.
std::vector<double> traj_kl_per_step(const TimeVaryingLinGauss& p, const TimeVaryingLinGauss& q,
                                     const GaussianMarginals& p_marginals);

std::vector<double> expected_cost_per_step(const GaussianMarginals& marg,
                                           const QuadraticCostExpansion& cost);

/// Sum over t of 0.5 tr(H S) + 0.5 m'H m + g'm + l0, with m the marginal mean
/// relative to the expansion point.
double expected_cost(const GaussianMarginals& marg, const QuadraticCostExpansion& cost);

/// Per-step differential entropy 0.5 log|2 pi e C_t|.
std::vector<double> entropy(const TimeVaryingLinGauss& ctrl);

/// KL(N(m1, S1) || N(m2, S2)).
double gaussian_kl(const Vec& mean_p, const Mat& cov_p, const Vec& mean_q, const Mat& cov_q);

}  // namespace mdgps
