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

#include "mdgps/fitting.hpp"

#include <fmt/format.h>

#include "mdgps/errors.hpp"
#include "mdgps/log.hpp"

namespace mdgps {

int SampleSet::dx() const { return rollouts.empty() ? 0 : static_cast<int>(rollouts[0].states[0].size()); }
int SampleSet::du() const { return rollouts.empty() ? 0 : static_cast<int>(rollouts[0].actions[0].size()); }

void SampleSet::validate() const {
  if (rollouts.empty()) throw InvalidInput("sample set is empty");
  const int horizon = rollouts[0].horizon();
  if (horizon <= 0) throw InvalidInput("rollouts must have positive length");
  const auto dxv = dx();
  const auto duv = du();
  for (const auto& r : rollouts) {
    if (r.horizon() != horizon || static_cast<int>(r.actions.size()) != horizon) {
      throw InvalidInput("rollouts in a sample set must share the horizon");
    }
    for (int t = 0; t < horizon; ++t) {
      if (r.states[t].size() != dxv || r.actions[t].size() != duv) {
        throw InvalidInput("rollouts in a sample set must share state and action dimensions");
      }
    }
  }
}

Mat joint_vectors(const SampleSet& samples, FitMode mode) {
  samples.validate();
  const int horizon = samples.horizon();
  const int dx = samples.dx();
  const int du = samples.du();
  const int steps = mode == FitMode::kDynamics ? horizon - 1 : horizon;
  const int dim = mode == FitMode::kDynamics ? 2 * dx + du : dx + du;
  Mat out(static_cast<Eigen::Index>(steps) * samples.size(), dim);
  Eigen::Index row = 0;
  for (const auto& r : samples.rollouts) {
    for (int t = 0; t < steps; ++t) {
      if (mode == FitMode::kDynamics) {
        out.row(row++) << r.states[t].transpose(), r.actions[t].transpose(), r.states[t + 1].transpose();
      } else {
        out.row(row++) << r.states[t].transpose(), r.actions[t].transpose();
      }
    }
  }
  return out;
}

LinGaussStep fit_conditional(const Mat& inputs, const Mat& outputs, const GmmPrior& prior,
                             const FitOptions& options) {
  const auto n = inputs.rows();
  const auto din = inputs.cols();
  const auto dout = outputs.cols();
  if (n == 0 || outputs.rows() != n) throw InvalidInput("fit_conditional: empty or mismatched data");

  Mat joint(n, din + dout);
  joint << inputs, outputs;
  const Vec emp_mean = joint.colwise().mean();
  const Mat centered = joint.rowwise() - emp_mean.transpose();
  const double nd = static_cast<double>(n);
  const Mat emp_scatter = centered.transpose() * centered;  // N * empirical covariance

  Vec mean = emp_mean;
  Mat sigma = emp_scatter / nd;
  const double strength = prior.components.empty() ? 0.0 : prior.strength;
  if (strength > 0.0) {
    if (prior.dim() != din + dout) {
      throw InvalidInput(fmt::format("prior dimension {} does not match joint dimension {}",
                                     prior.dim(), din + dout));
    }
    const auto [mu0, sigma0] = prior.moments_at(emp_mean);
    const double m = strength;
    const double n0 = strength;
    const Vec d = emp_mean - mu0;
    mean = (nd * emp_mean + m * mu0) / (nd + m);
    sigma = (emp_scatter + n0 * sigma0 + (nd * m / (nd + m)) * d * d.transpose()) / (nd + n0);
  }
  sigma = linalg::symmetrize(sigma);

  if (n < din + 1 && strength <= 0.0) {
    logger().debug("regression with {} samples for {} inputs is under-determined", n, din);
  }

  const Mat sii = sigma.topLeftCorner(din, din);
  const Mat soi = sigma.bottomLeftCorner(dout, din);
  Eigen::LLT<Mat> llt(sii);
  if (llt.info() != Eigen::Success) {
    const double scale = std::max(sii.trace() / static_cast<double>(din), 1e-12);
    double ridge = 1e-10 * scale;
    for (int attempt = 0; attempt < 30; ++attempt, ridge *= 10.0) {
      llt.compute(sii + ridge * Mat::Identity(din, din));
      if (llt.info() == Eigen::Success) break;
    }
    if (llt.info() != Eigen::Success) throw NumericalError("fit_conditional: input covariance is singular");
    logger().debug("fit_conditional: added ridge {} to a singular input covariance", ridge);
  }
  Mat gain = llt.solve(soi.transpose()).transpose();
  Vec bias = mean.tail(dout) - gain * mean.head(din);
  Mat cov = sigma.bottomRightCorner(dout, dout) - gain * sii * gain.transpose();
  cov = linalg::floor_eigenvalues(cov, options.covariance_floor);
  return {std::move(gain), std::move(bias), std::move(cov)};
}

TimeVaryingLinGauss fit_linear_gaussian(const SampleSet& samples, const GmmPrior& prior,
                                        FitMode mode, int horizon, const FitOptions& options) {
  samples.validate();
  if (samples.horizon() != horizon) {
    throw InvalidInput(fmt::format("samples have horizon {}, expected {}", samples.horizon(), horizon));
  }
  const int dx = samples.dx();
  const int du = samples.du();
  const int n = samples.size();
  std::vector<LinGaussStep> steps;
  steps.reserve(horizon);
  if (mode == FitMode::kDynamics) {
    if (horizon < 2) throw InvalidInput("dynamics fitting needs a horizon of at least 2");
    for (int t = 0; t + 1 < horizon; ++t) {
      Mat in(n, dx + du);
      Mat out(n, dx);
      for (int j = 0; j < n; ++j) {
        const auto& r = samples.rollouts[j];
        in.row(j) << r.states[t].transpose(), r.actions[t].transpose();
        out.row(j) = r.states[t + 1].transpose();
      }
      steps.push_back(fit_conditional(in, out, prior, options));
    }
    steps.push_back(steps.back());
  } else {
    for (int t = 0; t < horizon; ++t) {
      Mat in(n, dx);
      Mat out(n, du);
      for (int j = 0; j < n; ++j) {
        in.row(j) = samples.rollouts[j].states[t].transpose();
        out.row(j) = samples.rollouts[j].actions[t].transpose();
      }
      steps.push_back(fit_conditional(in, out, prior, options));
    }
  }
  return TimeVaryingLinGauss(std::move(steps));
}

Mat policy_joint_vectors(const std::vector<Vec>& states, const GlobalPolicy& policy) {
  Mat out(static_cast<Eigen::Index>(states.size()), policy.state_dim() + policy.action_dim());
  for (std::size_t j = 0; j < states.size(); ++j) {
    out.row(static_cast<Eigen::Index>(j)) << states[j].transpose(), policy.mean(states[j]).transpose();
  }
  return out;
}

TimeVaryingLinGauss fit_policy_linearization(const SampleSet& samples, const GlobalPolicy& policy,
                                             const GmmPrior& prior, PolicyFitTarget target,
                                             const FitOptions& options) {
  samples.validate();
  if (samples.dx() != policy.state_dim() || samples.du() != policy.action_dim()) {
    throw InvalidInput("policy linearization: sample dimensions do not match the policy");
  }
  const int horizon = samples.horizon();
  const int n = samples.size();
  const int dx = samples.dx();
  const int du = samples.du();
  std::vector<LinGaussStep> steps;
  steps.reserve(horizon);
  for (int t = 0; t < horizon; ++t) {
    Mat in(n, dx);
    Mat out(n, du);
    for (int j = 0; j < n; ++j) {
      const Vec& x = samples.rollouts[j].states[t];
      in.row(j) = x.transpose();
      out.row(j) = (target == PolicyFitTarget::kPolicyMean ? policy.mean(x)
                                                            : samples.rollouts[j].actions[t])
                       .transpose();
    }
    LinGaussStep s = fit_conditional(in, out, prior, options);
    s.cov = policy.cov();
    steps.push_back(std::move(s));
  }
  return TimeVaryingLinGauss(std::move(steps));
}

}  // namespace mdgps
