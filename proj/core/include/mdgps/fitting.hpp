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

#include "mdgps/gmm.hpp"
#include "mdgps/policy.hpp"
#include "mdgps/samples.hpp"
#include "mdgps/trajdist.hpp"

namespace mdgps {

/// kDynamics regresses x_{t+1} on [x_t; u_t]; kPolicy regresses u_t on x_t.
enum class FitMode { kDynamics, kPolicy };

/// What the policy linearization regresses on.
enum class PolicyFitTarget { kPolicyMean, kSampledAction };

struct FitOptions {
  /// Eigenvalue floor applied to every fitted output covariance.
  double covariance_floor = 1e-6;
};

/// Joint vectors pooled over all steps: [x_t; u_t; x_{t+1}] for t < T-1
/// (dynamics) or [x_t; u_t] for every t (policy).
Mat joint_vectors(const SampleSet& samples, FitMode mode);

/// Per-step conditional Gaussian from the normal-inverse-Wishart posterior
/// that combines the step's empirical moments with the prior's moments at the
/// step's empirical mean. `inputs`/`outputs` hold one sample per row. With
/// prior strength 0 (or an empty prior) this is ordinary least squares.
LinGaussStep fit_conditional(const Mat& inputs, const Mat& outputs, const GmmPrior& prior,
                             const FitOptions& options = {});

/// Time-varying linear-Gaussian fit of a sample set. In dynamics mode the last
/// step has no successor and repeats the fit of step T-2.
TimeVaryingLinGauss fit_linear_gaussian(const SampleSet& samples, const GmmPrior& prior,
                                        FitMode mode, int horizon, const FitOptions& options = {});

/// Joint [x; mu(x)] vectors for a policy-mode prior over the given states.
Mat policy_joint_vectors(const std::vector<Vec>& states, const GlobalPolicy& policy);

/// Linearization of the global policy around the sampled states: per-step
/// regression of the policy mean (or of the sampled actions) on the state,
/// with the regression covariance replaced by the policy covariance.
TimeVaryingLinGauss fit_policy_linearization(const SampleSet& samples, const GlobalPolicy& policy,
                                             const GmmPrior& prior,
                                             PolicyFitTarget target = PolicyFitTarget::kPolicyMean,
                                             const FitOptions& options = {});

}  // namespace mdgps
