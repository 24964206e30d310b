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

#include <cstdint>
#include <vector>

#include "mdgps/linalg.hpp"

namespace mdgps {

struct GmmComponent {
  double weight = 0.0;
  Vec mean;
  Mat cov;
};

/// Gaussian mixture over joint vectors ([x; u; x'] for dynamics, [x; u] for
/// policies) used as a regression prior.
struct GmmPrior {
  std::vector<GmmComponent> components;
  /// Pseudo-count of the prior in the conjugate update.
  double strength = 1.0;
  /// Set when some component covariance needed eigenvalue flooring.
  bool regularized = false;
  /// Mean per-point log-likelihood after each EM iteration of the kept restart.
  std::vector<double> log_likelihood_trace;

  int dim() const { return components.empty() ? 0 : static_cast<int>(components[0].mean.size()); }
  int size() const { return static_cast<int>(components.size()); }

  /// Posterior component probabilities for a point.
  Vec responsibilities(const Vec& point) const;

  /// Mean and covariance of the mixture reweighted by the responsibilities of
  /// `point`.
  std::pair<Vec, Mat> moments_at(const Vec& point) const;

  /// Mean log-likelihood of the rows of `data`.
  double mean_log_likelihood(const Mat& data) const;
};

struct GmmOptions {
  int n_components = 4;
  int max_em_iters = 100;
  int restarts = 2;
  double tolerance = 1e-6;
  double strength = 1.0;
  /// Covariance eigenvalue floor relative to the data scale.
  double min_eigenvalue = 1e-6;
  std::uint64_t seed = 0;
};

/// EM fit of a Gaussian mixture to the rows of `data`. Stops once the mean
/// log-likelihood rises by less than `tolerance`, keeps the best of
/// `restarts` runs, and is deterministic for a given seed.
GmmPrior fit_gmm(const Mat& data, const GmmOptions& options);

}  // namespace mdgps
