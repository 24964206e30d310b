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

enum class Architecture { kAffine, kMlp };

/// Fixed affine input transform applied to observations: (o - shift) .* scale.
struct InputNormalization {
  Vec shift;
  Vec scale;
};

/// Conditionally Gaussian global policy N(mu(o(x)), Sigma) with a state
/// independent covariance. The mean function is either affine or a fully
/// connected ReLU network; o(x) picks the observed state coordinates.
///
/// Parameters are a flat vector, layer by layer: weight matrix (row-major,
/// out x in) followed by the bias. Values are immutable; the with_* helpers
/// return modified copies.
class GlobalPolicy {
 public:
  static constexpr double kMinCovEigenvalue = 1e-6;

  GlobalPolicy() = default;

  /// Zero mean map, covariance `cov`.
  static GlobalPolicy affine(int state_dim, int action_dim, std::vector<int> selector, Mat cov);

  /// Hidden layers use uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and
  /// zero biases; the output layer starts at zero so the initial mean is 0.
  static GlobalPolicy mlp(int state_dim, int action_dim, std::vector<int> selector,
                          std::vector<int> hidden, Mat cov, std::uint64_t seed);

  /// Rebuilds a policy from stored parts (for checkpoints); validates every
  /// field. The normalization is taken as is.
  static GlobalPolicy from_parts(Architecture arch, int state_dim, int action_dim,
                                 std::vector<int> selector, std::vector<int> hidden, Vec params,
                                 Mat cov, InputNormalization norm);

  Architecture architecture() const { return arch_; }
  int state_dim() const { return state_dim_; }
  int obs_dim() const { return static_cast<int>(selector_.size()); }
  int action_dim() const { return action_dim_; }
  const std::vector<int>& selector() const { return selector_; }
  const std::vector<int>& hidden_sizes() const { return hidden_; }
  const Vec& params() const { return params_; }
  const Mat& cov() const { return cov_; }
  const Mat& cov_chol() const { return cov_chol_; }
  const InputNormalization& normalization() const { return norm_; }

  /// Layer widths from observation to action.
  std::vector<int> layer_sizes() const;
  static int param_count(const std::vector<int>& layer_sizes);

  GlobalPolicy with_params(Vec params) const;
  /// Throws InvalidInput unless cov is symmetric with eigenvalues >= 1e-6.
  GlobalPolicy with_cov(Mat cov) const;
  /// Changes the input transform while keeping the mean function identical.
  GlobalPolicy with_normalization(InputNormalization norm) const;

  Vec observe(const Vec& state) const;
  Vec mean(const Vec& state) const;

  /// Means for a batch of observations (columns).
  Mat mean_batch_obs(const Mat& observations) const;

  /// Gradient w.r.t. params of sum_j w_j (mu_j - y_j)' P_j (mu_j - y_j) over
  /// the batch, together with that value. `observations` and `targets` hold one
  /// column per tuple.
  double weighted_sq_loss_and_grad(const Mat& observations, const Mat& targets,
                                   const std::vector<const Mat*>& precisions, double weight,
                                   Vec* grad) const;

  /// Affine case only: the equivalent time-invariant conditional on the full
  /// state, as (gain, bias).
  std::pair<Mat, Vec> affine_state_map() const;

 private:
  void check_state(const Vec& state) const;

  Architecture arch_ = Architecture::kAffine;
  int state_dim_ = 0;
  int action_dim_ = 0;
  std::vector<int> selector_;
  std::vector<int> hidden_;
  Vec params_;
  Mat cov_;
  Mat cov_chol_;
  InputNormalization norm_;
};

struct PolicyOutput {
  Vec mean;
  Mat cov;
};

PolicyOutput policy_eval(const GlobalPolicy& policy, const Vec& state);

/// (x, local mean K x + k, local precision C^{-1}) supervision tuple.
struct SStepTuple {
  Vec state;
  Vec target_mean;
  Mat target_precision;
};

struct SStepDataset {
  std::vector<SStepTuple> tuples;

  int size() const { return static_cast<int>(tuples.size()); }
  /// Checks dimensions against the policy and PD precisions.
  void validate(const GlobalPolicy& policy) const;
};

/// Sum over tuples of tr(P Sigma) - log|Sigma| + (mu - mu_p)' P (mu - mu_p);
/// twice the summed KL(pi || p) up to the constant sum(log|C| + du).
double s_step_loss(const GlobalPolicy& policy, const SStepDataset& dataset);

/// Gradient of s_step_loss with respect to the mean parameters.
Vec s_step_loss_gradient(const GlobalPolicy& policy, const SStepDataset& dataset);

/// Minimizer over Sigma of sum_i tr(P_i Sigma) - M log|Sigma|: the inverse of
/// the mean precision, symmetrized and eigenvalue-floored.
Mat optimal_covariance(const std::vector<Mat>& precisions);

struct SgdConfig {
  int batch_size = 32;
  int steps = 2000;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  bool normalize_inputs = true;
  std::uint64_t seed = 0;
};

struct SStepResult {
  GlobalPolicy policy;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  bool restarted = false;
  bool reverted_mean = false;
};

/// Minibatch SGD with momentum on the mean parameters, then the closed-form
/// covariance. The per-batch objective is the mean weighted squared error
/// divided by the dataset's average precision scale tr(P)/du, which only
/// rescales the step. A non-finite loss halves the learning rate and restarts
/// once; a second failure throws NumericalError. With steps == 0 the policy is
/// returned unchanged.
SStepResult s_step_train(const GlobalPolicy& policy, const SStepDataset& dataset,
                         const SgdConfig& config);

/// Affine policies only: the exact minimizer of s_step_loss, i.e. the weighted
/// least-squares mean map followed by the closed-form covariance. The input
/// normalization is kept.
SStepResult s_step_solve_affine(const GlobalPolicy& policy, const SStepDataset& dataset);

}  // namespace mdgps
