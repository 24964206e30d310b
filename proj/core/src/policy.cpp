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

#include "mdgps/policy.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mdgps/errors.hpp"
#include "mdgps/log.hpp"
#include "mdgps/random.hpp"

namespace mdgps {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LayerView {
  Eigen::Map<const RowMat> w;
  Eigen::Map<const Vec> b;
};

std::vector<LayerView> layer_views(const Vec& params, const std::vector<int>& sizes) {
  std::vector<LayerView> out;
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l];
    const int o = sizes[l + 1];
    out.push_back({Eigen::Map<const RowMat>(params.data() + offset, o, in),
                   Eigen::Map<const Vec>(params.data() + offset + o * in, o)});
    offset += static_cast<Eigen::Index>(o) * in + o;
  }
  return out;
}

Mat normalize_obs(const Mat& obs, const InputNormalization& norm) {
  return ((obs.colwise() - norm.shift).array().colwise() * norm.scale.array()).matrix();
}

void validate_selector(const std::vector<int>& selector, int state_dim) {
  if (selector.empty()) throw InvalidInput("policy observation selector is empty");
  for (int idx : selector) {
    if (idx < 0 || idx >= state_dim) {
      throw InvalidInput(fmt::format("selector index {} outside state dimension {}", idx, state_dim));
    }
  }
}

Mat validated_cov(Mat cov, int du) {
  linalg::check_dims(cov, du, du, "policy covariance");
  if (!linalg::is_symmetric(cov)) throw InvalidInput("policy covariance is not symmetric");
  cov = linalg::symmetrize(cov);
  if (linalg::min_eigenvalue(cov) < GlobalPolicy::kMinCovEigenvalue * (1.0 - 1e-9)) {
    throw InvalidInput("policy covariance eigenvalues must be >= 1e-6");
  }
  return cov;
}

}  // namespace

std::vector<int> GlobalPolicy::layer_sizes() const {
  std::vector<int> sizes{obs_dim()};
  sizes.insert(sizes.end(), hidden_.begin(), hidden_.end());
  sizes.push_back(action_dim_);
  return sizes;
}

int GlobalPolicy::param_count(const std::vector<int>& sizes) {
  int n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += sizes[l + 1] * sizes[l] + sizes[l + 1];
  return n;
}

GlobalPolicy GlobalPolicy::affine(int state_dim, int action_dim, std::vector<int> selector,
                                  Mat cov) {
  if (state_dim <= 0 || action_dim <= 0) throw InvalidInput("policy dimensions must be positive");
  validate_selector(selector, state_dim);
  GlobalPolicy p;
  p.arch_ = Architecture::kAffine;
  p.state_dim_ = state_dim;
  p.action_dim_ = action_dim;
  p.selector_ = std::move(selector);
  p.params_ = Vec::Zero(param_count(p.layer_sizes()));
  p.norm_ = {Vec::Zero(p.obs_dim()), Vec::Ones(p.obs_dim())};
  return p.with_cov(std::move(cov));
}

GlobalPolicy GlobalPolicy::mlp(int state_dim, int action_dim, std::vector<int> selector,
                               std::vector<int> hidden, Mat cov, std::uint64_t seed) {
  if (state_dim <= 0 || action_dim <= 0) throw InvalidInput("policy dimensions must be positive");
  validate_selector(selector, state_dim);
  if (hidden.empty() || std::any_of(hidden.begin(), hidden.end(), [](int h) { return h <= 0; })) {
    throw InvalidInput("network hidden layer sizes must be positive");
  }
  GlobalPolicy p;
  p.arch_ = Architecture::kMlp;
  p.state_dim_ = state_dim;
  p.action_dim_ = action_dim;
  p.selector_ = std::move(selector);
  p.hidden_ = std::move(hidden);
  p.norm_ = {Vec::Zero(p.obs_dim()), Vec::Ones(p.obs_dim())};

  const auto sizes = p.layer_sizes();
  p.params_ = Vec::Zero(param_count(sizes));
  Rng rng(seed);
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    const bool output_layer = l + 2 == sizes.size();
    if (!output_layer) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(out) * in; ++i) p.params_[offset + i] = u(rng);
    }
    offset += static_cast<Eigen::Index>(out) * in + out;
  }
  return p.with_cov(std::move(cov));
}

GlobalPolicy GlobalPolicy::from_parts(Architecture arch, int state_dim, int action_dim,
                                      std::vector<int> selector, std::vector<int> hidden,
                                      Vec params, Mat cov, InputNormalization norm) {
  GlobalPolicy p = arch == Architecture::kAffine
                       ? affine(state_dim, action_dim, std::move(selector), std::move(cov))
                       : mlp(state_dim, action_dim, std::move(selector), std::move(hidden),
                             std::move(cov), 0);
  linalg::check_dims(norm.shift, p.obs_dim(), "normalization shift");
  linalg::check_dims(norm.scale, p.obs_dim(), "normalization scale");
  if ((norm.scale.array() <= 0.0).any()) throw InvalidInput("normalization scale must be positive");
  if (!params.allFinite()) throw InvalidInput("policy parameters must be finite");
  p = p.with_params(std::move(params));
  p.norm_ = std::move(norm);
  return p;
}

GlobalPolicy GlobalPolicy::with_params(Vec params) const {
  if (params.size() != params_.size()) {
    throw InvalidInput(fmt::format("policy expects {} parameters, got {}", params_.size(), params.size()));
  }
  GlobalPolicy p = *this;
  p.params_ = std::move(params);
  return p;
}

GlobalPolicy GlobalPolicy::with_cov(Mat cov) const {
  GlobalPolicy p = *this;
  p.cov_ = validated_cov(std::move(cov), action_dim_);
  p.cov_chol_ = Eigen::LLT<Mat>(p.cov_).matrixL();
  return p;
}

GlobalPolicy GlobalPolicy::with_normalization(InputNormalization norm) const {
  linalg::check_dims(norm.shift, obs_dim(), "normalization shift");
  linalg::check_dims(norm.scale, obs_dim(), "normalization scale");
  if ((norm.scale.array() <= 0.0).any()) throw InvalidInput("normalization scale must be positive");
  GlobalPolicy p = *this;
  // First-layer pre-activation W((o - s) .* c) + b is kept identical.
  const auto sizes = layer_sizes();
  const int in = sizes[0];
  const int out = sizes[1];
  Eigen::Map<RowMat> w(p.params_.data(), out, in);
  Eigen::Map<Vec> b(p.params_.data() + static_cast<Eigen::Index>(out) * in, out);
  const Mat w_old = w;
  b += w_old * (norm_.scale.cwiseProduct(norm.shift - norm_.shift));
  w = w_old * norm_.scale.cwiseQuotient(norm.scale).asDiagonal();
  p.norm_ = std::move(norm);
  return p;
}

void GlobalPolicy::check_state(const Vec& state) const {
  if (state.size() != state_dim_) {
    throw InvalidInput(fmt::format("policy expects state of dimension {}, got {}", state_dim_, state.size()));
  }
}

Vec GlobalPolicy::observe(const Vec& state) const {
  check_state(state);
  Vec o(obs_dim());
  for (int i = 0; i < obs_dim(); ++i) o[i] = state[selector_[i]];
  return o;
}

Mat GlobalPolicy::mean_batch_obs(const Mat& observations) const {
  const auto layers = layer_views(params_, layer_sizes());
  Mat a = normalize_obs(observations, norm_);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Mat z = (layers[l].w * a).colwise() + layers[l].b;
    a = (l + 1 < layers.size()) ? Mat(z.cwiseMax(0.0)) : z;
  }
  return a;
}

Vec GlobalPolicy::mean(const Vec& state) const { return mean_batch_obs(observe(state)).col(0); }

double GlobalPolicy::weighted_sq_loss_and_grad(const Mat& observations, const Mat& targets,
                                               const std::vector<const Mat*>& precisions,
                                               double weight, Vec* grad) const {
  const auto sizes = layer_sizes();
  const auto layers = layer_views(params_, sizes);
  const Eigen::Index batch = observations.cols();

  std::vector<Mat> acts{normalize_obs(observations, norm_)};
  std::vector<Mat> pre;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Mat z = (layers[l].w * acts.back()).colwise() + layers[l].b;
    pre.push_back(z);
    acts.push_back(l + 1 < layers.size() ? Mat(z.cwiseMax(0.0)) : z);
  }
  const Mat err = acts.back() - targets;
  Mat delta(err.rows(), batch);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < batch; ++j) {
    const Vec pe = (*precisions[j]) * err.col(j);
    loss += err.col(j).dot(pe);
    delta.col(j) = 2.0 * weight * pe;
  }
  loss *= weight;
  if (grad == nullptr) return loss;

  grad->setZero(params_.size());
  std::vector<Eigen::Index> offsets;
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    offsets.push_back(offset);
    offset += static_cast<Eigen::Index>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
  }
  for (std::size_t li = layers.size(); li-- > 0;) {
    const int in = sizes[li];
    const int out = sizes[li + 1];
    Eigen::Map<RowMat> gw(grad->data() + offsets[li], out, in);
    Eigen::Map<Vec> gb(grad->data() + offsets[li] + static_cast<Eigen::Index>(out) * in, out);
    gw = delta * acts[li].transpose();
    gb = delta.rowwise().sum();
    if (li > 0) {
      Mat back = layers[li].w.transpose() * delta;
      delta = back.cwiseProduct((pre[li - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

std::pair<Mat, Vec> GlobalPolicy::affine_state_map() const {
  if (arch_ != Architecture::kAffine) throw InvalidInput("affine_state_map requires an affine policy");
  const auto layers = layer_views(params_, layer_sizes());
  const Mat w_obs = layers[0].w * norm_.scale.asDiagonal();
  Mat gain = Mat::Zero(action_dim_, state_dim_);
  for (int i = 0; i < obs_dim(); ++i) gain.col(selector_[i]) += w_obs.col(i);
  const Vec bias = layers[0].b - w_obs * norm_.shift;
  return {gain, bias};
}

PolicyOutput policy_eval(const GlobalPolicy& policy, const Vec& state) {
  return {policy.mean(state), policy.cov()};
}

void SStepDataset::validate(const GlobalPolicy& policy) const {
  if (tuples.empty()) throw InvalidInput("S-step dataset is empty");
  for (const auto& t : tuples) {
    linalg::check_dims(t.state, policy.state_dim(), "S-step state");
    linalg::check_dims(t.target_mean, policy.action_dim(), "S-step target mean");
    linalg::check_dims(t.target_precision, policy.action_dim(), policy.action_dim(), "S-step precision");
  }
}

namespace {

Mat stack_obs(const GlobalPolicy& policy, const SStepDataset& data) {
  Mat obs(policy.obs_dim(), data.size());
  for (int j = 0; j < data.size(); ++j) obs.col(j) = policy.observe(data.tuples[j].state);
  return obs;
}

Mat stack_targets(const SStepDataset& data, int du) {
  Mat y(du, data.size());
  for (int j = 0; j < data.size(); ++j) y.col(j) = data.tuples[j].target_mean;
  return y;
}

std::vector<const Mat*> precision_ptrs(const SStepDataset& data) {
  std::vector<const Mat*> out;
  out.reserve(data.tuples.size());
  for (const auto& t : data.tuples) out.push_back(&t.target_precision);
  return out;
}

// Sum over tuples of tr(P Sigma) - log|Sigma|.
double covariance_terms(const GlobalPolicy& policy, const SStepDataset& data) {
  const double log_det = linalg::log_det_pd(policy.cov(), "policy covariance");
  double total = 0.0;
  for (const auto& t : data.tuples) {
    if (!linalg::is_symmetric(t.target_precision)) throw InvalidInput("S-step precision is not symmetric");
    total += t.target_precision.cwiseProduct(policy.cov()).sum() - log_det;
  }
  return total;
}

void check_precisions_pd(const SStepDataset& data) {
  for (const auto& t : data.tuples) {
    Eigen::LLT<Mat> llt(t.target_precision);
    if (llt.info() != Eigen::Success) throw InvalidInput("S-step precision is not positive definite");
  }
}

}  // namespace

double s_step_loss(const GlobalPolicy& policy, const SStepDataset& dataset) {
  dataset.validate(policy);
  check_precisions_pd(dataset);
  const double quad = policy.weighted_sq_loss_and_grad(
      stack_obs(policy, dataset), stack_targets(dataset, policy.action_dim()),
      precision_ptrs(dataset), 1.0, nullptr);
  return covariance_terms(policy, dataset) + quad;
}

Vec s_step_loss_gradient(const GlobalPolicy& policy, const SStepDataset& dataset) {
  dataset.validate(policy);
  Vec grad;
  policy.weighted_sq_loss_and_grad(stack_obs(policy, dataset),
                                   stack_targets(dataset, policy.action_dim()),
                                   precision_ptrs(dataset), 1.0, &grad);
  return grad;
}

Mat optimal_covariance(const std::vector<Mat>& precisions) {
  if (precisions.empty()) throw InvalidInput("optimal_covariance: no precisions given");
  const auto du = precisions.front().rows();
  Mat mean = Mat::Zero(du, du);
  for (const auto& p : precisions) {
    linalg::check_dims(p, du, du, "precision");
    Eigen::LLT<Mat> llt(p);
    if (llt.info() != Eigen::Success) throw InvalidInput("optimal_covariance: precision is not PD");
    mean += p;
  }
  mean /= static_cast<double>(precisions.size());
  return linalg::floor_eigenvalues(linalg::inverse_pd(mean, "mean precision"),
                                   GlobalPolicy::kMinCovEigenvalue);
}

namespace {

struct SgdOutcome {
  Vec params;
  bool finite = true;
};

SgdOutcome run_sgd(const GlobalPolicy& policy, const Mat& obs, const Mat& targets,
                   const std::vector<const Mat*>& precisions, double precision_scale,
                   const SgdConfig& config, double learning_rate) {
  const int n = static_cast<int>(obs.cols());
  const int batch = std::clamp(config.batch_size, 1, n);
  Rng rng(config.seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  GlobalPolicy current = policy;
  Vec velocity = Vec::Zero(policy.params().size());
  Vec grad;
  int cursor = 0;
  Mat bo(obs.rows(), batch);
  Mat bt(targets.rows(), batch);
  std::vector<const Mat*> bp(batch);
  const double weight = 1.0 / (static_cast<double>(batch) * precision_scale);
  for (int step = 0; step < config.steps; ++step) {
    for (int j = 0; j < batch; ++j) {
      if (cursor == n) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const int idx = order[cursor++];
      bo.col(j) = obs.col(idx);
      bt.col(j) = targets.col(idx);
      bp[j] = precisions[idx];
    }
    const double loss = current.weighted_sq_loss_and_grad(bo, bt, bp, weight, &grad);
    if (!std::isfinite(loss) || !grad.allFinite()) return {current.params(), false};
    velocity = config.momentum * velocity - learning_rate * grad;
    current = current.with_params(current.params() + velocity);
  }
  if (!current.params().allFinite()) return {current.params(), false};
  return {current.params(), true};
}

}  // namespace

SStepResult s_step_train(const GlobalPolicy& policy, const SStepDataset& dataset,
                         const SgdConfig& config) {
  dataset.validate(policy);
  check_precisions_pd(dataset);
  SStepResult result;
  result.initial_loss = s_step_loss(policy, dataset);
  if (config.steps <= 0) {
    result.policy = policy;
    result.final_loss = result.initial_loss;
    return result;
  }

  GlobalPolicy start = policy;
  if (config.normalize_inputs) {
    const Mat obs = stack_obs(policy, dataset);
    const Vec shift = obs.rowwise().mean();
    const Vec var = (obs.colwise() - shift).rowwise().squaredNorm() / static_cast<double>(obs.cols());
    const Vec scale = var.cwiseSqrt().cwiseMax(1e-3).cwiseInverse();
    start = start.with_normalization({shift, scale});
  }

  const Mat obs = stack_obs(start, dataset);
  const Mat targets = stack_targets(dataset, start.action_dim());
  const auto precisions = precision_ptrs(dataset);
  double precision_scale = 0.0;
  for (const auto* p : precisions) precision_scale += p->trace();
  precision_scale /= static_cast<double>(precisions.size()) * start.action_dim();

  double lr = config.learning_rate;
  SgdOutcome outcome = run_sgd(start, obs, targets, precisions, precision_scale, config, lr);
  if (!outcome.finite) {
    lr *= 0.5;
    result.restarted = true;
    logger().warn("S-step diverged; restarting with learning rate {}", lr);
    outcome = run_sgd(start, obs, targets, precisions, precision_scale, config, lr);
    if (!outcome.finite) throw NumericalError("S-step diverged twice");
  }

  const double start_quad = start.weighted_sq_loss_and_grad(obs, targets, precisions, 1.0, nullptr);
  GlobalPolicy trained = start.with_params(outcome.params);
  const double trained_quad = trained.weighted_sq_loss_and_grad(obs, targets, precisions, 1.0, nullptr);
  if (!(trained_quad <= start_quad)) {
    trained = start;
    result.reverted_mean = true;
  }

  std::vector<Mat> precision_values;
  precision_values.reserve(dataset.tuples.size());
  for (const auto& t : dataset.tuples) precision_values.push_back(t.target_precision);
  result.policy = trained.with_cov(optimal_covariance(precision_values));
  result.final_loss = s_step_loss(result.policy, dataset);
  return result;
}

SStepResult s_step_solve_affine(const GlobalPolicy& policy, const SStepDataset& dataset) {
  if (policy.architecture() != Architecture::kAffine) {
    throw InvalidInput("s_step_solve_affine requires an affine policy");
  }
  dataset.validate(policy);
  check_precisions_pd(dataset);
  SStepResult result;
  result.initial_loss = s_step_loss(policy, dataset);

  // Unknown M = [A c] (du x (n + 1)) with mean A o + c on raw observations;
  // the normal equations are sum (z z') kron P theta = sum z kron (P y), z = [o; 1].
  const int du = policy.action_dim();
  const int n = policy.obs_dim();
  const int dim = du * (n + 1);
  Mat lhs = Mat::Zero(dim, dim);
  Vec rhs = Vec::Zero(dim);
  for (const auto& t : dataset.tuples) {
    Vec z(n + 1);
    z << policy.observe(t.state), 1.0;
    const Mat& p = t.target_precision;
    const Vec py = p * t.target_mean;
    for (int a = 0; a <= n; ++a) {
      rhs.segment(a * du, du) += z(a) * py;
      for (int b = 0; b <= n; ++b) lhs.block(a * du, b * du, du, du) += z(a) * z(b) * p;
    }
  }
  const Vec theta = Eigen::CompleteOrthogonalDecomposition<Mat>(lhs).solve(rhs);
  const Mat m = Eigen::Map<const Mat>(theta.data(), du, n + 1);
  const Mat a = m.leftCols(n);
  const Vec c = m.col(n);

  // Express in the policy's normalized coordinates: W = A diag(1 / scale), b = c + A shift.
  const auto& norm = policy.normalization();
  const Mat w = a * norm.scale.cwiseInverse().asDiagonal();
  const Vec b = c + a * norm.shift;
  Vec params(du * n + du);
  for (int r = 0; r < du; ++r) params.segment(r * n, n) = w.row(r).transpose();
  params.tail(du) = b;

  std::vector<Mat> precision_values;
  precision_values.reserve(dataset.tuples.size());
  for (const auto& t : dataset.tuples) precision_values.push_back(t.target_precision);
  result.policy = policy.with_params(std::move(params)).with_cov(optimal_covariance(precision_values));
  result.final_loss = s_step_loss(result.policy, dataset);
  return result;
}

}  // namespace mdgps
