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

#include "mdgps/trajdist.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

#include "mdgps/errors.hpp"

namespace mdgps {

TimeVaryingLinGauss::TimeVaryingLinGauss(std::vector<LinGaussStep> steps)
    : steps_(std::move(steps)) {
  if (steps_.empty()) throw InvalidInput("TimeVaryingLinGauss: horizon must be positive");
  const auto out = steps_[0].gain.rows();
  const auto in = steps_[0].gain.cols();
  chol_.reserve(steps_.size());
  log_det_.reserve(steps_.size());
  for (std::size_t t = 0; t < steps_.size(); ++t) {
    const auto& s = steps_[t];
    if (s.gain.rows() != out || s.gain.cols() != in || s.bias.size() != out ||
        s.cov.rows() != out || s.cov.cols() != out) {
      throw InvalidInput(fmt::format("TimeVaryingLinGauss: inconsistent dimensions at step {}", t));
    }
    if (!s.cov.allFinite() || !s.gain.allFinite() || !s.bias.allFinite()) {
      throw InvalidInput(fmt::format("TimeVaryingLinGauss: non-finite entry at step {}", t));
    }
    if (!linalg::is_symmetric(s.cov)) {
      throw InvalidInput(fmt::format("TimeVaryingLinGauss: covariance at step {} is not symmetric", t));
    }
    Eigen::LLT<Mat> llt(s.cov);
    if (llt.info() != Eigen::Success) {
      throw InvalidInput(
          fmt::format("TimeVaryingLinGauss: covariance at step {} is not positive definite", t));
    }
    Mat l = llt.matrixL();
    log_det_.push_back(2.0 * l.diagonal().array().log().sum());
    chol_.push_back(std::move(l));
  }
}

TimeVaryingLinGauss TimeVaryingLinGauss::constant(int horizon, const Mat& gain, const Vec& bias,
                                                  const Mat& cov) {
  if (horizon <= 0) throw InvalidInput("TimeVaryingLinGauss: horizon must be positive");
  return TimeVaryingLinGauss(std::vector<LinGaussStep>(horizon, LinGaussStep{gain, bias, cov}));
}

Mat TimeVaryingLinGauss::precision(int t) const {
  const Mat& l = chol(t);
  Mat linv = l.triangularView<Eigen::Lower>().solve(Mat::Identity(l.rows(), l.cols()));
  return linalg::symmetrize(linv.transpose() * linv);
}

Mat CostStep::hessian() const {
  const auto dx = lxx.rows();
  const auto du = luu.rows();
  Mat h(dx + du, dx + du);
  h.topLeftCorner(dx, dx) = lxx;
  h.bottomRightCorner(du, du) = luu;
  h.bottomLeftCorner(du, dx) = lux;
  h.topRightCorner(dx, du) = lux.transpose();
  return h;
}

Vec CostStep::gradient() const {
  Vec g(lx.size() + lu.size());
  g << lx, lu;
  return g;
}

double CostStep::evaluate(const Vec& x, const Vec& u) const {
  const Vec dxv = x - x_hat;
  const Vec duv = u - u_hat;
  return 0.5 * dxv.dot(lxx * dxv) + 0.5 * duv.dot(luu * duv) + duv.dot(lux * dxv) + lx.dot(dxv) +
         lu.dot(duv) + l0;
}

CostStep CostStep::zero(int dx, int du) {
  return CostStep{Mat::Zero(dx, dx), Mat::Zero(du, du), Mat::Zero(du, dx), Vec::Zero(dx),
                  Vec::Zero(du),     0.0,                Vec::Zero(dx),     Vec::Zero(du)};
}

double QuadraticCostExpansion::min_hessian_eigenvalue() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : steps) m = std::min(m, linalg::min_eigenvalue(s.hessian()));
  return m;
}

QuadraticCostExpansion QuadraticCostExpansion::zero(int horizon, int dx, int du) {
  return QuadraticCostExpansion{std::vector<CostStep>(horizon, CostStep::zero(dx, du))};
}

double gaussian_kl(const Vec& mean_p, const Mat& cov_p, const Vec& mean_q, const Mat& cov_q) {
  Eigen::LLT<Mat> q_llt(cov_q);
  if (q_llt.info() != Eigen::Success) {
    throw InvalidInput("gaussian_kl: q covariance is not positive definite");
  }
  const double logdet_q = 2.0 * Mat(q_llt.matrixL()).diagonal().array().log().sum();
  const double logdet_p = linalg::log_det_pd(cov_p, "gaussian_kl: p covariance");
  const Vec diff = mean_p - mean_q;
  const double trace = q_llt.solve(cov_p).trace();
  const double maha = diff.dot(q_llt.solve(diff));
  return 0.5 * (trace + maha - static_cast<double>(mean_p.size()) + logdet_q - logdet_p);
}

namespace {

void check_controller_pair(const TimeVaryingLinGauss& p, const TimeVaryingLinGauss& q) {
  if (p.out_dim() != q.out_dim() || p.in_dim() != q.in_dim()) {
    throw InvalidInput(fmt::format("controller dimension mismatch: p is {}->{}, q is {}->{}",
                                   p.in_dim(), p.out_dim(), q.in_dim(), q.out_dim()));
  }
  if (p.horizon() != q.horizon()) {
    throw InvalidInput(fmt::format("controller horizon mismatch: {} vs {}", p.horizon(), q.horizon()));
  }
}

// Closed-form expected conditional KL given the Cholesky factor of q's covariance.
double expected_conditional_kl(const LinGaussStep& ps, double p_logdet, const LinGaussStep& qs,
                               const Mat& q_chol, double q_logdet, const Vec& m, const Mat& s) {
  const auto lq = q_chol.triangularView<Eigen::Lower>();
  // ||L^{-1} A||_F^2 = tr(A' Q^{-1} A)
  const Mat dk = ps.gain - qs.gain;
  const Vec db = dk * m + ps.bias - qs.bias;
  const Mat whitened_cov = lq.solve(ps.cov);
  const double trace = lq.transpose().solve(whitened_cov).trace();
  const Vec wdb = lq.solve(db);
  const Mat wdk = lq.solve(dk);
  const double gain_term = (wdk * s * wdk.transpose()).trace();
  const double du = static_cast<double>(ps.bias.size());
  return 0.5 * (trace + wdb.squaredNorm() + gain_term - du + q_logdet - p_logdet);
}

}  // namespace

double kl_step(const TimeVaryingLinGauss& p, const TimeVaryingLinGauss& q, int t,
               const Vec& state_mean, const Mat& state_cov) {
  check_controller_pair(p, q);
  if (t < 0 || t >= p.horizon()) throw InvalidInput(fmt::format("kl_step: step {} out of range", t));
  linalg::check_dims(state_mean, p.in_dim(), "kl_step state mean");
  linalg::check_dims(state_cov, p.in_dim(), p.in_dim(), "kl_step state covariance");
  const double kl = expected_conditional_kl(p.step(t), p.log_det_cov(t), q.step(t), q.chol(t),
                                            q.log_det_cov(t), state_mean, state_cov);
  return std::max(kl, 0.0);
}

GaussianMarginals propagate_marginals(const TimeVaryingLinGauss& ctrl,
                                      const TimeVaryingLinGauss& dyn, const GaussianState& init) {
  const int dx = ctrl.in_dim();
  const int du = ctrl.out_dim();
  if (dyn.in_dim() != dx + du || dyn.out_dim() != dx) {
    throw InvalidInput(fmt::format(
        "propagate_marginals: dynamics {}->{} incompatible with controller {}->{}", dyn.in_dim(),
        dyn.out_dim(), dx, du));
  }
  if (dyn.horizon() != ctrl.horizon()) {
    throw InvalidInput(fmt::format("propagate_marginals: horizon mismatch {} vs {}",
                                   ctrl.horizon(), dyn.horizon()));
  }
  linalg::check_dims(init.mean, dx, "initial state mean");
  linalg::check_dims(init.cov, dx, dx, "initial state covariance");

  const int horizon = ctrl.horizon();
  GaussianMarginals out;
  out.dx = dx;
  out.du = du;
  out.joint_mean.reserve(horizon);
  out.joint_cov.reserve(horizon);
  out.next_mean.reserve(horizon);
  out.next_cov.reserve(horizon);

  Vec mu_x = init.mean;
  Mat sigma_x = init.cov;
  for (int t = 0; t < horizon; ++t) {
    const Mat& k = ctrl.gain(t);
    Vec mu(dx + du);
    mu << mu_x, k * mu_x + ctrl.bias(t);
    Mat sigma(dx + du, dx + du);
    const Mat sx_kt = sigma_x * k.transpose();
    sigma.topLeftCorner(dx, dx) = sigma_x;
    sigma.topRightCorner(dx, du) = sx_kt;
    sigma.bottomLeftCorner(du, dx) = sx_kt.transpose();
    sigma.bottomRightCorner(du, du) = k * sx_kt + ctrl.cov(t);

    const Mat& f = dyn.gain(t);
    Vec mu_next = f * mu + dyn.bias(t);
    Mat sigma_next = linalg::symmetrize(f * sigma * f.transpose() + dyn.cov(t));

    out.joint_mean.push_back(std::move(mu));
    out.joint_cov.push_back(std::move(sigma));
    out.next_mean.push_back(mu_next);
    out.next_cov.push_back(sigma_next);
    mu_x = std::move(mu_next);
    sigma_x = std::move(sigma_next);
  }
  return out;
}

std::vector<double> traj_kl_per_step(const TimeVaryingLinGauss& p, const TimeVaryingLinGauss& q,
                                     const GaussianMarginals& p_marginals) {
  check_controller_pair(p, q);
  if (p_marginals.horizon() != p.horizon()) {
    throw InvalidInput("traj_kl_per_step: marginals horizon mismatch");
  }
  std::vector<double> out(p.horizon());
  for (int t = 0; t < p.horizon(); ++t) {
    out[t] = kl_step(p, q, t, p_marginals.state_mean(t), p_marginals.state_cov(t));
  }
  return out;
}

double traj_kl(const TimeVaryingLinGauss& p, const TimeVaryingLinGauss& q,
               const TimeVaryingLinGauss& dyn, const GaussianState& init) {
  check_controller_pair(p, q);
  const auto marg = propagate_marginals(p, dyn, init);
  double total = 0.0;
  for (double v : traj_kl_per_step(p, q, marg)) total += v;
  return total;
}

std::vector<double> expected_cost_per_step(const GaussianMarginals& marg,
                                           const QuadraticCostExpansion& cost) {
  if (cost.horizon() != marg.horizon() || cost.dx() != marg.dx || cost.du() != marg.du) {
    throw InvalidInput(fmt::format(
        "expected_cost: cost expansion (T={}, dx={}, du={}) does not match marginals (T={}, dx={}, du={})",
        cost.horizon(), cost.dx(), cost.du(), marg.horizon(), marg.dx, marg.du));
  }
  std::vector<double> out(marg.horizon());
  for (int t = 0; t < marg.horizon(); ++t) {
    const auto& c = cost.steps[t];
    const Mat h = c.hessian();
    Vec point(marg.dx + marg.du);
    point << c.x_hat, c.u_hat;
    const Vec m = marg.joint_mean[t] - point;
    out[t] = 0.5 * (h.cwiseProduct(marg.joint_cov[t])).sum() + 0.5 * m.dot(h * m) +
             c.gradient().dot(m) + c.l0;
  }
  return out;
}

double expected_cost(const GaussianMarginals& marg, const QuadraticCostExpansion& cost) {
  double total = 0.0;
  for (double v : expected_cost_per_step(marg, cost)) total += v;
  return total;
}

std::vector<double> entropy(const TimeVaryingLinGauss& ctrl) {
  std::vector<double> out(ctrl.horizon());
  const double du = ctrl.out_dim();
  for (int t = 0; t < ctrl.horizon(); ++t) {
    out[t] = 0.5 * (du * std::log(2.0 * std::numbers::pi * std::numbers::e) + ctrl.log_det_cov(t));
  }
  return out;
}

}  // namespace mdgps
