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

#include "mdgps/lqr.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "mdgps/errors.hpp"
#include "mdgps/log.hpp"

namespace mdgps {

QuadraticCostExpansion surrogate_expand(const QuadraticCostExpansion& cost,
                                        const TimeVaryingLinGauss& pi_bar, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw InvalidInput(fmt::format("surrogate_expand: eta must be positive and finite, got {}", eta));
  }
  if (pi_bar.horizon() != cost.horizon() || pi_bar.in_dim() != cost.dx() ||
      pi_bar.out_dim() != cost.du()) {
    throw InvalidInput("surrogate_expand: policy linearization does not match the cost expansion");
  }
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  QuadraticCostExpansion out;
  out.steps.reserve(cost.steps.size());
  for (int t = 0; t < cost.horizon(); ++t) {
    const CostStep& c = cost.steps[t];
    const Mat& k = pi_bar.gain(t);
    const Mat p = pi_bar.precision(t);
    const Mat pk = p * k;
    const Vec r = c.u_hat - k * c.x_hat - pi_bar.bias(t);
    const Vec pr = p * r;
    CostStep s;
    s.x_hat = c.x_hat;
    s.u_hat = c.u_hat;
    s.lxx = linalg::symmetrize(c.lxx / eta + k.transpose() * pk);
    s.luu = linalg::symmetrize(c.luu / eta + p);
    s.lux = c.lux / eta - pk;
    s.lx = c.lx / eta - k.transpose() * pr;
    s.lu = c.lu / eta + pr;
    s.l0 = c.l0 / eta + 0.5 * r.dot(pr) +
           0.5 * (static_cast<double>(r.size()) * log_2pi + pi_bar.log_det_cov(t));
    out.steps.push_back(std::move(s));
  }
  return out;
}

BackwardResult maxent_lqr_backward(const TimeVaryingLinGauss& dyn,
                                   const QuadraticCostExpansion& cost, const LqrOptions& options) {
  const int horizon = cost.horizon();
  const int dx = cost.dx();
  const int du = cost.du();
  const int n = dx + du;
  if (dyn.horizon() != horizon || dyn.in_dim() != n || dyn.out_dim() != dx) {
    throw InvalidInput(fmt::format(
        "maxent_lqr_backward: dynamics (T={}, {}->{}) do not match cost (T={}, dx={}, du={})",
        dyn.horizon(), dyn.in_dim(), dyn.out_dim(), horizon, dx, du));
  }
  const double log_2pi = std::log(2.0 * std::numbers::pi);

  QFunction qf;
  qf.steps.resize(horizon);
  std::vector<LinGaussStep> ctrl(horizon);
  Mat vxx = Mat::Zero(dx, dx);
  Vec vx = Vec::Zero(dx);
  double v0 = 0.0;

  for (int t = horizon - 1; t >= 0; --t) {
    const CostStep& c = cost.steps[t];
    const Mat h = c.hessian();
    Vec z_hat(n);
    z_hat << c.x_hat, c.u_hat;
    const Vec hz = h * z_hat;
    const Vec lin = c.gradient() - hz;
    const double con = c.l0 - c.gradient().dot(z_hat) + 0.5 * z_hat.dot(hz);

    const Mat& f = dyn.gain(t);
    const Vec& fc = dyn.bias(t);
    const Mat q = linalg::symmetrize(h + f.transpose() * vxx * f);
    const Vec qv = lin + f.transpose() * (vxx * fc + vx);
    const double q0 = con + 0.5 * fc.dot(vxx * fc) + vx.dot(fc) +
                      0.5 * vxx.cwiseProduct(dyn.cov(t)).sum() + v0;

    QFunctionStep& s = qf.steps[t];
    s.qxx = q.topLeftCorner(dx, dx);
    s.qux = q.bottomLeftCorner(du, dx);
    s.qx = qv.head(dx);
    s.qu = qv.tail(du);
    s.q0 = q0;
    Mat quu = q.bottomRightCorner(du, du);

    Eigen::LLT<Mat> llt(quu);
    if (llt.info() != Eigen::Success) {
      double mu = options.initial_regularization;
      for (; mu <= options.max_regularization; mu *= 2.0) {
        llt.compute(quu + mu * Mat::Identity(du, du));
        if (llt.info() == Eigen::Success) break;
      }
      if (llt.info() != Eigen::Success) {
        throw NumericalError(fmt::format("maxent_lqr_backward: Quu not regularizable at step {}", t));
      }
      quu += mu * Mat::Identity(du, du);
      s.regularization = mu;
      ++qf.regularized_steps;
    }
    s.quu = quu;

    const Mat cov = linalg::symmetrize(llt.solve(Mat::Identity(du, du)));
    const Mat gain = -llt.solve(s.qux);
    const Vec bias = -llt.solve(s.qu);
    const double log_det_quu = 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();

    vxx = linalg::symmetrize(s.qxx + s.qux.transpose() * gain);
    vx = s.qx + s.qux.transpose() * bias;
    // min over u of the quadratic, plus E[0.5 (u-mu)'Quu(u-mu)] - H(p).
    v0 = q0 + 0.5 * s.qu.dot(bias) - 0.5 * du * log_2pi + 0.5 * log_det_quu;
    s.vxx = vxx;
    s.vx = vx;
    s.v0 = v0;

    if (!vxx.allFinite() || !vx.allFinite() || vxx.norm() > options.divergence_threshold) {
      throw NumericalError(fmt::format("maxent_lqr_backward: value function diverged at step {}", t));
    }
    ctrl[t] = LinGaussStep{gain, bias, cov};
  }
  return {TimeVaryingLinGauss(std::move(ctrl)), std::move(qf)};
}

namespace {

struct Solved {
  DualCandidate candidate;
  std::optional<BackwardResult> result;
};

}  // namespace

CStepResult c_step(const TimeVaryingLinGauss& dyn, const QuadraticCostExpansion& cost,
                   const TimeVaryingLinGauss& pi_bar, double epsilon, const GaussianState& init,
                   double warm_eta, const DualOptions& options) {
  if (!(epsilon > 0.0)) throw InvalidInput(fmt::format("c_step: epsilon must be positive, got {}", epsilon));
  if (pi_bar.horizon() != dyn.horizon()) throw InvalidInput("c_step: pi_bar and dynamics horizons differ");

  DualState dual;
  dual.epsilon = epsilon;
  double lo = options.bracket_lo;
  double hi = options.bracket_hi;

  auto solve = [&](double eta) {
    Solved s;
    s.candidate.eta = eta;
    try {
      BackwardResult r = maxent_lqr_backward(dyn, surrogate_expand(cost, pi_bar, eta), options.lqr);
      s.candidate.kl = traj_kl(r.controller, pi_bar, dyn, init);
      s.result = std::move(r);
    } catch (const NumericalError& e) {
      s.candidate.valid = false;
      s.candidate.kl = std::numeric_limits<double>::infinity();
    }
    dual.trace.push_back(s.candidate);
    return s;
  };
  auto within = [&](const Solved& s, double tol) {
    return s.candidate.valid && std::abs(s.candidate.kl - epsilon) <= tol * epsilon;
  };
  auto finish = [&](Solved&& s) {
    dual.eta = s.candidate.eta;
    dual.eta_lo = std::min(lo, s.candidate.eta);
    dual.eta_hi = std::max(hi, s.candidate.eta);
    dual.converged = within(s, options.kl_tolerance);
    return CStepResult{std::move(s.result->controller), s.candidate.kl, dual, std::move(s.result->q)};
  };

  std::optional<Solved> best_feasible;  // kl <= epsilon, closest to epsilon
  std::optional<Solved> best_any;       // valid, closest to epsilon
  auto record = [&](Solved& s) {
    if (!s.candidate.valid) return;
    const double gap = std::abs(s.candidate.kl - epsilon);
    if (!best_any || gap < std::abs(best_any->candidate.kl - epsilon)) best_any = s;
    if (s.candidate.kl <= epsilon &&
        (!best_feasible || s.candidate.kl > best_feasible->candidate.kl)) {
      best_feasible = s;
    }
  };
  int evaluations = 0;
  auto evaluate = [&](double eta) {
    Solved s = solve(eta);
    ++evaluations;
    record(s);
    return s;
  };

  // Warm start narrows the initial bracket.
  const double warm = std::clamp(warm_eta, options.eta_min, options.eta_max);
  if (warm > lo && warm < hi) {
    Solved s = evaluate(warm);
    if (within(s, options.target_tolerance)) return finish(std::move(s));
    if (s.candidate.kl > epsilon) lo = warm; else hi = warm;
  }

  // Upper end must satisfy the constraint; expand geometrically.
  for (;;) {
    Solved s = evaluate(hi);
    if (within(s, options.target_tolerance)) return finish(std::move(s));
    if (s.candidate.kl <= epsilon) break;
    lo = hi;
    hi *= options.expand_factor;
    if (hi > options.eta_max) {
      throw NumericalError(fmt::format(
          "c_step: KL {} still exceeds epsilon {} at eta_max", s.candidate.kl, epsilon));
    }
  }
  // Lower end must violate it; if it never does the constraint is slack.
  for (;;) {
    Solved s = evaluate(lo);
    if (within(s, options.target_tolerance)) return finish(std::move(s));
    if (s.candidate.kl > epsilon) break;
    hi = lo;
    lo /= options.expand_factor;
    if (lo < options.eta_min) {
      Solved boundary = evaluate(options.eta_min);
      dual.slack = boundary.candidate.valid && boundary.candidate.kl <= epsilon;
      lo = options.eta_min;
      if (dual.slack) {
        CStepResult r = finish(std::move(boundary));
        r.dual.slack = true;
        r.dual.converged = true;
        return r;
      }
      break;
    }
  }

  while (evaluations < options.max_iterations) {
    const double mid = std::sqrt(lo * hi);
    Solved s = evaluate(mid);
    if (within(s, options.target_tolerance)) return finish(std::move(s));
    if (s.candidate.kl > epsilon) lo = mid; else hi = mid;
  }
  if (best_any && within(*best_any, options.kl_tolerance)) return finish(std::move(*best_any));
  if (!best_feasible) throw NumericalError("c_step: no feasible dual candidate found");
  logger().warn("c_step: dual search exhausted; KL {} for epsilon {}", best_feasible->candidate.kl, epsilon);
  CStepResult r = finish(std::move(*best_feasible));
  r.dual.exhausted = true;
  return r;
}

}  // namespace mdgps
