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


#include "mdgps/mdgps.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mdgps/errors.hpp"
#include "mdgps/log.hpp"
#include "mdgps/random.hpp"

namespace mdgps {

namespace {

// Random stream ids below an iteration.
enum Stream : std::uint64_t {
  kSampleStream = 1,
  kLocalEvalStream = 2,
  kGlobalEvalStream = 3,
  kDynamicsGmmStream = 4,
  kPolicyGmmStream = 5,
  kSgdStream = 6,
};

std::uint64_t stream_seed(const MdgpsOptions& o, int iteration, Stream s) {
  return derive_seed(o.seed, {static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(s)});
}

double expected_total(const TimeVaryingLinGauss& ctrl, const TimeVaryingLinGauss& dyn,
                      const QuadraticCostExpansion& cost, const GaussianState& init) {
  return expected_cost(propagate_marginals(ctrl, dyn, init), cost);
}

QuadraticCostExpansion expand_along_mean(const Env& env, const GaussianMarginals& marg) {
  std::vector<Vec> xs;
  std::vector<Vec> us;
  for (int t = 0; t < marg.horizon(); ++t) {
    xs.push_back(marg.state_mean(t));
    us.push_back(marg.joint_mean[t].tail(marg.du));
  }
  return cost_expand(env, xs, us);
}

Mat stack_rows(const Mat& a, const Mat& b) {
  if (a.rows() == 0) return b;
  Mat out(a.rows() + b.rows(), b.cols());
  out << a, b;
  return out;
}

double mean_return(const std::vector<Rollout>& rollouts) {
  double s = 0.0;
  for (const auto& r : rollouts) s += r.total_cost;
  return s / static_cast<double>(rollouts.size());
}

}  // namespace

std::string to_string(SamplingMode mode) {
  return mode == SamplingMode::kOnPolicy ? "on_policy" : "off_policy";
}

std::string to_string(StepRule rule) { return rule == StepRule::kClassic ? "classic" : "global"; }

SamplingMode parse_sampling_mode(const std::string& text) {
  if (text == "on_policy") return SamplingMode::kOnPolicy;
  if (text == "off_policy") return SamplingMode::kOffPolicy;
  throw InvalidInput(fmt::format("sampling must be on_policy or off_policy, got '{}'", text));
}

StepRule parse_step_rule(const std::string& text) {
  if (text == "classic") return StepRule::kClassic;
  if (text == "global") return StepRule::kGlobal;
  throw InvalidInput(fmt::format("step rule must be classic or global, got '{}'", text));
}

std::string to_string(DegenerateStep response) {
  return response == DegenerateStep::kGrow ? "grow" : "shrink";
}

DegenerateStep parse_degenerate_step(const std::string& text) {
  if (text == "grow") return DegenerateStep::kGrow;
  if (text == "shrink") return DegenerateStep::kShrink;
  throw InvalidInput(fmt::format("degenerate step response must be grow or shrink, got '{}'", text));
}

void IterationRecord::validate(int num_conditions) const {
  if (static_cast<int>(conditions.size()) != num_conditions) {
    throw InvalidInput(fmt::format("iteration record has {} conditions, expected {}",
                                   conditions.size(), num_conditions));
  }
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    const auto& c = conditions[i].costs;
    for (double v : {c.prev_prev, c.prev_prev_pi, c.prev_cur, c.prev_cur_pi, c.cur_cur, c.cur_cur_pi,
                     conditions[i].epsilon, conditions[i].eta, conditions[i].achieved_kl}) {
      if (!std::isfinite(v)) {
        throw InvalidInput(fmt::format("iteration record: non-finite entry for condition {}", i));
      }
    }
  }
}

TimeVaryingLinGauss affine_policy_controller(const GlobalPolicy& policy, int horizon) {
  auto [gain, bias] = policy.affine_state_map();
  return TimeVaryingLinGauss::constant(horizon, gain, bias, policy.cov());
}

double analytic_cost(const Env& env, const TimeVaryingLinGauss& controller,
                     const TimeVaryingLinGauss& dynamics, int condition) {
  const GaussianMarginals marg =
      propagate_marginals(controller, dynamics, env.initial_distribution(condition));
  return expected_cost(marg, expand_along_mean(env, marg));
}

std::vector<Vec> sigma_points(const Vec& mean, const Mat& cov) {
  const auto d = mean.size();
  linalg::check_dims(cov, d, d, "sigma point covariance");
  Eigen::SelfAdjointEigenSolver<Mat> eig(linalg::symmetrize(cov));
  const Mat root =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const double scale = std::sqrt(static_cast<double>(d));
  std::vector<Vec> pts;
  pts.reserve(2 * d);
  for (Eigen::Index i = 0; i < d; ++i) {
    pts.push_back(mean + scale * root.col(i));
    pts.push_back(mean - scale * root.col(i));
  }
  return pts;
}

MdgpsState initialize(const Env& env, const GlobalPolicy& policy, const MdgpsOptions& options) {
  const EnvSpec& spec = env.spec();
  if (policy.state_dim() != spec.dx || policy.action_dim() != spec.du) {
    throw InvalidInput(fmt::format("policy is {}->{}, environment needs {}->{}", policy.state_dim(),
                                   policy.action_dim(), spec.dx, spec.du));
  }
  if (!(options.initial_epsilon > 0.0)) throw InvalidInput("initial epsilon must be positive");
  if (options.samples_per_condition <= 0 || options.eval_rollouts_per_condition <= 0) {
    throw InvalidInput("sample counts must be positive");
  }
  if (options.exact_dynamics && policy.architecture() != Architecture::kAffine) {
    throw InvalidInput("exact dynamics mode requires an affine global policy");
  }
  MdgpsState state;
  state.policy = policy;
  for (int i = 0; i < spec.num_conditions(); ++i) {
    ConditionState c;
    if (policy.architecture() == Architecture::kAffine) {
      c.local = affine_policy_controller(policy, spec.horizon);
    } else {
      c.local = TimeVaryingLinGauss::constant(spec.horizon, Mat::Zero(spec.du, spec.dx),
                                              policy.mean(spec.initial_states[i]), policy.cov());
    }
    c.epsilon = options.initial_epsilon;
    state.conditions.push_back(std::move(c));
  }
  return state;
}

IterationRecord run_iteration(const Env& env, MdgpsState& state, const MdgpsOptions& options) {
  const auto start_time = std::chrono::steady_clock::now();
  const EnvSpec& spec = env.spec();
  const int n_cond = spec.num_conditions();
  const int horizon = spec.horizon;
  const int k = state.iteration + 1;
  if (static_cast<int>(state.conditions.size()) != n_cond) {
    throw InvalidInput("run_iteration: state does not match the environment's conditions");
  }

  IterationRecord rec;
  rec.iteration = k;
  rec.conditions.resize(n_cond);

  // Samples.
  std::vector<SampleSet> samples(n_cond);
  std::vector<Rollout> all_samples;
  const std::uint64_t sample_seed = stream_seed(options, k, kSampleStream);
  for (int i = 0; i < n_cond; ++i) {
    samples[i].condition = i;
    if (options.sampling == SamplingMode::kOnPolicy) {
      samples[i].source = SampleSource::kGlobalPolicy;
      samples[i].rollouts = sample_rollouts(env, global_actor(state.policy), i,
                                            options.samples_per_condition, sample_seed);
    } else {
      samples[i].source = SampleSource::kLocalPolicy;
      samples[i].rollouts = sample_rollouts(env, local_actor(state.conditions[i].local), i,
                                            options.samples_per_condition, sample_seed);
    }
    all_samples.insert(all_samples.end(), samples[i].rollouts.begin(), samples[i].rollouts.end());
  }
  rec.sample_return = mean_return(all_samples);
  rec.sample_final_distance = mean_final_distance(env, all_samples);

  // Model fits, cost expansions, step sizes and C-steps, per condition.
  std::vector<TimeVaryingLinGauss> dynamics(n_cond);
  std::vector<QuadraticCostExpansion> costs(n_cond);
  for (int i = 0; i < n_cond; ++i) {
    ConditionState& cs = state.conditions[i];
    ConditionRecord& cr = rec.conditions[i];
    const GaussianState init = env.initial_distribution(i);

    TimeVaryingLinGauss dyn;
    TimeVaryingLinGauss pi_bar;
    QuadraticCostExpansion cost;
    if (options.exact_dynamics) {
      const auto& e = *options.exact_dynamics;
      dyn = TimeVaryingLinGauss::constant(horizon, e.gain, e.bias, e.cov);
      pi_bar = affine_policy_controller(state.policy, horizon);
      cost = expand_along_mean(env, propagate_marginals(cs.local, dyn, init));
    } else {
      const Mat rows = joint_vectors(samples[i], FitMode::kDynamics);
      Mat pooled = stack_rows(cs.prev_rows, rows);
      const Eigen::Index cap = static_cast<Eigen::Index>(options.buffer_factor) * horizon;
      if (pooled.rows() > cap) pooled = Mat(pooled.bottomRows(cap));
      GmmOptions dyn_gmm = options.dynamics_gmm;
      dyn_gmm.seed = derive_seed(stream_seed(options, k, kDynamicsGmmStream), {static_cast<std::uint64_t>(i)});
      const GmmPrior dyn_prior = fit_gmm(pooled, dyn_gmm);
      dyn = fit_linear_gaussian(samples[i], dyn_prior, FitMode::kDynamics, horizon, options.fit);
      cs.prev_rows = rows;

      std::vector<Vec> states;
      for (const auto& r : samples[i].rollouts) states.insert(states.end(), r.states.begin(), r.states.end());
      GmmOptions pol_gmm = options.policy_gmm;
      pol_gmm.seed = derive_seed(stream_seed(options, k, kPolicyGmmStream), {static_cast<std::uint64_t>(i)});
      const GmmPrior pol_prior = fit_gmm(policy_joint_vectors(states, state.policy), pol_gmm);
      pi_bar = fit_policy_linearization(samples[i], state.policy, pol_prior,
                                        options.policy_fit_target, options.fit);
      const auto [xs, us] = mean_trajectory(samples[i]);
      cost = cost_expand(env, xs, us);
    }

    // Step-size quantities; on the first iteration "previous" means current.
    const TimeVaryingLinGauss& prev_dyn = cs.prev_dynamics ? *cs.prev_dynamics : dyn;
    const TimeVaryingLinGauss& prev_pi = cs.prev_pi_bar ? *cs.prev_pi_bar : pi_bar;
    const TimeVaryingLinGauss& prev_local = cs.prev_local ? *cs.prev_local : cs.local;
    const QuadraticCostExpansion& prev_cost = cs.prev_cost ? *cs.prev_cost : cost;
    ConditionCosts& c = cr.costs;
    c.prev_prev = expected_total(prev_local, prev_dyn, prev_cost, init);
    c.prev_prev_pi = expected_total(prev_pi, prev_dyn, prev_cost, init);
    c.prev_cur = expected_total(cs.local, prev_dyn, prev_cost, init);
    c.prev_cur_pi = expected_total(pi_bar, prev_dyn, prev_cost, init);
    c.cur_cur = expected_total(cs.local, dyn, cost, init);
    c.cur_cur_pi = expected_total(pi_bar, dyn, cost, init);

    if (options.adjust_step && cs.prev_dynamics) {
      const StepCosts sc{c.prev_prev_pi, c.prev_cur, c.cur_cur, c.cur_cur_pi};
      const StepAdjustment adj = options.step_rule == StepRule::kClassic
                                     ? adjust_step_classic(sc, cs.epsilon, options.clamps)
                                     : adjust_step_global(sc, cs.epsilon, options.clamps);
      cr.step_degenerate = adj.degenerate;
      logger().debug("iteration {} condition {}: step costs {:.6g} {:.6g} {:.6g} {:.6g}, eps {:.4g} -> {:.4g}{}",
                     k, i, sc.prev_prev_pi, sc.prev_cur, sc.cur_cur, sc.cur_cur_pi, cs.epsilon,
                     adj.epsilon, adj.degenerate ? " (degenerate)" : "");
      cs.epsilon = adj.epsilon;
    }
    cr.epsilon = cs.epsilon;

    CStepResult step;
    try {
      step = c_step(dyn, cost, pi_bar, cs.epsilon, init, cs.eta, options.dual);
    } catch (const NumericalError& e) {
      throw NumericalError(fmt::format("iteration {}, condition {}: {}", k, i, e.what()));
    }
    cr.eta = step.dual.eta;
    cr.achieved_kl = step.achieved_kl;
    cr.dual_converged = step.dual.converged;
    logger().debug("iteration {} condition {}: eps {:.4g} eta {:.4g} kl {:.4g}", k, i, cs.epsilon,
                   step.dual.eta, step.achieved_kl);

    cs.eta = step.dual.eta;
    cs.prev_local = cs.local;
    cs.local = std::move(step.controller);
    cs.prev_dynamics = dyn;
    cs.prev_pi_bar = std::move(pi_bar);
    cs.prev_cost = cost;
    dynamics[i] = std::move(dyn);
    costs[i] = std::move(cost);
  }

  // S-step on the new local controllers.
  SStepDataset dataset;
  for (int i = 0; i < n_cond; ++i) {
    const TimeVaryingLinGauss& local = state.conditions[i].local;
    std::vector<Mat> precisions;
    for (int t = 0; t < horizon; ++t) precisions.push_back(local.precision(t));
    if (options.exact_dynamics) {
      const GaussianMarginals marg =
          propagate_marginals(local, dynamics[i], env.initial_distribution(i));
      for (int t = 0; t < horizon; ++t) {
        for (Vec& x : sigma_points(marg.state_mean(t), marg.state_cov(t))) {
          Vec target = local.mean(t, x);
          dataset.tuples.push_back({std::move(x), std::move(target), precisions[t]});
        }
      }
    } else {
      for (const auto& r : samples[i].rollouts) {
        for (int t = 0; t < horizon; ++t) {
          dataset.tuples.push_back({r.states[t], local.mean(t, r.states[t]), precisions[t]});
        }
      }
    }
  }
  SStepResult s;
  if (options.exact_dynamics) {
    s = s_step_solve_affine(state.policy, dataset);
  } else {
    SgdConfig sgd = options.sgd;
    sgd.seed = stream_seed(options, k, kSgdStream);
    s = s_step_train(state.policy, dataset, sgd);
  }
  state.policy = std::move(s.policy);
  rec.s_step_loss = s.final_loss / static_cast<double>(dataset.size());

  // Evaluation and bounds.
  std::vector<Rollout> local_eval;
  std::vector<Rollout> global_eval;
  double bound_sum = 0.0;
  for (int i = 0; i < n_cond; ++i) {
    const ConditionState& cs = state.conditions[i];
    auto le = sample_rollouts(env, local_actor(cs.local), i, options.eval_rollouts_per_condition,
                              stream_seed(options, k, kLocalEvalStream));
    auto ge = sample_rollouts(env, global_mean_actor(state.policy), i,
                              options.eval_rollouts_per_condition,
                              stream_seed(options, k, kGlobalEvalStream));
    const GaussianMarginals marg =
        propagate_marginals(cs.local, dynamics[i], env.initial_distribution(i));
    ConditionRecord& cr = rec.conditions[i];
    cr.bound = compute_bound(cs.local, state.policy, samples[i], expected_cost_per_step(marg, costs[i]));
    cr.bound.global_cost_estimate = mean_return(ge);
    rec.bound_max_epsilon = std::max(rec.bound_max_epsilon, cr.bound.max_epsilon());
    bound_sum += cr.bound.cost_bound;
    local_eval.insert(local_eval.end(), le.begin(), le.end());
    global_eval.insert(global_eval.end(), ge.begin(), ge.end());
  }
  rec.bound_cost = bound_sum / n_cond;
  rec.local_return = mean_return(local_eval);
  rec.global_return = mean_return(global_eval);
  rec.global_success = success_rate(env, global_eval);
  rec.global_final_distance = mean_final_distance(env, global_eval);

  state.iteration = k;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  rec.validate(n_cond);
  logger().info("iteration {}: sample return {:.4g}, global return {:.4g}, success {:.3f}", k,
                rec.sample_return, rec.global_return, rec.global_success);
  return rec;
}

}  // namespace mdgps
