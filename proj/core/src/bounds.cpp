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


#include "mdgps/bounds.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "mdgps/errors.hpp"

namespace mdgps {

double BoundReport::max_epsilon() const {
  double m = 0.0;
  for (double e : epsilon) m = std::max(m, e);
  return m;
}

std::vector<double> tv_bound(const std::vector<double>& epsilon) {
  std::vector<double> out(epsilon.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < epsilon.size(); ++t) {
    if (!(epsilon[t] >= 0.0)) throw InvalidInput("tv_bound: epsilon must be nonnegative");
    acc += 2.0 * std::sqrt(2.0 * epsilon[t]);
    out[t] = acc;
  }
  return out;
}

double cost_bound_rhs(const std::vector<double>& expected_local_cost,
                      const std::vector<double>& max_cost, const std::vector<double>& epsilon,
                      std::vector<double>* q_max) {
  const std::size_t n = epsilon.size();
  if (expected_local_cost.size() != n || max_cost.size() != n) {
    throw InvalidInput("cost_bound_rhs: per-step inputs differ in length");
  }
  std::vector<double> q(n);
  double acc = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    if (!(max_cost[t] >= 0.0)) throw InvalidInput("cost_bound_rhs: max cost must be nonnegative");
    acc += max_cost[t];
    q[t] = acc;
  }
  double rhs = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (!(epsilon[t] >= 0.0)) throw InvalidInput("cost_bound_rhs: epsilon must be nonnegative");
    const double r = std::sqrt(2.0 * epsilon[t]);
    rhs += expected_local_cost[t] + r * max_cost[t] + 2.0 * r * q[t];
  }
  if (q_max) *q_max = std::move(q);
  return rhs;
}

BoundReport compute_bound(const TimeVaryingLinGauss& local, const GlobalPolicy& policy,
                          const SampleSet& samples, const std::vector<double>& expected_local_cost) {
  samples.validate();
  const int horizon = samples.horizon();
  if (local.horizon() != horizon || static_cast<int>(expected_local_cost.size()) != horizon) {
    throw InvalidInput(fmt::format("compute_bound: horizon mismatch ({} samples, {} controller)",
                                   horizon, local.horizon()));
  }
  BoundReport report;
  report.epsilon.assign(horizon, 0.0);
  report.max_cost.assign(horizon, 0.0);
  report.expected_local_cost = expected_local_cost;
  for (int t = 0; t < horizon; ++t) {
    for (const auto& r : samples.rollouts) {
      const Vec& x = r.states[t];
      const double kl = gaussian_kl(local.mean(t, x), local.cov(t), policy.mean(x), policy.cov());
      report.epsilon[t] = std::max(report.epsilon[t], kl);
      report.max_cost[t] = std::max(report.max_cost[t], r.costs[t]);
    }
  }
  report.tv_bound = tv_bound(report.epsilon);
  report.cost_bound =
      cost_bound_rhs(expected_local_cost, report.max_cost, report.epsilon, &report.q_max);
  return report;
}

void TabularMdp::validate() const {
  if (n_states <= 0 || n_actions <= 0 || horizon <= 0) {
    throw InvalidInput("TabularMdp: sizes must be positive");
  }
  linalg::check_dims(initial, n_states, "TabularMdp initial distribution");
  if (static_cast<int>(transition.size()) != n_actions || static_cast<int>(cost.size()) != horizon) {
    throw InvalidInput("TabularMdp: need one transition matrix per action and one cost per step");
  }
  for (const auto& p : transition) linalg::check_dims(p, n_states, n_states, "transition");
  for (const auto& c : cost) {
    linalg::check_dims(c, n_states, n_actions, "cost");
    if ((c.array() < 0.0).any()) throw InvalidInput("TabularMdp: costs must be nonnegative");
  }
}

namespace {

void check_policy(const TabularMdp& mdp, const TabularPolicy& pi) {
  if (static_cast<int>(pi.size()) != mdp.horizon) {
    throw InvalidInput("tabular policy: one matrix per step required");
  }
  for (const auto& m : pi) linalg::check_dims(m, mdp.n_states, mdp.n_actions, "tabular policy");
}

}  // namespace

std::vector<Vec> tabular_state_marginals(const TabularMdp& mdp, const TabularPolicy& policy) {
  mdp.validate();
  check_policy(mdp, policy);
  std::vector<Vec> out;
  out.reserve(mdp.horizon);
  Vec d = mdp.initial;
  for (int t = 0; t < mdp.horizon; ++t) {
    out.push_back(d);
    Vec next = Vec::Zero(mdp.n_states);
    for (int a = 0; a < mdp.n_actions; ++a) {
      const Vec mass = d.cwiseProduct(policy[t].col(a));
      next += mdp.transition[a].transpose() * mass;
    }
    d = next;
  }
  return out;
}

std::vector<double> tabular_expected_cost(const TabularMdp& mdp, const TabularPolicy& policy) {
  const auto marg = tabular_state_marginals(mdp, policy);
  std::vector<double> out(mdp.horizon);
  for (int t = 0; t < mdp.horizon; ++t) {
    out[t] = marg[t].dot(policy[t].cwiseProduct(mdp.cost[t]).rowwise().sum());
  }
  return out;
}

std::vector<double> tabular_max_kl(const TabularPolicy& p, const TabularPolicy& q) {
  if (p.size() != q.size()) throw InvalidInput("tabular_max_kl: horizon mismatch");
  std::vector<double> out(p.size(), 0.0);
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p[t].rows() != q[t].rows() || p[t].cols() != q[t].cols()) {
      throw InvalidInput("tabular_max_kl: shape mismatch");
    }
    for (Eigen::Index s = 0; s < p[t].rows(); ++s) {
      double kl = 0.0;
      for (Eigen::Index a = 0; a < p[t].cols(); ++a) {
        const double pa = p[t](s, a);
        if (pa <= 0.0) continue;
        const double qa = q[t](s, a);
        if (qa <= 0.0) {
          kl = std::numeric_limits<double>::infinity();
          break;
        }
        kl += pa * std::log(pa / qa);
      }
      out[t] = std::max(out[t], std::max(kl, 0.0));
    }
  }
  return out;
}

std::vector<double> tabular_max_cost(const TabularMdp& mdp) {
  mdp.validate();
  std::vector<double> out(mdp.horizon);
  for (int t = 0; t < mdp.horizon; ++t) out[t] = mdp.cost[t].maxCoeff();
  return out;
}

double tabular_cost_bound(const TabularMdp& mdp, const TabularPolicy& p, const TabularPolicy& q) {
  return cost_bound_rhs(tabular_expected_cost(mdp, p), tabular_max_cost(mdp), tabular_max_kl(p, q));
}

}  // namespace mdgps
