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

namespace mdgps {

/// Expected total costs entering the step-size rules. Naming: l_<dyn>_<pol>,
/// where dyn is the iteration of the fitted dynamics and pol the iteration of
/// the local (or, with _pi, linearized global) policy.
struct StepCosts {
  double prev_prev_pi = 0.0;  // l_{k-1}^{k-1,pi}
  double prev_cur = 0.0;      // l_{k-1}^{k}
  double cur_cur = 0.0;       // l_k^k
  double cur_cur_pi = 0.0;    // l_k^{k,pi}
};

/// Response when the realized cost does not exceed the prediction, so the
/// quadratic cost model has no interior minimizer.
enum class DegenerateStep { kGrow, kShrink };

struct StepClamps {
  /// Largest growth or shrink factor per update.
  double max_factor = 5.0;
  double min_epsilon = 1e-4;
  double max_epsilon = 10.0;
  DegenerateStep degenerate = DegenerateStep::kGrow;
};

struct StepAdjustment {
  double epsilon = 0.0;
  /// Unclamped formula value; NaN when the degenerate branch was taken.
  double raw = 0.0;
  /// The realized change was not positive; the degenerate response applied.
  bool degenerate = false;
};

/// eps' = eps (l_{k-1}^k - l_{k-1}^{k-1,pi}) / 2 (l_{k-1}^k - realized), where
/// realized is l_k^k. When realized - l_{k-1}^k <= 0 the degenerate flag is set
/// and the result is eps * max_factor (kGrow) or eps / max_factor (kShrink).
/// The value is then clamped to
/// [eps / max_factor, eps * max_factor] and to [min_epsilon, max_epsilon].
StepAdjustment adjust_step_classic(const StepCosts& costs, double epsilon,
                                   const StepClamps& clamps = {});

/// As adjust_step_classic with l_k^{k,pi} as the realized cost.
StepAdjustment adjust_step_global(const StepCosts& costs, double epsilon,
                                  const StepClamps& clamps = {});

}  // namespace mdgps
