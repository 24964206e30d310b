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


#include "mdgps/step_size.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mdgps/errors.hpp"

namespace mdgps {

namespace {

StepAdjustment adjust(double predicted_base, double prev_cur, double realized, double epsilon,
                      const StepClamps& clamps) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidInput("step size: epsilon must be positive and finite");
  }
  if (!(clamps.max_factor >= 1.0) || !(clamps.min_epsilon > 0.0) ||
      !(clamps.max_epsilon >= clamps.min_epsilon)) {
    throw InvalidInput("step size: invalid clamps");
  }
  if (!std::isfinite(predicted_base) || !std::isfinite(prev_cur) || !std::isfinite(realized)) {
    throw InvalidInput("step size: non-finite cost estimate");
  }
  StepAdjustment out;
  double next;
  if (realized - prev_cur <= 0.0) {
    out.degenerate = true;
    out.raw = std::numeric_limits<double>::quiet_NaN();
    next = clamps.degenerate == DegenerateStep::kGrow ? epsilon * clamps.max_factor
                                                       : epsilon / clamps.max_factor;
  } else {
    out.raw = epsilon * (prev_cur - predicted_base) / (2.0 * (prev_cur - realized));
    next = out.raw;
  }
  next = std::clamp(next, epsilon / clamps.max_factor, epsilon * clamps.max_factor);
  out.epsilon = std::clamp(next, clamps.min_epsilon, clamps.max_epsilon);
  return out;
}

}  // namespace

StepAdjustment adjust_step_classic(const StepCosts& c, double epsilon, const StepClamps& clamps) {
  return adjust(c.prev_prev_pi, c.prev_cur, c.cur_cur, epsilon, clamps);
}

StepAdjustment adjust_step_global(const StepCosts& c, double epsilon, const StepClamps& clamps) {
  return adjust(c.prev_prev_pi, c.prev_cur, c.cur_cur_pi, epsilon, clamps);
}

}  // namespace mdgps
