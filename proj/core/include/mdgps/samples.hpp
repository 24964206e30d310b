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

/// One sampled episode: x_t, u_t and l(x_t, u_t) for t = 1..T.
struct Rollout {
  std::vector<Vec> states;
  std::vector<Vec> actions;
  std::vector<double> costs;
  int condition = 0;
  std::uint64_t noise_seed = 0;
  double total_cost = 0.0;

  int horizon() const { return static_cast<int>(states.size()); }
};

enum class SampleSource { kLocalPolicy, kGlobalPolicy };

/// Rollouts from one condition, all sharing T, dx and du.
struct SampleSet {
  int condition = 0;
  SampleSource source = SampleSource::kLocalPolicy;
  std::vector<Rollout> rollouts;

  int size() const { return static_cast<int>(rollouts.size()); }
  int horizon() const { return rollouts.empty() ? 0 : rollouts.front().horizon(); }
  int dx() const;
  int du() const;

  /// Throws InvalidInput if empty or if any rollout disagrees on T, dx or du.
  void validate() const;
};

}  // namespace mdgps
