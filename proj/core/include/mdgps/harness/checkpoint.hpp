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

#include <string>

#include "mdgps/policy.hpp"

namespace mdgps::harness {

inline constexpr int kCheckpointFormatVersion = 1;

/// A stored global policy with where it came from.
struct Checkpoint {
  GlobalPolicy policy;
  std::string env;
  int iteration = 0;
};

/// JSON document: format_version, env, iteration, architecture (type,
/// state_dim, action_dim, hidden, selector), params (flat, 8-byte floats,
/// row-major weights then bias per layer), cov (rows), normalization.
std::string checkpoint_to_json(const Checkpoint& checkpoint);
/// Throws InvalidInput on malformed documents and on any format_version other
/// than kCheckpointFormatVersion, naming both versions.
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mdgps::harness
