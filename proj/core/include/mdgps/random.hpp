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
#include <initializer_list>
#include <random>

#include "mdgps/linalg.hpp"

namespace mdgps {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed splitting rule used for every random stream in the library:
/// start from the master seed and fold each stream id through mix64, i.e.
/// s = mix64(master); for id in ids: s = mix64(s ^ (id + 0x9e3779b97f4a7c15)).
/// (master, condition, sample) identifies one rollout.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> ids);

Vec standard_normal(Rng& rng, Eigen::Index n);

}  // namespace mdgps
