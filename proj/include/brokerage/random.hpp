// Copyright 2026 The Brokerage Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BROKERAGE_RANDOM_HPP_
#define BROKERAGE_RANDOM_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace brokerage {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Hash-combines a base seed with a sequence of keys. Used to give every
// (rep, policy, step, path, ...) its own reproducible stream.
std::uint64_t derive_seed(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> keys);

// Uniform in [0, 1) that depends only on (seed, keys). Responses keyed this
// way are shared by every policy that picks the same price at the same step.
double keyed_uniform(std::uint64_t seed,
                     std::initializer_list<std::uint64_t> keys);

// Uniform in [0, 1) with 53 random bits; independent of the standard
// library's distribution implementations.
double uniform01(Rng& rng);

double standard_normal(Rng& rng);

}  // namespace brokerage

#endif  // BROKERAGE_RANDOM_HPP_
