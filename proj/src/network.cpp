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

#include "brokerage/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "brokerage/random.hpp"

namespace brokerage {

Network::Network(std::vector<Region> regions, double circuity, double min_miles)
    : regions_(std::move(regions)), circuity_(circuity), min_miles_(min_miles) {
  if (circuity <= 0.0) throw std::invalid_argument("circuity must be positive");
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    RegionId id = regions_[i].id;
    if (id < 0) throw std::invalid_argument("region ids must be nonnegative");
    if (static_cast<std::size_t>(id) >= index_.size()) index_.resize(id + 1, -1);
    if (index_[id] != -1) {
      throw std::invalid_argument("duplicate region " + std::to_string(id));
    }
    index_[id] = static_cast<int>(i);
  }
}

bool Network::contains(RegionId id) const {
  return id >= 0 && static_cast<std::size_t>(id) < index_.size() && index_[id] != -1;
}

const Region& Network::region(RegionId id) const {
  if (!contains(id)) throw std::out_of_range("unknown region " + std::to_string(id));
  return regions_[index_[id]];
}

double Network::miles(RegionId from, RegionId to) const {
  if (from == to) return 0.0;
  const Region& a = region(from);
  const Region& b = region(to);
  return std::max(min_miles_, circuity_ * std::hypot(a.x - b.x, a.y - b.y));
}

Network make_synthetic_network(int n_regions, std::uint64_t seed, double width,
                               double height) {
  if (n_regions < 1) throw std::invalid_argument("network needs at least one region");
  Rng rng(derive_seed(seed, {0x6e6574ULL}));
  std::vector<Region> regions;
  for (int i = 0; i < n_regions; ++i) {
    Region r;
    r.id = i;
    r.x = width * uniform01(rng);
    r.y = height * uniform01(rng);
    r.weight = std::exp(0.6 * standard_normal(rng));
    regions.push_back(r);
  }
  return Network(std::move(regions));
}

}  // namespace brokerage
