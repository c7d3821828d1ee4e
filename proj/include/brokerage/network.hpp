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

#ifndef BROKERAGE_NETWORK_HPP_
#define BROKERAGE_NETWORK_HPP_

#include <cstdint>
#include <vector>

#include "brokerage/choice_model.hpp"

namespace brokerage {

struct Region {
  RegionId id = 0;
  double x = 0.0;  // miles
  double y = 0.0;
  double weight = 1.0;  // relative freight volume
};

// Regions on a plane. Road miles are the straight-line distance times a
// circuity factor; distinct regions are at least `min_miles` apart.
class Network {
 public:
  Network() = default;
  explicit Network(std::vector<Region> regions, double circuity = 1.2,
                   double min_miles = 50.0);

  const std::vector<Region>& regions() const { return regions_; }
  std::size_t size() const { return regions_.size(); }
  bool contains(RegionId id) const;
  const Region& region(RegionId id) const;
  // 0 within a region.
  double miles(RegionId from, RegionId to) const;

 private:
  std::vector<Region> regions_;
  std::vector<int> index_;  // RegionId -> position, -1 if absent
  double circuity_ = 1.2;
  double min_miles_ = 50.0;
};

// n regions with ids 0..n-1 scattered over a width x height rectangle and
// log-normal volume weights.
Network make_synthetic_network(int n_regions, std::uint64_t seed, double width = 1500.0,
                               double height = 1000.0);

}  // namespace brokerage

#endif  // BROKERAGE_NETWORK_HPP_
