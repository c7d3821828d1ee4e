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

// Slow, obviously-correct reference implementations shared by the unit
// tests and the acceptance binary.

#ifndef BROKERAGE_TESTS_ORACLES_HPP_
#define BROKERAGE_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "brokerage/belief.hpp"
#include "brokerage/choice_model.hpp"
#include "brokerage/dispatch.hpp"
#include "brokerage/fleet.hpp"
#include "brokerage/network.hpp"
#include "brokerage/policies.hpp"
#include "brokerage/random.hpp"

namespace brokerage::oracle {

inline double best_revenue(const BeliefState& state, const FeatureRegistry& registry,
                           const LoadAttributes& b, const PriceGrid& grid) {
  double best = -std::numeric_limits<double>::infinity();
  for (double p : grid.points) best = std::max(best, expected_revenue(state, registry, b, p));
  return best;
}

// Knowledge gradient by explicit transition: apply the Bayes update for each
// of the four outcomes at `price`, take the best grid revenue under each
// posterior, and weight by the predictive outcome probability.
inline double kg(const BeliefState& state, const FeatureRegistry& registry,
                 const LoadAttributes& b, double price, const PriceGrid& grid) {
  double expected_best = 0.0;
  for (int yc : {1, -1}) {
    for (int ys : {1, -1}) {
      double p_outcome = 0.0;
      for (std::size_t k = 0; k < state.size(); ++k) {
        const auto& c = state.candidate(k);
        double hc = dot(c.alpha, carrier_features(registry, b, price));
        double hs = dot(c.beta, shipper_features(registry, b, price));
        p_outcome += state.q()[k] * (1.0 / (1.0 + std::exp(-yc * hc))) *
                     (1.0 / (1.0 + std::exp(-ys * hs)));
      }
      ObservationRecord obs{b, price, yc, ys, 0};
      BeliefState post = posterior_update(state, obs, registry);
      expected_best += p_outcome * best_revenue(post, registry, b, grid);
    }
  }
  return expected_best - best_revenue(state, registry, b, grid);
}

// Brute-force dispatch objective: every available driver unit either holds
// or takes a distinct pending load unit due now. Drivers in transit hold.
struct BruteUnit {
  LedgerKey key;
  double revenue;
  double miles;
};

inline double brute_dispatch(const FleetState& state, const ValueFunction& vfa,
                             const FleetModel& model, const ContributionParams& params) {
  std::vector<BruteUnit> units;
  for (const auto& key : state.loads.due(state.t)) {
    const LedgerEntry* e = state.loads.find(key);
    for (double r : e->pending) units.push_back({key, r, e->miles});
  }
  std::vector<DriverAttributes> drivers;
  double fixed = 0.0;
  for (const auto& [a, count] : state.drivers) {
    for (long c = 0; c < count; ++c) {
      if (a.eta_steps > 0) {
        fixed += vfa.post_decision_value(hold_transition(a, model.params), state.t);
      } else {
        drivers.push_back(a);
      }
    }
  }
  std::vector<bool> used(units.size(), false);
  double best = -std::numeric_limits<double>::infinity();
  auto rec = [&](auto&& self, std::size_t i, double acc) -> void {
    if (i == drivers.size()) {
      best = std::max(best, acc);
      return;
    }
    const DriverAttributes& a = drivers[i];
    self(self, i + 1, acc + vfa.post_decision_value(hold_transition(a, model.params), state.t));
    for (std::size_t u = 0; u < units.size(); ++u) {
      if (used[u] || !can_move(a, units[u].key, units[u].miles, model)) continue;
      used[u] = true;
      double v = contribution(a, units[u].key, units[u].miles, units[u].revenue, model, params) +
                 vfa.post_decision_value(
                     move_transition(a, units[u].key, units[u].miles, model), state.t);
      self(self, i + 1, acc + v);
      used[u] = false;
    }
  };
  rec(rec, 0, 0.0);
  return fixed + best;
}

// Small dispatch instance: up to `max_drivers` driver units and
// `max_loads` accepted load units due at t = 5 on a compact 4-region
// network, with a random v-bar table.
struct DispatchInstance {
  FleetModel model;
  FleetState state;
  ValueFunction vfa;
};

inline DispatchInstance random_dispatch_instance(Rng& rng, int max_drivers, int max_loads) {
  DispatchInstance inst;
  inst.model.network = Network({{0, 0.0, 0.0}, {1, 120.0, 0.0}, {2, 0.0, 150.0}, {3, 260.0, 90.0}});
  inst.state.t = 5;
  auto pick = [&](int n) { return static_cast<int>(uniform01(rng) * n) % n; };
  int n_drivers = 1 + pick(max_drivers);
  int n_loads = 1 + pick(max_loads);
  for (int i = 0; i < n_drivers; ++i) {
    DriverAttributes a;
    a.location = pick(4);
    a.domicile = pick(4);
    a.type = uniform01(rng) < 0.3 ? DriverType::Team : DriverType::Solo;
    a.equipment = uniform01(rng) < 0.7 ? Equipment::DryVan : Equipment::FlatBed;
    a.hours_remaining = std::round(2.0 + 68.0 * uniform01(rng));
    a.eta_steps = uniform01(rng) < 0.1 ? 1 : 0;
    inst.state.drivers[a] += 1;
  }
  for (int i = 0; i < n_loads; ++i) {
    LedgerKey key;
    key.pickup = inst.state.t;
    key.origin = pick(4);
    key.destination = pick(4);
    key.equipment = uniform01(rng) < 0.7 ? Equipment::DryVan : Equipment::FlatBed;
    double miles = inst.model.network.miles(key.origin, key.destination);
    key.miles_bucket = static_cast<int>(miles / inst.model.params.miles_bucket);
    inst.state.loads.offer(key);
    inst.state.loads.accept(key, 200.0 + 1300.0 * uniform01(rng), miles, inst.state.t - 1);
  }
  for (int bucket = 0; bucket < inst.vfa.buckets(); ++bucket) {
    for (RegionId r = 0; r < 4; ++r) {
      for (Equipment e : {Equipment::DryVan, Equipment::FlatBed}) {
        inst.vfa.set({bucket, r, e}, 400.0 * uniform01(rng));
      }
    }
  }
  return inst;
}

// A fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("brokerage_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace brokerage::oracle

#endif  // BROKERAGE_TESTS_ORACLES_HPP_
