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

#ifndef BROKERAGE_DISPATCH_HPP_
#define BROKERAGE_DISPATCH_HPP_

#include <compare>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "brokerage/config.hpp"
#include "brokerage/fleet.hpp"

namespace brokerage {

struct ContributionParams {
  double empty_cost_per_mile = 1.5;
  double loaded_cost_per_mile = 0.0;
  double late_penalty_per_step = 50.0;  // per step the deadhead makes the pickup late

  void validate() const;
};

// Hold: 0. Move: revenue - deadhead * empty cost - loaded miles * loaded
// cost - late steps * penalty. The driver is late by the number of whole
// steps beyond the first that the deadhead takes.
double contribution(const DriverAttributes& a, const std::optional<LedgerKey>& load,
                    double miles, double revenue, const FleetModel& model,
                    const ContributionParams& params);

// v-bar is kept per (time-of-day bucket, location, equipment).
struct ValueKey {
  int bucket = 0;
  RegionId location = 0;
  Equipment equipment = Equipment::DryVan;

  auto operator<=>(const ValueKey&) const = default;
};

class ValueFunction {
 public:
  explicit ValueFunction(int buckets = 4, double theta_step = 20.0, double discount = 0.95);

  int buckets() const { return buckets_; }
  double theta_step() const { return theta_step_; }
  double discount() const { return discount_; }
  long iteration() const { return iteration_; }
  // theta / (theta + iteration)
  double stepsize() const;

  double get(const ValueKey& key) const;
  void set(const ValueKey& key, double value);
  ValueKey key(const DriverAttributes& a, int step) const;
  // discount^(1 + eta) * v-bar at the step the driver becomes available,
  // for a post-decision attribute chosen at step t.
  double post_decision_value(const DriverAttributes& post, int t) const;

  const std::map<ValueKey, double>& table() const { return table_; }
  bool operator==(const ValueFunction&) const = default;

  void write_csv(std::ostream& out) const;
  // Replaces the table with the rows of a CSV written by write_csv.
  void read_csv(std::istream& in);

 private:
  friend ValueFunction update_value_function(const ValueFunction&,
                                             const std::map<DriverAttributes, double>&, int);
  int buckets_;
  double theta_step_;
  double discount_;
  long iteration_ = 0;
  std::map<ValueKey, double> table_;
};

// Smooths v-bar toward the duals observed at step t (averaged per key) with
// the harmonic stepsize, then advances the iteration counter.
ValueFunction update_value_function(const ValueFunction& vfa,
                                    const std::map<DriverAttributes, double>& duals, int t);

struct DispatchResult {
  DispatchDecision decision;
  // Marginal value of one more available driver of each attribute.
  std::map<DriverAttributes, double> duals;
  // sum of contributions plus post-decision values.
  double objective = 0.0;
};

// Assigns available drivers to accepted loads due now, maximizing
// contribution plus the value of each driver's post-decision attribute.
// Drivers in transit hold. Ties resolve to the lowest node index.
DispatchResult solve_dispatch(const FleetState& state, const ValueFunction& vfa,
                              const FleetModel& model, const ContributionParams& params);

ContributionParams contribution_params_from(const KeyValueConfig& config,
                                            const std::string& prefix = "dispatch.");

}  // namespace brokerage

#endif  // BROKERAGE_DISPATCH_HPP_
