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

#ifndef BROKERAGE_FLEET_HPP_
#define BROKERAGE_FLEET_HPP_

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "brokerage/belief.hpp"
#include "brokerage/booking.hpp"
#include "brokerage/choice_model.hpp"
#include "brokerage/network.hpp"

namespace brokerage {

enum class DriverType { Solo, Team };

std::string_view driver_type_name(DriverType type);
DriverType parse_driver_type(std::string_view name);

struct DriverAttributes {
  RegionId location = 0;  // current, or inbound while eta_steps > 0
  RegionId domicile = 0;
  DriverType type = DriverType::Solo;
  Equipment equipment = Equipment::DryVan;
  double hours_remaining = 0.0;
  int steps_since_home = 0;
  int eta_steps = 0;  // steps until the driver reaches `location`

  auto operator<=>(const DriverAttributes&) const = default;
};

using ResourceVector = std::map<DriverAttributes, long>;

long total_drivers(const ResourceVector& r);

struct FleetParams {
  double speed_mph = 50.0;
  int step_hours = 6;
  double hours_cap = 70.0;
  double rest_hours_per_step = 10.0;
  double max_deadhead_miles = 300.0;
  double penalty_factor = 1.2;  // expiry cost per unit of load revenue
  double miles_bucket = 50.0;
  int max_steps_since_home = 999;

  void validate() const;
};

struct FleetModel {
  Network network;
  FleetParams params;
};

// Attribute of a load relevant to moving it: ledger key plus lane miles.
struct LedgerKey {
  int pickup = 0;
  RegionId origin = 0;
  RegionId destination = 0;
  Equipment equipment = Equipment::DryVan;
  int miles_bucket = 0;

  auto operator<=>(const LedgerKey&) const = default;
};

LedgerKey ledger_key(const LoadAttributes& b, const FleetParams& params);

struct LedgerEntry {
  long offered = 0;
  long accepted = 0;
  long served = 0;
  long expired = 0;
  double miles = 0.0;
  std::vector<double> pending;  // revenue per accepted, unserved unit; descending

  long pending_count() const { return static_cast<long>(pending.size()); }
  bool operator==(const LedgerEntry&) const = default;
};

// Offered and accepted loads by (pickup step, load type).
class LoadLedger {
 public:
  void offer(const LedgerKey& key, long count = 1);
  // Commits one unit; the pickup must be later than `now`.
  void accept(const LedgerKey& key, double revenue, double miles, int now);
  // Removes the `count` most valuable pending units; returns their revenue.
  double serve(const LedgerKey& key, long count);
  // Drops every unit due at t that is still pending. Returns {units, revenue}.
  std::pair<long, double> expire(int t);
  // Keys due at t with pending units, ascending.
  std::vector<LedgerKey> due(int t) const;

  const LedgerEntry* find(const LedgerKey& key) const;
  const std::map<LedgerKey, LedgerEntry>& entries() const { return entries_; }
  long accepted_total() const { return accepted_; }
  long served_total() const { return served_; }
  long expired_total() const { return expired_; }
  long pending_total() const { return pending_; }
  // Entries with pickup >= t and pending units, counters reset except the
  // pending revenues. Used to seed lookahead copies.
  LoadLedger pending_from(int t) const;

  bool operator==(const LoadLedger&) const = default;

 private:
  std::map<LedgerKey, LedgerEntry> entries_;
  long accepted_ = 0;
  long served_ = 0;
  long expired_ = 0;
  long pending_ = 0;
};

struct FleetState {
  int t = 0;
  ResourceVector drivers;
  LoadLedger loads;
  std::optional<BeliefState> belief;
};

struct DecisionKey {
  DriverAttributes driver;
  std::optional<LedgerKey> load;  // nullopt = hold

  auto operator<=>(const DecisionKey&) const = default;
};

using DispatchDecision = std::map<DecisionKey, long>;

enum class ViolationKind {
  DriverCoverage,   // drivers of an attribute not all acted on
  LoadCapacity,     // more moves than accepted loads due now
  Negative,         // negative decision count
  Infeasible,       // move the driver cannot make
  AcceptanceBound,  // more loads accepted than offered
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

std::vector<Violation> validate_decision(const FleetState& state, const DispatchDecision& x,
                                         const FleetModel& model);

// Loaded plus deadhead driving, at the configured speed.
struct MovePlan {
  double deadhead_miles = 0.0;
  double loaded_miles = 0.0;
  double clock_hours = 0.0;  // elapsed time
  double duty_hours = 0.0;   // hours charged to the driver (half for teams)
  int elapsed_steps = 1;
};

MovePlan plan_move(const DriverAttributes& a, const LedgerKey& load, double miles,
                   const FleetModel& model);
// Available now, matching equipment, deadhead within range, enough hours.
bool can_move(const DriverAttributes& a, const LedgerKey& load, double miles,
              const FleetModel& model);

DriverAttributes hold_transition(const DriverAttributes& a, const FleetParams& params);
// Throws std::domain_error when can_move is false.
DriverAttributes move_transition(const DriverAttributes& a, const LedgerKey& load,
                                 double miles, const FleetModel& model);
DriverAttributes driver_transition(const DriverAttributes& a,
                                   const std::optional<LedgerKey>& load, double miles,
                                   const FleetModel& model);

// R^x: every driver unit carried to its post-decision attribute.
ResourceVector post_decision_resources(const FleetState& state, const DispatchDecision& x,
                                       const FleetModel& model);

// An offer together with its revenue (bid x miles) and whether it was
// committed (x^L).
struct AcceptanceInput {
  OfferedLoad load;
  double revenue = 0.0;
  bool accepted = false;
};

struct StepReport {
  int t = 0;
  long offered = 0;
  long accepted = 0;
  long served = 0;
  long expired = 0;
  double penalty = 0.0;
  double revenue = 0.0;
};

// Exogenous driver changes; the default adds nothing.
using DriverShock = std::function<ResourceVector(const FleetState&)>;

// Applies x (validated first; throws std::invalid_argument listing the
// violations), bills expiries due at t, merges accepted offers and moves
// the clock to t + 1.
StepReport advance_time(FleetState& state, const DispatchDecision& x,
                        const std::vector<AcceptanceInput>& offers, const FleetModel& model,
                        const DriverShock& shock = {});

// `n` drivers domiciled by region volume weight, starting at home with a
// full hours budget.
ResourceVector make_fleet(const Network& network, long n, std::uint64_t seed,
                          double team_fraction = 0.2,
                          const std::array<double, kEquipmentTypes>& equipment_mix = {
                              0.6, 0.15, 0.15, 0.05, 0.05},
                          double hours_cap = 70.0);

// location,domicile,type,equipment,hours_remaining,steps_since_home,eta_steps,count
void write_drivers_csv(std::ostream& out, const ResourceVector& drivers);
ResourceVector read_drivers_csv(std::istream& in, const Network& network,
                                const FleetParams& params);

void write_run_log_header(std::ostream& out);
void write_run_log_row(std::ostream& out, const StepReport& report);

FleetParams fleet_params_from(const KeyValueConfig& config, const std::string& prefix = "fleet.");

}  // namespace brokerage

#endif  // BROKERAGE_FLEET_HPP_
