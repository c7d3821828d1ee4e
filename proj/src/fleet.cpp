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

#include "brokerage/fleet.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "brokerage/config.hpp"
#include "brokerage/random.hpp"

namespace brokerage {

std::string_view driver_type_name(DriverType type) {
  return type == DriverType::Solo ? "solo" : "team";
}

DriverType parse_driver_type(std::string_view name) {
  if (name == "solo") return DriverType::Solo;
  if (name == "team") return DriverType::Team;
  throw std::invalid_argument("unknown driver type '" + std::string(name) + "'");
}

long total_drivers(const ResourceVector& r) {
  long n = 0;
  for (const auto& [a, count] : r) n += count;
  return n;
}

void FleetParams::validate() const {
  if (!(speed_mph > 0.0)) throw std::invalid_argument("speed must be positive");
  if (step_hours <= 0 || 24 % step_hours != 0) {
    throw std::invalid_argument("step_hours must divide 24");
  }
  if (!(hours_cap > 0.0)) throw std::invalid_argument("hours cap must be positive");
  if (!(rest_hours_per_step >= 0.0)) throw std::invalid_argument("rest must be nonnegative");
  if (!(max_deadhead_miles >= 0.0)) throw std::invalid_argument("deadhead range must be nonnegative");
  if (!(penalty_factor >= 0.0)) throw std::invalid_argument("penalty factor must be nonnegative");
  if (!(miles_bucket > 0.0)) throw std::invalid_argument("miles bucket must be positive");
}

LedgerKey ledger_key(const LoadAttributes& b, const FleetParams& params) {
  return {b.pickup, b.origin, b.destination, b.equipment,
          static_cast<int>(std::floor(b.miles / params.miles_bucket))};
}

// ---------------------------------------------------------------------------

void LoadLedger::offer(const LedgerKey& key, long count) {
  if (count < 0) throw std::invalid_argument("negative offer count");
  entries_[key].offered += count;
}

void LoadLedger::accept(const LedgerKey& key, double revenue, double miles, int now) {
  if (key.pickup <= now) {
    throw std::invalid_argument("accepted loads must be picked up after the current step");
  }
  LedgerEntry& e = entries_[key];
  if (e.accepted + 1 > e.offered) throw std::logic_error("accepting more loads than offered");
  ++e.accepted;
  if (e.miles == 0.0) e.miles = miles;
  e.pending.insert(std::upper_bound(e.pending.begin(), e.pending.end(), revenue,
                                    std::greater<>()),
                   revenue);
  ++accepted_;
  ++pending_;
}

double LoadLedger::serve(const LedgerKey& key, long count) {
  if (count == 0) return 0.0;
  auto it = entries_.find(key);
  if (it == entries_.end() || it->second.pending_count() < count) {
    throw std::logic_error("serving more loads than are pending");
  }
  auto& p = it->second.pending;
  double revenue = std::accumulate(p.begin(), p.begin() + count, 0.0);
  p.erase(p.begin(), p.begin() + count);
  it->second.served += count;
  served_ += count;
  pending_ -= count;
  return revenue;
}

namespace {

LedgerKey first_key_at(int t) {
  return {t, INT_MIN, INT_MIN, Equipment::DryVan, INT_MIN};
}

}  // namespace

std::pair<long, double> LoadLedger::expire(int t) {
  long units = 0;
  double revenue = 0.0;
  for (auto it = entries_.lower_bound(first_key_at(t));
       it != entries_.end() && it->first.pickup == t; ++it) {
    auto& e = it->second;
    units += e.pending_count();
    revenue += std::accumulate(e.pending.begin(), e.pending.end(), 0.0);
    e.expired += e.pending_count();
    e.pending.clear();
  }
  expired_ += units;
  pending_ -= units;
  return {units, revenue};
}

std::vector<LedgerKey> LoadLedger::due(int t) const {
  std::vector<LedgerKey> keys;
  for (auto it = entries_.lower_bound(first_key_at(t));
       it != entries_.end() && it->first.pickup == t; ++it) {
    if (!it->second.pending.empty()) keys.push_back(it->first);
  }
  return keys;
}

const LedgerEntry* LoadLedger::find(const LedgerKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

LoadLedger LoadLedger::pending_from(int t) const {
  LoadLedger copy;
  for (auto it = entries_.lower_bound(first_key_at(t)); it != entries_.end(); ++it) {
    const auto& e = it->second;
    if (e.pending.empty()) continue;
    LedgerEntry c;
    c.offered = c.accepted = e.pending_count();
    c.miles = e.miles;
    c.pending = e.pending;
    copy.accepted_ += c.accepted;
    copy.pending_ += c.accepted;
    copy.entries_.emplace(it->first, std::move(c));
  }
  return copy;
}

// ---------------------------------------------------------------------------

MovePlan plan_move(const DriverAttributes& a, const LedgerKey& load, double miles,
                   const FleetModel& model) {
  const FleetParams& p = model.params;
  MovePlan plan;
  plan.deadhead_miles = model.network.miles(a.location, load.origin);
  plan.loaded_miles = miles;
  plan.clock_hours = (plan.deadhead_miles + miles) / p.speed_mph;
  plan.duty_hours = a.type == DriverType::Team ? 0.5 * plan.clock_hours : plan.clock_hours;
  plan.elapsed_steps =
      std::max(1, static_cast<int>(std::ceil(plan.clock_hours / p.step_hours - 1e-12)));
  return plan;
}

bool can_move(const DriverAttributes& a, const LedgerKey& load, double miles,
              const FleetModel& model) {
  if (a.eta_steps > 0 || a.equipment != load.equipment) return false;
  MovePlan plan = plan_move(a, load, miles, model);
  return plan.deadhead_miles <= model.params.max_deadhead_miles &&
         plan.duty_hours <= a.hours_remaining;
}

DriverAttributes hold_transition(const DriverAttributes& a, const FleetParams& params) {
  DriverAttributes next = a;
  if (a.eta_steps > 0) {
    --next.eta_steps;
  } else {
    next.hours_remaining = std::min(params.hours_cap, a.hours_remaining + params.rest_hours_per_step);
  }
  next.steps_since_home =
      a.location == a.domicile ? 0 : std::min(params.max_steps_since_home, a.steps_since_home + 1);
  return next;
}

DriverAttributes move_transition(const DriverAttributes& a, const LedgerKey& load,
                                 double miles, const FleetModel& model) {
  if (!can_move(a, load, miles, model)) {
    throw std::domain_error("driver cannot make this move");
  }
  MovePlan plan = plan_move(a, load, miles, model);
  DriverAttributes next = a;
  next.location = load.destination;
  next.hours_remaining = std::max(0.0, a.hours_remaining - plan.duty_hours);
  next.eta_steps = plan.elapsed_steps - 1;
  next.steps_since_home =
      load.destination == a.domicile
          ? 0
          : std::min(model.params.max_steps_since_home, a.steps_since_home + 1);
  return next;
}

DriverAttributes driver_transition(const DriverAttributes& a,
                                   const std::optional<LedgerKey>& load, double miles,
                                   const FleetModel& model) {
  return load ? move_transition(a, *load, miles, model) : hold_transition(a, model.params);
}

// ---------------------------------------------------------------------------

std::vector<Violation> validate_decision(const FleetState& state, const DispatchDecision& x,
                                         const FleetModel& model) {
  std::vector<Violation> out;
  std::map<DriverAttributes, long> acted;
  std::map<LedgerKey, long> moves;
  for (const auto& [key, count] : x) {
    if (count < 0) {
      out.push_back({ViolationKind::Negative, "negative decision count"});
      continue;
    }
    acted[key.driver] += count;
    if (!key.load || count == 0) continue;
    moves[*key.load] += count;
    const LedgerEntry* e = state.loads.find(*key.load);
    double miles = e ? e->miles : 0.0;
    if (!e || !can_move(key.driver, *key.load, miles, model)) {
      out.push_back({ViolationKind::Infeasible, "driver cannot make the assigned move"});
    }
  }
  for (const auto& [a, count] : state.drivers) {
    auto it = acted.find(a);
    long got = it == acted.end() ? 0 : it->second;
    if (got != count) {
      out.push_back({ViolationKind::DriverCoverage,
                     "acted on " + std::to_string(got) + " of " + std::to_string(count) +
                         " drivers of one attribute"});
    }
  }
  for (const auto& [a, count] : acted) {
    if (count != 0 && !state.drivers.contains(a)) {
      out.push_back({ViolationKind::DriverCoverage, "decision for a driver not in the fleet"});
    }
  }
  for (const auto& [key, count] : moves) {
    const LedgerEntry* e = state.loads.find(key);
    long available = (e && key.pickup == state.t) ? e->pending_count() : 0;
    if (count > available) {
      out.push_back({ViolationKind::LoadCapacity,
                     std::to_string(count) + " moves against " + std::to_string(available) +
                         " accepted loads due now"});
    }
  }
  return out;
}

ResourceVector post_decision_resources(const FleetState& state, const DispatchDecision& x,
                                       const FleetModel& model) {
  ResourceVector next;
  for (const auto& [key, count] : x) {
    if (count == 0) continue;
    double miles = 0.0;
    if (key.load) {
      const LedgerEntry* e = state.loads.find(*key.load);
      if (!e) throw std::invalid_argument("move to a load that is not in the ledger");
      miles = e->miles;
    }
    next[driver_transition(key.driver, key.load, miles, model)] += count;
  }
  return next;
}

StepReport advance_time(FleetState& state, const DispatchDecision& x,
                        const std::vector<AcceptanceInput>& offers, const FleetModel& model,
                        const DriverShock& shock) {
  auto violations = validate_decision(state, x, model);
  if (!violations.empty()) {
    std::string msg = "invalid dispatch decision:";
    for (const auto& v : violations) msg += " " + v.message + ";";
    throw std::invalid_argument(msg);
  }
  StepReport report;
  report.t = state.t;
  ResourceVector next = post_decision_resources(state, x, model);
  for (const auto& [key, count] : x) {
    if (!key.load || count == 0) continue;
    report.revenue += state.loads.serve(*key.load, count);
    report.served += count;
  }
  auto [expired, lost] = state.loads.expire(state.t);
  report.expired = expired;
  report.penalty = model.params.penalty_factor * lost;
  for (const auto& o : offers) {
    LedgerKey key = ledger_key(o.load.attributes, model.params);
    state.loads.offer(key);
    ++report.offered;
    if (!o.accepted) continue;
    state.loads.accept(key, o.revenue, o.load.attributes.miles, state.t);
    ++report.accepted;
  }
  if (shock) {
    for (const auto& [a, delta] : shock(state)) {
      long& c = next[a];
      c += delta;
      if (c < 0) throw std::logic_error("exogenous change removes more drivers than exist");
    }
    std::erase_if(next, [](const auto& kv) { return kv.second == 0; });
  }
  state.drivers = std::move(next);
  ++state.t;
  return report;
}

// ---------------------------------------------------------------------------

ResourceVector make_fleet(const Network& network, long n, std::uint64_t seed,
                          double team_fraction,
                          const std::array<double, kEquipmentTypes>& equipment_mix,
                          double hours_cap) {
  if (n < 0) throw std::invalid_argument("fleet size must be nonnegative");
  Rng rng(derive_seed(seed, {0x666c656574ULL}));
  std::vector<double> region_cum;
  double acc = 0.0;
  for (const Region& r : network.regions()) region_cum.push_back(acc += r.weight);
  std::vector<double> eq_cum;
  acc = 0.0;
  for (double e : equipment_mix) eq_cum.push_back(acc += e);
  auto draw = [&](const std::vector<double>& cum) {
    double u = uniform01(rng) * cum.back();
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    if (it == cum.end()) --it;
    return static_cast<std::size_t>(it - cum.begin());
  };
  ResourceVector fleet;
  for (long i = 0; i < n; ++i) {
    DriverAttributes a;
    a.domicile = network.regions()[draw(region_cum)].id;
    a.location = a.domicile;
    a.type = uniform01(rng) < team_fraction ? DriverType::Team : DriverType::Solo;
    a.equipment = static_cast<Equipment>(draw(eq_cum));
    a.hours_remaining = hours_cap;
    ++fleet[a];
  }
  return fleet;
}

void write_drivers_csv(std::ostream& out, const ResourceVector& drivers) {
  out << "location,domicile,type,equipment,hours_remaining,steps_since_home,eta_steps,count\n";
  char buf[64];
  for (const auto& [a, count] : drivers) {
    std::snprintf(buf, sizeof buf, "%.17g", a.hours_remaining);
    out << a.location << ',' << a.domicile << ',' << driver_type_name(a.type) << ','
        << equipment_name(a.equipment) << ',' << buf << ',' << a.steps_since_home << ','
        << a.eta_steps << ',' << count << '\n';
  }
}

ResourceVector read_drivers_csv(std::istream& in, const Network& network,
                                const FleetParams& params) {
  ResourceVector drivers;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (number == 1 || trim(line).empty()) continue;
    auto f = split_list(line, ',');
    if (f.size() != 8) throw ConfigError(number, "driver rows need 8 fields");
    DriverAttributes a;
    long count;
    try {
      a.location = std::stoi(f[0]);
      a.domicile = std::stoi(f[1]);
      a.type = parse_driver_type(f[2]);
      a.equipment = parse_equipment(f[3]);
      a.hours_remaining = std::stod(f[4]);
      a.steps_since_home = std::stoi(f[5]);
      a.eta_steps = std::stoi(f[6]);
      count = std::stol(f[7]);
    } catch (const std::exception& e) {
      throw ConfigError(number, std::string("bad driver row: ") + e.what());
    }
    if (!network.contains(a.location) || !network.contains(a.domicile)) {
      throw ConfigError(number, "driver row names an unknown region");
    }
    if (a.hours_remaining < 0.0 || a.hours_remaining > params.hours_cap || count < 0 ||
        a.eta_steps < 0 || a.steps_since_home < 0) {
      throw ConfigError(number, "driver row outside the attribute bounds");
    }
    drivers[a] += count;
  }
  return drivers;
}

void write_run_log_header(std::ostream& out) {
  out << "t,offered,accepted,served,expired,penalty,revenue\n";
}

void write_run_log_row(std::ostream& out, const StepReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d,%ld,%ld,%ld,%ld,%.10g,%.10g\n", r.t, r.offered,
                r.accepted, r.served, r.expired, r.penalty, r.revenue);
  out << buf;
}

FleetParams fleet_params_from(const KeyValueConfig& config, const std::string& prefix) {
  FleetParams p;
  p.speed_mph = config.get_double(prefix + "speed_mph", p.speed_mph);
  p.step_hours = static_cast<int>(config.get_int(prefix + "step_hours", p.step_hours));
  p.hours_cap = config.get_double(prefix + "hours_cap", p.hours_cap);
  p.rest_hours_per_step = config.get_double(prefix + "rest_hours_per_step", p.rest_hours_per_step);
  p.max_deadhead_miles = config.get_double(prefix + "max_deadhead_miles", p.max_deadhead_miles);
  p.penalty_factor = config.get_double(prefix + "penalty_factor", p.penalty_factor);
  p.miles_bucket = config.get_double(prefix + "miles_bucket", p.miles_bucket);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, std::string("fleet: ") + e.what());
  }
  return p;
}

}  // namespace brokerage
