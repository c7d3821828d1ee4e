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

#include <cmath>
#include <sstream>
#include <vector>

#include "brokerage/booking.hpp"
#include "brokerage/dispatch.hpp"
#include "brokerage/fleet.hpp"
#include "brokerage/network.hpp"
#include "doctest.h"

using namespace brokerage;

namespace {

FleetModel line_model() {
  FleetModel m;
  // Region 1 is 100 road miles from region 0, region 2 is 500.
  m.network = Network({{0, 0.0, 0.0}, {1, 100.0, 0.0}, {2, 500.0, 0.0}}, 1.0);
  return m;
}

DriverAttributes driver(RegionId at, double hours = 40.0) {
  DriverAttributes a;
  a.location = at;
  a.domicile = 0;
  a.hours_remaining = hours;
  a.steps_since_home = 3;
  return a;
}

LedgerKey key_for(const FleetModel& m, int pickup, RegionId o, RegionId d) {
  LoadAttributes b;
  b.origin = o;
  b.destination = d;
  b.miles = std::max(1.0, m.network.miles(o, d));
  b.pickup = pickup;
  return ledger_key(b, m.params);
}

FleetState one_load_state(const FleetModel& m, const DriverAttributes& a, RegionId o,
                          RegionId d, double revenue) {
  FleetState s;
  s.t = 4;
  s.drivers[a] = 1;
  LedgerKey k = key_for(m, 4, o, d);
  s.loads.offer(k);
  s.loads.accept(k, revenue, std::max(1.0, m.network.miles(o, d)), 3);
  return s;
}

}  // namespace

TEST_CASE("hold rests the driver up to the cap") {
  FleetParams p;
  auto a = driver(1, 65.0);
  auto h = hold_transition(a, p);
  CHECK(h.location == 1);
  CHECK(h.hours_remaining == p.hours_cap);
  CHECK(h.steps_since_home == 4);
  auto low = hold_transition(driver(1, 20.0), p);
  CHECK(low.hours_remaining == 20.0 + p.rest_hours_per_step);
  auto home = hold_transition(driver(0), p);
  CHECK(home.steps_since_home == 0);
}

TEST_CASE("moves deduct driving hours and track home") {
  FleetModel m = line_model();
  // From region 1: 100 deadhead miles to region 0, then 500 loaded to region 2.
  LedgerKey k = key_for(m, 5, 0, 2);
  auto a = driver(1, 60.0);
  auto next = driver_transition(a, k, 500.0, m);
  CHECK(next.location == 2);
  CHECK(next.hours_remaining == doctest::Approx(60.0 - 10.0 - 2.0));
  CHECK(next.eta_steps == 1);  // 12 h at 6 h per step, one step already elapsed
  CHECK(next.steps_since_home == 4);

  auto team = a;
  team.type = DriverType::Team;
  CHECK(driver_transition(team, k, 500.0, m).hours_remaining == doctest::Approx(60.0 - 6.0));

  LedgerKey home = key_for(m, 5, 1, 0);
  CHECK(driver_transition(a, home, 100.0, m).steps_since_home == 0);
}

TEST_CASE("infeasible moves") {
  FleetModel m = line_model();
  LedgerKey far = key_for(m, 5, 2, 0);  // 400 deadhead miles from region 1
  CHECK_FALSE(can_move(driver(1), far, 500.0, m));
  LedgerKey k = key_for(m, 5, 0, 2);
  CHECK_FALSE(can_move(driver(0, 5.0), k, 500.0, m));  // out of hours
  auto flat = driver(0);
  flat.equipment = Equipment::FlatBed;
  CHECK_FALSE(can_move(flat, k, 500.0, m));
  auto moving = driver(0);
  moving.eta_steps = 2;
  CHECK_FALSE(can_move(moving, k, 500.0, m));
  CHECK_THROWS(move_transition(flat, k, 500.0, m));
}

TEST_CASE("decision validation") {
  FleetModel m = line_model();
  FleetState s = one_load_state(m, driver(0), 0, 1, 500.0);
  s.drivers[driver(1)] = 1;
  LedgerKey k = key_for(m, 4, 0, 1);

  DispatchDecision hold{{{driver(0), std::nullopt}, 1}, {{driver(1), std::nullopt}, 1}};
  CHECK(validate_decision(s, hold, m).empty());

  DispatchDecision two{{{driver(0), k}, 1}, {{driver(1), k}, 1}};
  auto v = validate_decision(s, two, m);
  REQUIRE_FALSE(v.empty());
  CHECK(std::any_of(v.begin(), v.end(),
                    [](const Violation& x) { return x.kind == ViolationKind::LoadCapacity; }));

  DispatchDecision missing{{{driver(0), std::nullopt}, 1}};
  v = validate_decision(s, missing, m);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::DriverCoverage);

  DispatchDecision negative{{{driver(0), std::nullopt}, -1}, {{driver(1), std::nullopt}, 1}};
  v = validate_decision(s, negative, m);
  CHECK(std::any_of(v.begin(), v.end(),
                    [](const Violation& x) { return x.kind == ViolationKind::Negative; }));
}

TEST_CASE("post-decision resources") {
  FleetModel m = line_model();
  FleetState s = one_load_state(m, driver(0), 0, 1, 500.0);
  s.drivers[driver(2)] = 2;
  DispatchDecision hold{{{driver(0), std::nullopt}, 1}, {{driver(2), std::nullopt}, 2}};
  auto r = post_decision_resources(s, hold, m);
  CHECK(r.size() == 2);
  CHECK(r.at(hold_transition(driver(0), m.params)) == 1);
  CHECK(r.at(hold_transition(driver(2), m.params)) == 2);

  LedgerKey k = key_for(m, 4, 0, 1);
  DispatchDecision move{{{driver(0), k}, 1}, {{driver(2), std::nullopt}, 2}};
  r = post_decision_resources(s, move, m);
  CHECK(r.at(move_transition(driver(0), k, 100.0, m)) == 1);
  CHECK(total_drivers(r) == 3);
}

TEST_CASE("advancing time") {
  FleetModel m = line_model();
  SUBCASE("no offers and all holds only rest the drivers") {
    FleetState s;
    s.t = 2;
    s.drivers[driver(1, 10.0)] = 3;
    auto rep = advance_time(s, {{{driver(1, 10.0), std::nullopt}, 3}}, {}, m);
    CHECK(s.t == 3);
    CHECK(s.drivers.size() == 1);
    CHECK(s.drivers.at(hold_transition(driver(1, 10.0), m.params)) == 3);
    CHECK(rep.served == 0);
    CHECK(rep.expired == 0);
  }
  SUBCASE("an accepted load nobody can reach expires with a penalty") {
    FleetState s = one_load_state(m, driver(2), 0, 1, 500.0);
    auto rep = advance_time(s, {{{driver(2), std::nullopt}, 1}}, {}, m);
    CHECK(rep.expired == 1);
    CHECK(rep.penalty == doctest::Approx(m.params.penalty_factor * 500.0));
    CHECK(s.loads.expired_total() == 1);
    CHECK(s.loads.pending_total() == 0);
  }
  SUBCASE("a served load earns its revenue") {
    FleetState s = one_load_state(m, driver(0), 0, 1, 500.0);
    auto rep = advance_time(s, {{{driver(0), key_for(m, 4, 0, 1)}, 1}}, {}, m);
    CHECK(rep.served == 1);
    CHECK(rep.revenue == 500.0);
    CHECK(s.loads.served_total() == 1);
  }
  SUBCASE("invalid decisions are refused") {
    FleetState s = one_load_state(m, driver(0), 0, 1, 500.0);
    CHECK_THROWS(advance_time(s, {}, {}, m));
  }
}

TEST_CASE("ledger refuses impossible bookkeeping") {
  LoadLedger l;
  LedgerKey k{5, 0, 1, Equipment::DryVan, 2};
  CHECK_THROWS(l.accept(k, 100.0, 100.0, 2));  // not offered
  l.offer(k);
  CHECK_THROWS(l.accept(k, 100.0, 100.0, 5));  // pickup not in the future
  l.accept(k, 100.0, 100.0, 4);
  CHECK_THROWS(l.serve(k, 2));
  CHECK(l.serve(k, 1) == 100.0);
  CHECK(l.accepted_total() == l.served_total() + l.expired_total() + l.pending_total());
}

TEST_CASE("a 56-step run conserves drivers and loads") {
  FleetModel m;
  m.network = make_synthetic_network(8, 3, 600.0, 400.0);
  BookingConfig booking = make_synthetic_booking(m.network, 6.0);
  OfferSampler sampler(booking);
  FleetState s;
  s.drivers = make_fleet(m.network, 25, 4);
  const long drivers0 = total_drivers(s.drivers);
  ValueFunction vfa;
  ContributionParams cp;
  Rng rng(8);
  // Independent replay of the ledger from the step reports.
  long accepted = 0, served = 0, expired = 0;
  for (int t = 0; t < 56; ++t) {
    auto offers = sampler.sample(t, rng);
    std::vector<AcceptanceInput> in;
    for (auto& o : offers) in.push_back({o, 2.0 * o.attributes.miles, uniform01(rng) < 0.5});
    auto d = solve_dispatch(s, vfa, m, cp);
    REQUIRE(validate_decision(s, d.decision, m).empty());
    auto rep = advance_time(s, d.decision, in, m);
    accepted += rep.accepted;
    served += rep.served;
    expired += rep.expired;
    CHECK(total_drivers(s.drivers) == drivers0);
    for (const auto& [a, count] : s.drivers) {
      CHECK(count >= 0);
      CHECK(a.hours_remaining >= 0.0);
      CHECK(a.hours_remaining <= m.params.hours_cap);
    }
    long pending = 0;
    for (const auto& [k, e] : s.loads.entries()) pending += e.pending_count();
    CHECK(accepted == served + expired + pending);
    CHECK(s.loads.accepted_total() == accepted);
    CHECK(s.loads.pending_total() == pending);
  }
  CHECK(served > 0);
}

TEST_CASE("driver CSV round trip") {
  Network n = make_synthetic_network(6, 2);
  auto fleet = make_fleet(n, 30, 9);
  CHECK(total_drivers(fleet) == 30);
  std::stringstream s;
  write_drivers_csv(s, fleet);
  CHECK(read_drivers_csv(s, n, FleetParams{}) == fleet);
}
