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

#include <algorithm>
#include <cmath>
#include <vector>

#include "brokerage/harness.hpp"
#include "brokerage/policies.hpp"
#include "brokerage/theory.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace brokerage;

namespace {

CandidateModel cf(const FeatureRegistry& reg, double a0, double a1, double b0, double b1) {
  return make_context_free_candidate(reg, {a0, a1, b0, b1});
}

double hand_sigmoid(double h) { return 1.0 / (1.0 + std::exp(-h)); }

// Two-price instance: under the first candidate p = 1 is best, under the
// second and under the 50/50 mixture p = 2 is best.
struct TwoPrice {
  FeatureRegistry reg = theory_registry();
  PriceGrid grid = PriceGrid::uniform(0.0, 2.0, 2);
  BeliefState state = BeliefState::with_probabilities(
      {cf(reg, 800.0, 0.0, std::log(4.0), -std::log(4.0)),
       cf(reg, 800.0, 0.0, -3.0 * std::log(9.0), 2.0 * std::log(9.0))},
      {0.5, 0.5});
};

}  // namespace

TEST_CASE("grid construction") {
  auto g = PriceGrid::uniform(0.0, 4.0, 80);
  REQUIRE(g.size() == 80);
  CHECK(g.points.front() == doctest::Approx(0.05));
  CHECK(g.points.back() == 4.0);
  for (std::size_t i = 1; i < g.size(); ++i) {
    CHECK(g.points[i] - g.points[i - 1] == doctest::Approx(0.05));
  }
  CHECK(g.index_of(2.0) == 39u);
  CHECK_FALSE(g.index_of(2.01).has_value());
}

TEST_CASE("horizon weight") {
  CHECK(HorizonWeight::remaining(100).evaluate(40) == 60.0);
  CHECK(HorizonWeight::constant(100).evaluate(40) == 100.0);
}

TEST_CASE("expected revenue by hand") {
  auto reg = theory_registry();
  auto b = context_free_load();
  auto half = init_uniform({cf(reg, 800.0, 0.0, 0.0, 0.0)});
  CHECK(expected_revenue(half, reg, b, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(expected_revenue(half, reg, b, 1e-12) < 1e-12);

  // Moving weight to the candidate with the larger acceptance raises it.
  auto lo = cf(reg, 0.0, 0.5, 2.0, -0.5);
  auto hi = cf(reg, 1.0, 0.5, 3.0, -0.5);
  double prev = -1.0;
  for (double q = 0.0; q <= 1.0; q += 0.25) {
    double v = expected_revenue(BeliefState::with_probabilities({lo, hi}, {1.0 - q, q}), reg, b,
                                1.5);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("knowledge gradient is zero for a single candidate") {
  auto reg = theory_registry();
  Rng rng(2);
  auto inst = random_instance(reg, 1, 10, rng);
  auto state = init_uniform(inst.candidates);
  for (double p : inst.grid.points) {
    CHECK(std::abs(kg_value(state, reg, inst.context, p, inst.grid)) <= 1e-12);
  }
}

TEST_CASE("knowledge gradient matches the transition oracle") {
  auto reg = theory_registry();
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    int K = 1 + i % 4;
    auto inst = random_instance(reg, K, i < 50 ? 2 : 10, rng);
    auto state = BeliefState::with_probabilities(inst.candidates, inst.q);
    double p = inst.grid.points[inst.price_index];
    double got = kg_value(state, reg, inst.context, p, inst.grid);
    double want = oracle::kg(state, reg, inst.context, p, inst.grid);
    CHECK(std::abs(got - want) <= 1e-10);
  }
}

TEST_CASE("knowledge gradient is nonnegative") {
  auto reg = theory_registry();
  Rng rng(13);
  for (int i = 0; i < 500; ++i) {
    auto inst = random_instance(reg, 2 + i % 4, 80, rng);
    auto state = BeliefState::with_probabilities(inst.candidates, inst.q);
    CHECK(kg_value(state, reg, inst.context, inst.grid.points[inst.price_index], inst.grid) >=
          -1e-10);
  }
}

TEST_CASE("knowledge gradient vanishes at the uninstructive bid") {
  auto reg = theory_registry();
  auto [first, second] = stall_pair();
  auto grid = PriceGrid::uniform(0.0, 4.0, 16);
  for (double q : {0.1, 0.5, 0.75, 0.9}) {
    auto state = BeliefState::with_probabilities(
        {make_context_free_candidate(reg, first), make_context_free_candidate(reg, second)},
        {q, 1.0 - q});
    CHECK(std::abs(kg_value(state, reg, context_free_load(), 2.0, grid)) <= 1e-10);
  }
}

TEST_CASE("KG reduces to exploitation") {
  auto reg = theory_registry();
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    auto inst = random_instance(reg, 3, 20, rng);
    auto state = BeliefState::with_probabilities(inst.candidates, inst.q);
    auto ex = exploit_policy(state, reg, inst.context, inst.grid);
    CHECK(kg_policy(state, reg, inst.context, HorizonWeight::constant(0.0), 0, inst.grid).index ==
          ex.index);
    auto single = init_uniform({inst.candidates[0]});
    CHECK(kg_policy(single, reg, inst.context, HorizonWeight::constant(1e6), 0, inst.grid).index ==
          exploit_policy(single, reg, inst.context, inst.grid).index);
  }
}

TEST_CASE("KG score is revenue plus weighted knowledge gradient") {
  auto reg = theory_registry();
  Rng rng(19);
  auto inst = random_instance(reg, 4, 12, rng);
  auto state = BeliefState::with_probabilities(inst.candidates, inst.q);
  auto d = kg_policy(state, reg, inst.context, HorizonWeight::remaining(100), 40, inst.grid);
  REQUIRE(d.diagnostics.size() == inst.grid.size());
  std::size_t best = 0;
  std::vector<double> score;
  for (double p : inst.grid.points) {
    score.push_back(expected_revenue(state, reg, inst.context, p) +
                    60.0 * oracle::kg(state, reg, inst.context, p, inst.grid));
  }
  for (std::size_t i = 1; i < score.size(); ++i) {
    if (score[i] > score[best] + 1e-9) best = i;
  }
  CHECK(d.index == best);
}

TEST_CASE("exploitation on a five-point grid") {
  auto reg = theory_registry();
  auto b = context_free_load();
  auto grid = PriceGrid::uniform(0.0, 4.0, 5);  // 0.8 1.6 2.4 3.2 4.0
  auto state = init_uniform({cf(reg, -2.0, 1.0, 6.0, -3.0)});
  std::size_t best = 0;
  double best_rev = -1.0;
  for (std::size_t i = 0; i < 5; ++i) {
    double p = grid.points[i];
    double rev = p * hand_sigmoid(-2.0 + p) * hand_sigmoid(6.0 - 3.0 * p);
    if (rev > best_rev) {
      best_rev = rev;
      best = i;
    }
  }
  CHECK(best == 1);
  auto d = exploit_policy(state, reg, b, grid);
  CHECK(d.index == best);
  CHECK(d.price == doctest::Approx(1.6));
}

TEST_CASE("exploitation tie-break and monotone revenue") {
  auto reg = theory_registry();
  auto b = context_free_load();
  auto grid = PriceGrid::uniform(0.0, 4.0, 8);
  // Acceptance 1/2 at p = 1 and 1/4 at p = 2: both revenues are exactly 1/2.
  const double u = std::log(1.0 / 3.0);
  auto tie = init_uniform({cf(reg, 800.0, 0.0, -u, u)});
  auto two = PriceGrid::uniform(0.0, 2.0, 2);
  auto d = exploit_policy(tie, reg, b, two);
  REQUIRE(d.diagnostics[0].expected_revenue == d.diagnostics[1].expected_revenue);
  CHECK(d.index == 0);
  // Constant acceptance: revenue rises with price.
  CHECK(exploit_policy(init_uniform({cf(reg, 1.0, 0.0, 1.0, 0.0)}), reg, b, grid).index == 7);
}

TEST_CASE("Thompson sampling picks candidates in proportion to belief") {
  TwoPrice t;
  auto b = context_free_load();
  Rng rng(23);
  int first = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    auto d = thompson_policy(t.state, t.reg, b, t.grid, rng);
    REQUIRE(d.sampled_candidate.has_value());
    if (*d.sampled_candidate == 0) {
      ++first;
      CHECK(d.price == 1.0);
    } else {
      CHECK(d.price == 2.0);
    }
  }
  CHECK(std::abs(first / double(draws) - 0.5) <= 0.02);

  Rng a(5), c(5);
  CHECK(thompson_policy(t.state, t.reg, b, t.grid, a).price ==
        thompson_policy(t.state, t.reg, b, t.grid, c).price);
}

TEST_CASE("optimistic Thompson sampling takes the mixture's best price") {
  TwoPrice t;
  auto b = context_free_load();
  // Hand values: candidate revenues (0.5, 0.4) and (0.1, 1.8); mixture (0.3, 1.1).
  CHECK(exploit_policy(t.state, t.reg, b, t.grid).price == 2.0);
  bool seen = false;
  for (std::uint64_t seed = 0; seed < 64 && !seen; ++seed) {
    Rng r1(seed), r2(seed);
    auto ts = thompson_policy(t.state, t.reg, b, t.grid, r1);
    auto ots = opt_thompson_policy(t.state, t.reg, b, t.grid, r2);
    REQUIRE(ts.sampled_candidate == ots.sampled_candidate);
    if (*ts.sampled_candidate != 0) continue;
    seen = true;
    CHECK(ts.price == 1.0);
    CHECK(ots.price == 2.0);
  }
  CHECK(seen);
}

TEST_CASE("optimistic scores dominate Thompson scores") {
  auto reg = theory_registry();
  Rng rng(29);
  for (int i = 0; i < 50; ++i) {
    auto inst = random_instance(reg, 3, 15, rng);
    auto state = BeliefState::with_probabilities(inst.candidates, inst.q);
    std::uint64_t seed = rng();
    Rng r1(seed), r2(seed);
    auto ts = thompson_policy(state, reg, inst.context, inst.grid, r1);
    auto ots = opt_thompson_policy(state, reg, inst.context, inst.grid, r2);
    for (std::size_t j = 0; j < inst.grid.size(); ++j) {
      CHECK(ots.diagnostics[j].score >= ts.diagnostics[j].score);
    }
  }
}

TEST_CASE("all policies agree under a degenerate belief") {
  auto reg = theory_registry();
  Rng rng(31);
  for (int i = 0; i < 50; ++i) {
    auto inst = random_instance(reg, 3, 30, rng);
    std::vector<double> q(3, 0.0);
    q[i % 3] = 1.0;
    auto state = BeliefState::with_probabilities(inst.candidates, q);
    double p = exploit_policy(state, reg, inst.context, inst.grid).price;
    CHECK(kg_policy(state, reg, inst.context, HorizonWeight::constant(100), 0, inst.grid).price == p);
    CHECK(thompson_policy(state, reg, inst.context, inst.grid, rng).price == p);
    CHECK(opt_thompson_policy(state, reg, inst.context, inst.grid, rng).price == p);
    CHECK(est_opt_policy(inst.candidates[i % 3], reg, inst.context, inst.grid).price == p);
  }
}

TEST_CASE("estimate-then-optimize on the truth has zero regret") {
  auto reg = theory_registry();
  Rng rng(37);
  for (int i = 0; i < 30; ++i) {
    auto inst = random_instance(reg, 1, 80, rng);
    auto d = est_opt_policy(inst.candidates[0], reg, inst.context, inst.grid);
    auto o = oracle_price(inst.candidates[0], reg, inst.context, inst.grid);
    CHECK(d.price == o.price);
  }
}

TEST_CASE("a destination weight can move the estimated price") {
  auto reg = theory_registry();
  auto grid = PriceGrid::uniform(0.0, 4.0, 80);
  auto model = cf(reg, -2.0, 1.0, 6.0, -3.0);
  const auto& ls = reg.layout(Side::Shipper);
  model.beta.weights[ls.destination + *reg.destination_slot(1)] = 3.0;
  auto b1 = context_free_load();
  auto b2 = b1;
  b2.destination = 2;
  CHECK(est_opt_policy(model, reg, b1, grid).price > est_opt_policy(model, reg, b2, grid).price);
}

TEST_CASE("mean price") {
  CHECK(mean_price_policy(std::vector<double>{2.0, 3.0}) == 2.5);
  CHECK(mean_price_policy(std::vector<double>{4.56}) == 4.56);
  CHECK_THROWS(mean_price_policy(std::vector<double>{}));
}

TEST_CASE("uninstructive bid") {
  ContextFreeModel a{0.0, 1.0, 0.0, -1.0};
  ContextFreeModel b{-2.0, 2.0, 2.0, -2.0};
  auto bid = uninstructive_bid(a, b, 0.0, 4.0);
  REQUIRE(bid.price.has_value());
  CHECK(*bid.price == doctest::Approx(2.0).epsilon(1e-14));

  auto same = uninstructive_bid(a, a, 0.0, 4.0);
  CHECK(same.degenerate);
  CHECK_FALSE(same.price.has_value());

  // Carrier lines cross at 1, shipper lines at 3.
  ContextFreeModel c{0.0, 1.0, 0.0, -1.0};
  ContextFreeModel d{-1.0, 2.0, 3.0, -2.0};
  CHECK_FALSE(uninstructive_bid(c, d, 0.0, 4.0).price.has_value());
}

TEST_CASE("incomplete-learning classification") {
  // No common crossing.
  CHECK_FALSE(incomplete_learning_check({0, 1, 0, -1}, {-1, 2, 3, -2}, 0, 4).in_set);

  // Crossing at 2 where both margins are negative.
  auto r = incomplete_learning_check({0, 1, 0, -1}, {-2, 2, 2, -2}, 0, 4);
  REQUIRE(r.p_hat.has_value());
  double s2 = hand_sigmoid(2.0);
  CHECK(r.m1 == doctest::Approx((1 - s2) - (1 - (1 - s2))).epsilon(1e-12));
  CHECK(r.m2 == doctest::Approx(2 * (1 - s2) - 2 * s2).epsilon(1e-12));
  CHECK_FALSE(r.in_set);

  auto [first, second] = stall_pair();
  auto s = incomplete_learning_check(first, second, 0, 4);
  CHECK(s.in_set);
  CHECK(*s.p_hat == doctest::Approx(2.0));
  CHECK(s.m1 == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(s.m2 == doctest::Approx(1.0).epsilon(1e-12));
  // 1 + p (q m1 + (1 - q) m2) = 3 - 4q vanishes at 3/4.
  CHECK(*locate_confounding_belief(first, second, 0, 4) == doctest::Approx(0.75).epsilon(1e-12));

  CHECK_THROWS(incomplete_learning_check({0, -1, 0, -1}, {-2, 2, 2, -2}, 0, 4));
  CHECK_THROWS(incomplete_learning_check({0, 1, 0, 1}, {-2, 2, 2, -2}, 0, 4));
}

TEST_CASE("context-free view round trip") {
  auto reg = theory_registry();
  ContextFreeModel m{-1.5, 0.7, 4.0, -1.1};
  auto v = context_free_view(make_context_free_candidate(reg, m), reg, context_free_load());
  CHECK(v.alpha0 == doctest::Approx(m.alpha0));
  CHECK(v.alpha1 == doctest::Approx(m.alpha1));
  CHECK(v.beta0 == doctest::Approx(m.beta0));
  CHECK(v.beta1 == doctest::Approx(m.beta1));
}
