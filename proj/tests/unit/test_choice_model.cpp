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
#include <limits>
#include <map>
#include <vector>

#include "brokerage/choice_model.hpp"
#include "brokerage/random.hpp"
#include "doctest.h"

using namespace brokerage;

namespace {

LoadAttributes load(RegionId o, RegionId d, double miles, Equipment e = Equipment::DryVan) {
  LoadAttributes b;
  b.origin = o;
  b.destination = d;
  b.miles = miles;
  b.equipment = e;
  b.lane_daily_load = 3.0;
  b.dest_daily_demand = 7.0;
  return b;
}

WeightVector random_weights(const FeatureRegistry& reg, Side side, Rng& rng) {
  WeightVector w = WeightVector::zeros(reg, side);
  for (double& v : w.weights) v = 0.3 * standard_normal(rng);
  return w;
}

}  // namespace

TEST_CASE("registry keeps regions above the observation threshold") {
  auto reg = build_feature_registry(std::map<RegionId, int>{{0, 20}, {1, 10}}, 15);
  CHECK(reg.origins() == std::vector<RegionId>{0});
  CHECK(reg.destinations() == std::vector<RegionId>{0});

  auto empty = build_feature_registry(std::map<RegionId, int>{}, 15);
  CHECK(empty.origins().empty());
  CHECK(empty.destinations().empty());

  // Exactly at the threshold is not "more than".
  auto edge = build_feature_registry(std::map<RegionId, int>{{4, 15}, {5, 16}}, 15);
  CHECK(edge.origins() == std::vector<RegionId>{5});
}

TEST_CASE("registry over twenty uniform regions is sorted and complete") {
  std::map<RegionId, int> counts;
  for (RegionId r = 19; r >= 0; --r) counts[r] = 100;
  auto reg = build_feature_registry(counts, 15);
  REQUIRE(reg.origins().size() == 20);
  for (int i = 0; i < 20; ++i) {
    CHECK(reg.origins()[i] == i);
    CHECK(reg.origin_slot(i) == i);
  }
  CHECK_FALSE(reg.origin_slot(20).has_value());
}

TEST_CASE("carrier and shipper dimensions") {
  FeatureRegistry reg({0, 1, 2}, {0, 1});
  // Carrier: intercept, daily load, dest demand, min-dist, origins,
  // destinations, 5 equipment intercepts, 5 equipment prices, p*miles*mindist,
  // p*daily load. The shipper drops daily load, dest demand, the equipment
  // intercepts and p*daily load.
  const int carrier = 1 + 1 + 1 + 1 + 3 + 2 + 5 + 5 + 1 + 1;
  CHECK(reg.carrier_dim() == carrier);
  CHECK(reg.shipper_dim() == carrier - 8);
  CHECK(reg.feature_names(Side::Carrier).size() == static_cast<std::size_t>(carrier));
}

TEST_CASE("min-dist indicator and its price interaction") {
  FeatureRegistry reg({0}, {1});
  const auto& lc = reg.layout(Side::Carrier);
  auto x = carrier_features(reg, load(0, 1, 250.0), 1.7);
  CHECK(x.values[lc.min_dist] == 1.0);
  CHECK(x.values[lc.price_miles_min_dist] == doctest::Approx(250.0 * 1.7));

  auto far = carrier_features(reg, load(0, 1, 301.0), 1.7);
  CHECK(far.values[lc.min_dist] == 0.0);
  CHECK(far.values[lc.price_miles_min_dist] == 0.0);
}

TEST_CASE("equipment blocks are one-hot") {
  FeatureRegistry reg({0}, {1});
  const auto& lc = reg.layout(Side::Carrier);
  const double p = 2.25;
  auto x = carrier_features(reg, load(0, 1, 500.0), p);
  for (int e = 0; e < kEquipmentTypes; ++e) {
    CHECK(x.values[lc.equipment + e] == (e == 0 ? 1.0 : 0.0));
    CHECK(x.values[lc.equipment_price + e] == (e == 0 ? p : 0.0));
  }
  const auto& ls = reg.layout(Side::Shipper);
  auto xs = shipper_features(reg, load(0, 1, 500.0, Equipment::RGN), p);
  int nonzero = 0;
  for (int e = 0; e < kEquipmentTypes; ++e) nonzero += xs.values[ls.equipment_price + e] != 0.0;
  CHECK(nonzero == 1);
  CHECK(xs.values[ls.equipment_price + static_cast<int>(Equipment::RGN)] == p);
}

TEST_CASE("unindexed regions leave only the generic shipper terms") {
  FeatureRegistry reg({0}, {0});
  const auto& ls = reg.layout(Side::Shipper);
  auto x = shipper_features(reg, load(7, 8, 200.0), 1.5);
  for (int j = 0; j < ls.dim; ++j) {
    bool allowed = j == ls.intercept || j == ls.min_dist || j == ls.price_miles_min_dist ||
                   (j >= ls.equipment_price && j < ls.equipment_price + kEquipmentTypes) ||
                   j == ls.price_daily_load;
    if (!allowed) CHECK(x.values[j] == 0.0);
  }
}

TEST_CASE("changing the destination changes only the destination block") {
  FeatureRegistry reg({0, 1}, {0, 1, 2});
  for (Side side : {Side::Carrier, Side::Shipper}) {
    const auto& l = reg.layout(side);
    auto a = features(reg, load(0, 1, 400.0), 2.0, side);
    auto b = features(reg, load(0, 2, 400.0), 2.0, side);
    for (int j = 0; j < l.dim; ++j) {
      bool in_block = j >= l.destination && j < l.destination + 3;
      if (!in_block) CHECK(a.values[j] == b.values[j]);
    }
    CHECK(a.values != b.values);
  }
}

TEST_CASE("sigmoid values and stability") {
  FeatureRegistry reg({}, {});
  WeightVector w = WeightVector::zeros(reg, Side::Carrier);
  FeatureVector x{std::vector<double>(w.weights.size(), 0.0), Side::Carrier};
  CHECK(accept_prob(w, x) == 0.5);
  CHECK(sigmoid(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
  double tiny = sigmoid(-1000.0);
  CHECK(tiny >= 0.0);
  CHECK(tiny < 1e-300);
  CHECK(std::isfinite(log_sigmoid(-1000.0)));
  CHECK(log_sigmoid(-1000.0) == doctest::Approx(-1000.0));
  CHECK(sigmoid(1000.0) == 1.0);
}

TEST_CASE("sigmoid is strictly increasing") {
  double prev = sigmoid(-30.0);
  for (double h = -29.9; h <= 30.0; h += 0.1) {
    double v = sigmoid(h);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("joint acceptance is the product of the two sides") {
  FeatureRegistry reg({0, 1}, {0, 1});
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    CandidateModel theta{random_weights(reg, Side::Carrier, rng),
                         random_weights(reg, Side::Shipper, rng)};
    auto b = load(static_cast<int>(uniform01(rng) * 3), static_cast<int>(uniform01(rng) * 3),
                  50.0 + 1000.0 * uniform01(rng));
    double p = 4.0 * uniform01(rng);
    double hc = 0.0, hs = 0.0;
    auto xc = carrier_features(reg, b, p).values;
    auto xs = shipper_features(reg, b, p).values;
    for (std::size_t j = 0; j < xc.size(); ++j) hc += theta.alpha.weights[j] * xc[j];
    for (std::size_t j = 0; j < xs.size(); ++j) hs += theta.beta.weights[j] * xs[j];
    double expect = (1.0 / (1.0 + std::exp(-hc))) * (1.0 / (1.0 + std::exp(-hs)));
    CHECK(joint_accept_prob(theta, reg, b, p) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(joint_accept_prob(theta, reg, b, p) ==
          accept_prob(theta.alpha, carrier_features(reg, b, p)) *
              accept_prob(theta.beta, shipper_features(reg, b, p)));
  }
}

TEST_CASE("joint acceptance with fixed sides") {
  FeatureRegistry reg({}, {});
  CandidateModel theta{WeightVector::zeros(reg, Side::Carrier),
                       WeightVector::zeros(reg, Side::Shipper)};
  auto b = load(0, 0, 500.0);
  CHECK(joint_accept_prob(theta, reg, b, 1.0) == 0.25);
  theta.alpha.weights[reg.layout(Side::Carrier).intercept] = 800.0;  // carrier always accepts
  theta.beta.weights[reg.layout(Side::Shipper).intercept] = std::log(3.0);
  CHECK(joint_accept_prob(theta, reg, b, 1.0) == doctest::Approx(0.75));
}

TEST_CASE("utility line matches the feature dot product") {
  FeatureRegistry reg({0, 1}, {0, 1});
  Rng rng(5);
  auto w = random_weights(reg, Side::Carrier, rng);
  auto b = load(1, 0, 220.0, Equipment::FlatBed);
  UtilityLine line = utility_line(w, reg, b);
  for (double p : {0.05, 0.5, 3.9}) {
    CHECK(line.at(p) == doctest::Approx(dot(w, carrier_features(reg, b, p))).epsilon(1e-12));
  }
}

TEST_CASE("symmetric balanced data fits to zero") {
  // Two mirror-image points per label: the unpenalized optimum is already 0.
  Dataset d;
  d.side = Side::Carrier;
  d.dim = 2;
  for (double x : {1.0, -1.0}) {
    d.add(std::vector<double>{1.0, x}, 1);
    d.add(std::vector<double>{1.0, x}, -1);
  }
  auto fit = fit_l1_logistic(d, 1.0);
  CHECK(std::abs(fit.weights.weights[0]) < 1e-6);
  CHECK(std::abs(fit.weights.weights[1]) < 1e-9);
}

TEST_CASE("separable one-dimensional data gets a positive slope") {
  Dataset d;
  d.side = Side::Carrier;
  d.dim = 2;
  for (double x : {-2.0, -1.5, -1.0, -0.5}) d.add(std::vector<double>{1.0, x}, -1);
  for (double x : {0.5, 1.0, 1.5, 2.0}) d.add(std::vector<double>{1.0, x}, 1);
  auto fit = fit_l1_logistic(d, 0.01);
  CHECK(fit.weights.weights[1] > 0.0);

  // Grid search of the two-parameter objective as the reference.
  double best = std::numeric_limits<double>::infinity();
  for (double b0 = -3.0; b0 <= 3.0; b0 += 0.01) {
    for (double b1 = 0.0; b1 <= 12.0; b1 += 0.01) {
      best = std::min(best, l1_logistic_objective(d, std::vector<double>{b0, b1}, 0.01));
    }
  }
  CHECK(fit.objective <= best + 1e-4);
}

TEST_CASE("large penalty drives regularized weights to zero") {
  Rng rng(8);
  Dataset d;
  d.side = Side::Carrier;
  d.dim = 3;
  for (int i = 0; i < 100; ++i) {
    double a = standard_normal(rng), b = standard_normal(rng);
    d.add(std::vector<double>{1.0, a, b}, uniform01(rng) < sigmoid(2 * a - b) ? 1 : -1);
  }
  auto fit = fit_l1_logistic(d, 1e6);
  CHECK(fit.weights.weights[1] == 0.0);
  CHECK(fit.weights.weights[2] == 0.0);
}

TEST_CASE("fit matches a brute-force grid on three-parameter problems") {
  Rng rng(21);
  for (int trial = 0; trial < 3; ++trial) {
    Dataset d;
    d.side = Side::Carrier;
    d.dim = 3;
    for (int i = 0; i < 40; ++i) {
      double a = standard_normal(rng), b = standard_normal(rng);
      d.add(std::vector<double>{1.0, a, b},
            uniform01(rng) < sigmoid(0.5 + a - 0.7 * b) ? 1 : -1);
    }
    const double lambda = 0.05;
    auto fit = fit_l1_logistic(d, lambda);
    // Coarse grid, then a fine grid around its best point.
    std::vector<double> best_w{0, 0, 0};
    double best = std::numeric_limits<double>::infinity();
    for (double step : {0.1, 0.01, 0.001}) {
      std::vector<double> centre = best_w;
      for (int i = -30; i <= 30; ++i) {
        for (int j = -30; j <= 30; ++j) {
          for (int k = -30; k <= 30; ++k) {
            std::vector<double> w{centre[0] + i * step, centre[1] + j * step,
                                  centre[2] + k * step};
            double v = l1_logistic_objective(d, w, lambda);
            if (v < best) {
              best = v;
              best_w = w;
            }
          }
        }
      }
    }
    CHECK(fit.objective <= best + 1e-4);
  }
}

TEST_CASE("fit rejects bad input") {
  Dataset d;
  d.side = Side::Carrier;
  d.dim = 2;
  CHECK_THROWS(fit_l1_logistic(d, 1.0));
  d.add(std::vector<double>{1.0, 0.5}, 1);
  CHECK_THROWS(fit_l1_logistic(d, -1.0));
  CHECK_THROWS(fit_l1_logistic(d, 0.0));  // single class, no penalty
  CHECK_NOTHROW(fit_l1_logistic(d, 1.0));
}

TEST_CASE("registry and weights round-trip through JSON") {
  FeatureRegistry reg({3, 9}, {1});
  CHECK(registry_from_json(registry_to_json(reg)) == reg);
  Rng rng(2);
  auto w = random_weights(reg, Side::Shipper, rng);
  CHECK(weights_from_json(weights_to_json(w, reg), reg) == w);
}

TEST_CASE("load validation") {
  LoadAttributes b = load(0, 1, 100.0);
  b.call_in = 0;
  b.pickup = 56;
  CHECK_NOTHROW(validate_load(b, 56));
  b.pickup = 57;
  CHECK_THROWS(validate_load(b, 56));
  b.pickup = 3;
  b.miles = 0.0;
  CHECK_THROWS(validate_load(b, 56));
}
