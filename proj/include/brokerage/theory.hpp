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

#ifndef BROKERAGE_THEORY_HPP_
#define BROKERAGE_THEORY_HPP_

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "brokerage/belief.hpp"
#include "brokerage/choice_model.hpp"
#include "brokerage/policies.hpp"

namespace brokerage {

// Signature of kg_value; the suites take it as a parameter so a broken
// implementation can be substituted.
using KgFunction = std::function<double(const BeliefState&, const FeatureRegistry&,
                                        const LoadAttributes&, double, const PriceGrid&)>;

struct CheckResult {
  std::string name;
  bool passed = false;
  double metric = 0.0;  // the quantity compared against the tolerance
  std::string detail;
};

struct TheoryOptions {
  std::uint64_t seed = 20260101;
  int nullity_pairs = 100;
  double nullity_tolerance = 1e-10;
  int nonnegativity_draws = 10000;
  double nonnegativity_tolerance = -1e-10;
  int stall_steps = 100;
  double stall_tau = 0.1;
  double stall_tolerance = 1e-9;
  int consistency_seeds = 20;
  int consistency_required = 19;
  long consistency_steps = 2000;
  int consistency_contexts = 50;
  int consistency_K = 5;
  double consistency_spread = 0.05;
  double consistency_tau = 100.0;
  double consistency_threshold = 0.99;
  int degenerate_draws = 200;
  KgFunction kg;  // empty means kg_value
};

// A random feature registry and context generator shared by the suites.
struct RandomInstance {
  FeatureRegistry registry;
  std::vector<CandidateModel> candidates;
  std::vector<double> q;
  LoadAttributes context;
  PriceGrid grid;
  std::size_t price_index = 0;
};
FeatureRegistry theory_registry();
LoadAttributes random_context(Rng& rng);
// K candidates from the default prior, Dirichlet(1) weights, a grid of 2..M
// points on (0, 4] and a uniformly chosen price on it.
RandomInstance random_instance(const FeatureRegistry& registry, int K, int max_points, Rng& rng);

// Two context-free candidates whose carrier and shipper lines cross at a
// shared price on the grid, with a random belief.
struct CrossingPair {
  ContextFreeModel first;
  ContextFreeModel second;
  double p_hat = 0.0;
  double q1 = 0.5;
};
CrossingPair random_crossing_pair(const PriceGrid& grid, Rng& rng);

// The incomplete-learning instance used by the stall check: p_hat = 2,
// M_1 = -1, M_2 = 1, confounding q_1 = 0.75.
std::pair<ContextFreeModel, ContextFreeModel> stall_pair();

CheckResult check_uninstructive_nullity(const TheoryOptions& options);
CheckResult check_kg_nonnegativity(const TheoryOptions& options);
CheckResult check_confounding_stall(const TheoryOptions& options);
CheckResult check_consistency(const TheoryOptions& options);
// K = 1: kg_value vanishes and KG coincides with exploitation.
CheckResult check_degenerate_belief(const TheoryOptions& options);

std::vector<CheckResult> run_theory_suite(const TheoryOptions& options);

// name,passed,metric,detail
void write_theory_report(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace brokerage

#endif  // BROKERAGE_THEORY_HPP_
