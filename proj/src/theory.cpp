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

#include "brokerage/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "brokerage/harness.hpp"

namespace brokerage {

namespace {

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

KgFunction kg_of(const TheoryOptions& options) {
  if (options.kg) return options.kg;
  return [](const BeliefState& s, const FeatureRegistry& r, const LoadAttributes& b, double p,
            const PriceGrid& g) { return kg_value(s, r, b, p, g); };
}

std::string format(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

}  // namespace

FeatureRegistry theory_registry() { return FeatureRegistry({0, 1, 2, 3}, {0, 1, 2, 3}); }

LoadAttributes random_context(Rng& rng) {
  LoadAttributes b;
  b.origin = static_cast<RegionId>(rng() % 6);
  b.destination = static_cast<RegionId>(rng() % 6);
  b.equipment = static_cast<Equipment>(rng() % kEquipmentTypes);
  b.miles = uniform(rng, 50.0, 2000.0);
  b.call_in = 0;
  b.pickup = 1 + static_cast<int>(rng() % 56);
  b.lane_daily_load = uniform(rng, 0.0, 5.0);
  b.dest_daily_demand = uniform(rng, 0.0, 20.0);
  return b;
}

RandomInstance random_instance(const FeatureRegistry& registry, int K, int max_points,
                               Rng& rng) {
  RandomInstance inst;
  inst.registry = registry;
  PriorConfig prior;
  for (int k = 0; k < K; ++k) inst.candidates.push_back(draw_model(registry, prior, rng));
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    inst.q.push_back(-std::log(1.0 - uniform01(rng)) + 1e-12);
    total += inst.q.back();
  }
  for (double& v : inst.q) v /= total;
  inst.context = random_context(rng);
  int m = 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::max(1, max_points - 1)));
  inst.grid = PriceGrid::uniform(0.0, 4.0, m);
  inst.price_index = rng() % inst.grid.size();
  return inst;
}

CrossingPair random_crossing_pair(const PriceGrid& grid, Rng& rng) {
  CrossingPair pair;
  std::size_t lo = grid.size() / 8, hi = grid.size() - grid.size() / 8;
  pair.p_hat = grid.points[lo + rng() % std::max<std::size_t>(1, hi - lo)];
  double a1 = uniform(rng, 0.5, 3.0), a2 = a1;
  while (std::abs(a2 - a1) < 0.2) a2 = uniform(rng, 0.5, 3.0);
  double b1 = -uniform(rng, 0.5, 3.0), b2 = b1;
  while (std::abs(b2 - b1) < 0.2) b2 = -uniform(rng, 0.5, 3.0);
  double uc = uniform(rng, -3.0, 3.0), us = uniform(rng, -3.0, 3.0);
  pair.first = {uc - a1 * pair.p_hat, a1, us - b1 * pair.p_hat, b1};
  pair.second = {uc - a2 * pair.p_hat, a2, us - b2 * pair.p_hat, b2};
  pair.q1 = uniform(rng, 0.05, 0.95);
  return pair;
}

std::pair<ContextFreeModel, ContextFreeModel> stall_pair() {
  return {ContextFreeModel{-2.0, 1.0, 6.0, -3.0}, ContextFreeModel{-6.0, 3.0, 2.0, -1.0}};
}

CheckResult check_uninstructive_nullity(const TheoryOptions& options) {
  CheckResult r{"uninstructive-nullity", true, 0.0, ""};
  KgFunction kg = kg_of(options);
  Rng rng(derive_seed(options.seed, {1}));
  FeatureRegistry registry = theory_registry();
  LoadAttributes b = context_free_load();
  PriceGrid grid = PriceGrid::uniform(0.0, 4.0, 16);
  int located = 0;
  for (int i = 0; i < options.nullity_pairs; ++i) {
    CrossingPair pair = random_crossing_pair(grid, rng);
    auto bid = uninstructive_bid(pair.first, pair.second, grid.lower, grid.upper);
    if (bid.price && std::abs(*bid.price - pair.p_hat) <= 1e-9) ++located;
    BeliefState state = BeliefState::with_probabilities(
        {make_context_free_candidate(registry, pair.first),
         make_context_free_candidate(registry, pair.second)},
        {pair.q1, 1.0 - pair.q1});
    r.metric = std::max(r.metric, std::abs(kg(state, registry, b, pair.p_hat, grid)));
  }
  r.passed = r.metric <= options.nullity_tolerance && located == options.nullity_pairs;
  r.detail = format("pairs=%.0f located=%.0f max|kg(p_hat)|=%.3g",
                    options.nullity_pairs, located, r.metric);
  return r;
}

CheckResult check_kg_nonnegativity(const TheoryOptions& options) {
  CheckResult r{"kg-nonnegativity", true, std::numeric_limits<double>::infinity(), ""};
  KgFunction kg = kg_of(options);
  Rng rng(derive_seed(options.seed, {2}));
  FeatureRegistry registry = theory_registry();
  for (int i = 0; i < options.nonnegativity_draws; ++i) {
    int K = 2 + i % 4;
    RandomInstance inst = random_instance(registry, K, 80, rng);
    BeliefState state = BeliefState::with_probabilities(inst.candidates, inst.q);
    double v = kg(state, registry, inst.context, inst.grid.points[inst.price_index], inst.grid);
    if (!std::isfinite(v)) v = -std::numeric_limits<double>::infinity();
    r.metric = std::min(r.metric, v);
  }
  r.passed = r.metric >= options.nonnegativity_tolerance;
  r.detail = format("draws=%.0f min kg=%.3g", options.nonnegativity_draws, r.metric);
  return r;
}

CheckResult check_confounding_stall(const TheoryOptions& options) {
  CheckResult r{"confounding-stall", false, 0.0, ""};
  KgFunction kg = kg_of(options);
  auto [first, second] = stall_pair();
  PriceGrid grid = PriceGrid::uniform(0.0, 4.0, 16);
  IncompleteLearningReport report = incomplete_learning_check(first, second, 0.0, 4.0);
  std::optional<double> q_hat = locate_confounding_belief(first, second, 0.0, 4.0);
  if (!report.in_set || !report.p_hat || !q_hat) {
    r.detail = "instance is not in the incomplete-learning set";
    return r;
  }
  FeatureRegistry registry = theory_registry();
  LoadAttributes b = context_free_load();
  BeliefState state = BeliefState::with_probabilities(
      {make_context_free_candidate(registry, first),
       make_context_free_candidate(registry, second)},
      {*q_hat, 1.0 - *q_hat});
  const double p_hat = *report.p_hat;
  const double tau = options.stall_tau;
  Rng rng(derive_seed(options.seed, {3}));
  int off_target = 0;
  for (int n = 0; n < options.stall_steps; ++n) {
    // KG score with the supplied kg function; ties to the lowest index.
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double p = grid.points[i];
      double score = expected_revenue(state, registry, b, p) + tau * kg(state, registry, b, p, grid);
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    double p = grid.points[best];
    if (std::abs(p - p_hat) > 1e-12) ++off_target;
    double fc = accept_prob(state.candidate(0).alpha, carrier_features(registry, b, p));
    double fs = accept_prob(state.candidate(0).beta, shipper_features(registry, b, p));
    int yc = uniform01(rng) < fc ? 1 : -1;
    int ys = uniform01(rng) < fs ? 1 : -1;
    BeliefState next = posterior_update(state, {b, p, yc, ys, n}, registry);
    r.metric = std::max(r.metric, std::abs(next.q()[0] - state.q()[0]));
    state = next;
  }
  r.passed = off_target == 0 && r.metric <= options.stall_tolerance;
  char buf[256];
  std::snprintf(buf, sizeof buf, "p_hat=%.6g M1=%.6g M2=%.6g q_hat=%.12g off_target=%d max|dq|=%.3g",
                p_hat, report.m1, report.m2, *q_hat, off_target, r.metric);
  r.detail = buf;
  return r;
}

CheckResult check_consistency(const TheoryOptions& options) {
  CheckResult r{"consistency", false, 0.0, ""};
  FeatureRegistry registry = theory_registry();
  PriceGrid grid = PriceGrid::uniform(0.0, 4.0, 80);
  PriorConfig prior;
  HorizonWeight tau = HorizonWeight::constant(options.consistency_tau);
  int hits = 0;
  long worst = 0;
  for (int s = 0; s < options.consistency_seeds; ++s) {
    Rng rng(derive_seed(options.seed, {4, static_cast<std::uint64_t>(s)}));
    // Rivals are perturbations of the truth so that they are hard to tell
    // apart on most contexts.
    CandidateModel base = draw_model(registry, prior, rng);
    std::vector<CandidateModel> candidates;
    std::size_t truth = rng() % static_cast<std::size_t>(options.consistency_K);
    for (int k = 0; k < options.consistency_K; ++k) {
      CandidateModel c = base;
      if (static_cast<std::size_t>(k) != truth) {
        for (auto* w : {&c.alpha.weights, &c.beta.weights}) {
          for (double& v : *w) v += options.consistency_spread * standard_normal(rng);
        }
      }
      candidates.push_back(c);
    }
    std::vector<LoadAttributes> contexts;
    for (int c = 0; c < options.consistency_contexts; ++c) contexts.push_back(random_context(rng));
    BeliefState state = init_uniform(candidates);
    long hit = -1;
    for (long n = 0; n < options.consistency_steps; ++n) {
      const LoadAttributes& b = contexts[rng() % contexts.size()];
      double p = kg_policy(state, registry, b, tau, n, grid).price;
      const CandidateModel& t = candidates[truth];
      double fc = accept_prob(t.alpha, carrier_features(registry, b, p));
      double fs = accept_prob(t.beta, shipper_features(registry, b, p));
      int yc = uniform01(rng) < fc ? 1 : -1;
      int ys = uniform01(rng) < fs ? 1 : -1;
      state = posterior_update(state, {b, p, yc, ys, n}, registry);
      if (state.q()[truth] >= options.consistency_threshold) {
        hit = n + 1;
        break;
      }
    }
    if (hit > 0) {
      ++hits;
      worst = std::max(worst, hit);
    }
  }
  r.metric = hits;
  r.passed = hits >= options.consistency_required;
  char buf[256];
  std::snprintf(buf, sizeof buf, "seeds=%d reached=%d slowest=%ld steps (limit %ld)",
                options.consistency_seeds, hits, worst, options.consistency_steps);
  r.detail = buf;
  return r;
}

CheckResult check_degenerate_belief(const TheoryOptions& options) {
  CheckResult r{"degenerate-belief", true, 0.0, ""};
  KgFunction kg = kg_of(options);
  Rng rng(derive_seed(options.seed, {5}));
  FeatureRegistry registry = theory_registry();
  int mismatches = 0;
  for (int i = 0; i < options.degenerate_draws; ++i) {
    RandomInstance inst = random_instance(registry, 1, 20, rng);
    BeliefState state = init_uniform(inst.candidates);
    for (double p : inst.grid.points) {
      r.metric = std::max(r.metric, std::abs(kg(state, registry, inst.context, p, inst.grid)));
    }
    auto k = kg_policy(state, registry, inst.context, HorizonWeight::constant(100.0), 0, inst.grid);
    auto e = exploit_policy(state, registry, inst.context, inst.grid);
    if (k.index != e.index) ++mismatches;
  }
  r.passed = r.metric <= 1e-12 && mismatches == 0;
  r.detail = format("draws=%.0f max|kg|=%.3g policy mismatches=%.0f", options.degenerate_draws,
                    r.metric, mismatches);
  return r;
}

std::vector<CheckResult> run_theory_suite(const TheoryOptions& options) {
  return {check_uninstructive_nullity(options), check_kg_nonnegativity(options),
          check_confounding_stall(options), check_consistency(options),
          check_degenerate_belief(options)};
}

void write_theory_report(std::ostream& out, const std::vector<CheckResult>& results) {
  out << "check,passed,metric,detail\n";
  char buf[64];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%.10g", r.metric);
    out << r.name << ',' << (r.passed ? "pass" : "fail") << ',' << buf << ",\"" << r.detail
        << "\"\n";
  }
}

}  // namespace brokerage
