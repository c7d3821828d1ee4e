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

#ifndef BROKERAGE_POLICIES_HPP_
#define BROKERAGE_POLICIES_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brokerage/belief.hpp"
#include "brokerage/choice_model.hpp"
#include "brokerage/random.hpp"

namespace brokerage {

// Discrete bid set inside (lower, upper].
struct PriceGrid {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> points;

  // M evenly spaced points lower + (upper - lower) * i / M, i = 1..M.
  static PriceGrid uniform(double lower, double upper, int m);
  // Throws std::invalid_argument unless lower < upper and the points are
  // strictly increasing inside (lower, upper].
  void validate() const;
  std::size_t size() const { return points.size(); }
  // Index of the grid point equal to `price` (within 1e-12), if any.
  std::optional<std::size_t> index_of(double price) const;
};

// tau in the KG score, either fixed or N - n for a known horizon N.
struct HorizonWeight {
  double tau = 100.0;
  long horizon = -1;  // >= 0 selects the N - n rule

  static HorizonWeight constant(double tau);
  static HorizonWeight remaining(long horizon);
  double evaluate(long n) const;
};

struct PriceEvaluation {
  double price = 0.0;
  double expected_revenue = 0.0;
  double kg_value = 0.0;
  double score = 0.0;
};

struct PolicyDecision {
  double price = 0.0;
  std::size_t index = 0;
  double score = 0.0;
  std::optional<std::size_t> sampled_candidate;
  std::vector<PriceEvaluation> diagnostics;
};

// Carrier and shipper utility lines of every candidate at one context; the
// policies evaluate f_k on the grid from these.
struct ContextModels {
  std::vector<UtilityLine> carrier;
  std::vector<UtilityLine> shipper;

  double accept(std::size_t k, double price) const;
  // sigma(y_c u^c_k(p)) sigma(y_s u^s_k(p))
  double response_likelihood(std::size_t k, int y_c, int y_s, double price) const;
};
ContextModels context_models(std::span<const CandidateModel> candidates,
                             const FeatureRegistry& registry, const LoadAttributes& b);

// p * sum_k q_k f_k(b, p).
double expected_revenue(const BeliefState& state, const FeatureRegistry& registry,
                        const LoadAttributes& b, double price);

// Knowledge-gradient value of bidding `price`:
//   sum_{y_c, y_s} max_{p'} p' sum_k q_k f_k(b, p') sigma(y_c a_k) sigma(y_s b_k)
//   - max_{p'} p' sum_k q_k f_k(b, p'),
// with a_k, b_k the utilities at `price` and both maxima over the grid.
double kg_value(const BeliefState& state, const FeatureRegistry& registry,
                const LoadAttributes& b, double price, const PriceGrid& grid);

// argmax_p p sum_k q_k f_k(b, p) + tau * kg_value; ties go to the lowest
// grid index.
PolicyDecision kg_policy(const BeliefState& state, const FeatureRegistry& registry,
                         const LoadAttributes& b, const HorizonWeight& tau, long n,
                         const PriceGrid& grid);

PolicyDecision exploit_policy(const BeliefState& state, const FeatureRegistry& registry,
                              const LoadAttributes& b, const PriceGrid& grid);

// k ~ q by inversion of one uniform draw.
std::size_t sample_candidate(std::span<const double> q, Rng& rng);

PolicyDecision thompson_policy(const BeliefState& state, const FeatureRegistry& registry,
                               const LoadAttributes& b, const PriceGrid& grid, Rng& rng);

// Per-price score max(p f_sampled(p), p sum_k q_k f_k(p)).
PolicyDecision opt_thompson_policy(const BeliefState& state, const FeatureRegistry& registry,
                                   const LoadAttributes& b, const PriceGrid& grid, Rng& rng);

// argmax_p p f(b, p; fitted).
PolicyDecision est_opt_policy(const CandidateModel& fitted, const FeatureRegistry& registry,
                              const LoadAttributes& b, const PriceGrid& grid);

// Mean of previously accepted per-mile prices; not clamped to any grid.
// Throws std::domain_error on an empty history.
double mean_price_policy(std::span<const double> accepted_prices);

// ---------------------------------------------------------------------------
// Context-free two-candidate diagnostics.

// f^c(p) = sigma(alpha0 + alpha1 p), f^s(p) = sigma(beta0 + beta1 p).
struct ContextFreeModel {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double beta0 = 0.0;
  double beta1 = 0.0;
};

// A DryVan load longer than the MinDist cutoff with no lane statistics; with
// it the feature models reduce exactly to ContextFreeModel.
LoadAttributes context_free_load();
CandidateModel make_context_free_candidate(const FeatureRegistry& registry,
                                           const ContextFreeModel& model);
// Reduces a candidate at a fixed context to its two utility lines.
ContextFreeModel context_free_view(const CandidateModel& theta,
                                   const FeatureRegistry& registry, const LoadAttributes& b);

struct UninstructiveBid {
  std::optional<double> price;
  bool degenerate = false;  // the two candidates are identical
};

// The price where both carrier and shipper curves of the two candidates
// coincide, if it exists and lies in [lower, upper].
UninstructiveBid uninstructive_bid(const ContextFreeModel& first,
                                   const ContextFreeModel& second, double lower,
                                   double upper);

struct IncompleteLearningReport {
  bool in_set = false;
  std::optional<double> p_hat;
  double m1 = 0.0;
  double m2 = 0.0;
};

// Membership of the pair in the incomplete-learning set:
//   M_2 > 0, M_1 < 0, M_1 + M_2 >= -1 / p_hat, with
//   M_k = alpha_k1 (1 - f^c_k(p_hat)) + beta_k1 (1 - f^s_k(p_hat)).
// Throws std::invalid_argument unless alpha_k1 > 0 and beta_k1 < 0.
IncompleteLearningReport incomplete_learning_check(const ContextFreeModel& first,
                                                   const ContextFreeModel& second,
                                                   double lower, double upper);

// Bisection on q_1 for the belief at which the mixture revenue is
// stationary at the uninstructive bid. nullopt when no sign change exists.
std::optional<double> locate_confounding_belief(const ContextFreeModel& first,
                                                const ContextFreeModel& second,
                                                double lower, double upper,
                                                double tolerance = 1e-14);

}  // namespace brokerage

#endif  // BROKERAGE_POLICIES_HPP_
