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

#ifndef BROKERAGE_BELIEF_HPP_
#define BROKERAGE_BELIEF_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "brokerage/choice_model.hpp"
#include "brokerage/random.hpp"

namespace brokerage {

// One bid and the two responses it produced.
struct ObservationRecord {
  LoadAttributes b;
  double price = 0.0;
  int y_c = 1;
  int y_s = 1;
  long n = 0;
};

struct BaggingConfig {
  FitConfig fit;
  // The L1 weight passed to fit_l1_logistic is l1_strength / n for a
  // bootstrap sample of n records (sum-of-losses convention).
  double l1_strength = 1.0;
  int max_retries = 3;
};

struct BaggingReport {
  int redraws = 0;                     // single-class samples thrown away
  std::vector<std::size_t> retained;   // slots that kept the previous model
  int unconverged_fits = 0;
};

class BeliefState;
BeliefState posterior_update(const BeliefState& state, const ObservationRecord& obs,
                             const FeatureRegistry& registry);
BeliefState bagging_resample(const BeliefState& state, const FeatureRegistry& registry,
                             int K, const BaggingConfig& config, Rng& rng,
                             BaggingReport* report);

// Sampled belief: K candidate models, the posterior over them, the number of
// bagging resamples so far and the full observation history.
//
// Values are immutable; updates return new states. The history is an
// append-only log shared between states, so extending the newest state is
// O(1) and older states keep seeing their own prefix.
class BeliefState {
 public:
  // Posterior proportional to exp(log_weights); throws std::invalid_argument
  // on size mismatch or an empty candidate list.
  BeliefState(std::vector<CandidateModel> candidates, std::vector<double> log_weights);

  static BeliefState with_probabilities(std::vector<CandidateModel> candidates,
                                        const std::vector<double>& q);

  std::size_t size() const { return candidates_->size(); }
  const std::vector<CandidateModel>& candidates() const { return *candidates_; }
  const CandidateModel& candidate(std::size_t k) const { return (*candidates_)[k]; }
  const std::vector<double>& q() const { return q_; }
  const std::vector<double>& log_q() const { return log_q_; }
  int resample_count() const { return resample_count_; }
  // Times the posterior had to be reset to uniform after a total underflow.
  int underflow_resets() const { return underflow_resets_; }
  std::span<const ObservationRecord> history() const;
  std::size_t history_size() const { return history_size_; }

  // The most probable candidate; lowest index on ties.
  std::size_t map_index() const;

 private:
  friend BeliefState posterior_update(const BeliefState&, const ObservationRecord&,
                                      const FeatureRegistry&);
  friend BeliefState bagging_resample(const BeliefState&, const FeatureRegistry&, int,
                                      const BaggingConfig&, Rng&, BaggingReport*);

  void set_log_weights(std::vector<double> log_weights);
  BeliefState appended(const ObservationRecord& obs) const;

  std::shared_ptr<const std::vector<CandidateModel>> candidates_;
  std::vector<double> log_q_;
  std::vector<double> q_;
  int resample_count_ = 0;
  int underflow_resets_ = 0;
  std::shared_ptr<std::vector<ObservationRecord>> log_;
  std::size_t history_size_ = 0;
};

// Uniform prior q_k = 1/K, empty history, r = 0.
BeliefState init_uniform(std::vector<CandidateModel> candidates);

// log sigma(y_c alpha.x^c) + log sigma(y_s beta.x^s) for one observation.
double observation_log_likelihood(const CandidateModel& theta, const ObservationRecord& obs,
                                  const FeatureRegistry& registry);

// Bayes update q_k <- q_k sigma(y_c alpha_k.x^c) sigma(y_s beta_k.x^s), done in
// log space with max-subtraction. Extends the history by `obs`.
BeliefState posterior_update(const BeliefState& state, const ObservationRecord& obs,
                             const FeatureRegistry& registry);

// sum_k q_k f_k(b, p).
double predictive_accept_prob(const BeliefState& state, const FeatureRegistry& registry,
                              const LoadAttributes& b, double price);

// sum over history of the two log-sigmoid response terms; 0 for an empty
// history.
double log_likelihood(const CandidateModel& theta, std::span<const ObservationRecord> history,
                      const FeatureRegistry& registry);

// n indices drawn uniformly with replacement from [0, n).
std::vector<std::size_t> bootstrap_indices(std::size_t n, Rng& rng);

// Refits K candidates on bootstrap resamples of the history (carrier and
// shipper models separately, same records) and sets q from the likelihood
// of the full history. Increments the resample count. A side whose full
// history holds a single class keeps the previous candidates' weights; a
// bootstrap sample that loses a class is redrawn up to max_retries times
// before the slot keeps its previous model. Throws std::invalid_argument on
// an empty history.
BeliefState bagging_resample(const BeliefState& state, const FeatureRegistry& registry,
                             int K, const BaggingConfig& config, Rng& rng,
                             BaggingReport* report = nullptr);

// True iff n == C * 2^r.
bool resample_due(long n, int r, long C);

}  // namespace brokerage

#endif  // BROKERAGE_BELIEF_HPP_
