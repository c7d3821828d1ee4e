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

#include "brokerage/belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace brokerage {

BeliefState::BeliefState(std::vector<CandidateModel> candidates,
                         std::vector<double> log_weights)
    : candidates_(std::make_shared<const std::vector<CandidateModel>>(std::move(candidates))),
      log_(std::make_shared<std::vector<ObservationRecord>>()) {
  if (candidates_->empty()) throw std::invalid_argument("belief needs at least one candidate");
  if (log_weights.size() != candidates_->size()) {
    throw std::invalid_argument("belief weight count differs from candidate count");
  }
  set_log_weights(std::move(log_weights));
  if (q_.empty()) throw std::invalid_argument("belief weights are all zero or not finite");
}

BeliefState BeliefState::with_probabilities(std::vector<CandidateModel> candidates,
                                            const std::vector<double>& q) {
  std::vector<double> lw(q.size());
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (!(q[k] >= 0.0)) throw std::invalid_argument("negative posterior probability");
    lw[k] = q[k] > 0.0 ? std::log(q[k]) : -std::numeric_limits<double>::infinity();
  }
  return BeliefState(std::move(candidates), std::move(lw));
}

void BeliefState::set_log_weights(std::vector<double> lw) {
  const double m = *std::max_element(lw.begin(), lw.end());
  if (!std::isfinite(m)) {
    q_.clear();
    return;
  }
  double sum = 0.0;
  std::vector<double> q(lw.size());
  for (std::size_t k = 0; k < lw.size(); ++k) {
    q[k] = std::exp(lw[k] - m);
    sum += q[k];
  }
  const double log_norm = m + std::log(sum);
  for (std::size_t k = 0; k < lw.size(); ++k) {
    q[k] /= sum;
    lw[k] -= log_norm;
  }
  q_ = std::move(q);
  log_q_ = std::move(lw);
}

std::span<const ObservationRecord> BeliefState::history() const {
  return {log_->data(), history_size_};
}

std::size_t BeliefState::map_index() const {
  return static_cast<std::size_t>(std::max_element(q_.begin(), q_.end()) - q_.begin());
}

BeliefState BeliefState::appended(const ObservationRecord& obs) const {
  BeliefState next = *this;
  if (log_->size() != history_size_) {
    // Another state already extended the shared log; branch off a copy.
    next.log_ = std::make_shared<std::vector<ObservationRecord>>(
        log_->begin(), log_->begin() + static_cast<std::ptrdiff_t>(history_size_));
  }
  next.log_->push_back(obs);
  next.history_size_ = history_size_ + 1;
  return next;
}

BeliefState init_uniform(std::vector<CandidateModel> candidates) {
  const std::size_t k = candidates.size();
  if (k == 0) throw std::invalid_argument("init_uniform: empty candidate list");
  return BeliefState(std::move(candidates), std::vector<double>(k, -std::log(double(k))));
}

double observation_log_likelihood(const CandidateModel& theta, const ObservationRecord& obs,
                                  const FeatureRegistry& registry) {
  if (std::abs(obs.y_c) != 1 || std::abs(obs.y_s) != 1) {
    throw std::invalid_argument("responses must be +1 or -1");
  }
  const double hc = dot(theta.alpha, carrier_features(registry, obs.b, obs.price));
  const double hs = dot(theta.beta, shipper_features(registry, obs.b, obs.price));
  return log_sigmoid(obs.y_c * hc) + log_sigmoid(obs.y_s * hs);
}

BeliefState posterior_update(const BeliefState& state, const ObservationRecord& obs,
                             const FeatureRegistry& registry) {
  BeliefState next = state.appended(obs);
  std::vector<double> lw = state.log_q();
  for (std::size_t k = 0; k < state.size(); ++k) {
    lw[k] += observation_log_likelihood(state.candidate(k), obs, registry);
  }
  next.set_log_weights(std::move(lw));
  if (next.q_.empty()) {
    next.set_log_weights(std::vector<double>(state.size(), 0.0));
    ++next.underflow_resets_;
  }
  return next;
}

double predictive_accept_prob(const BeliefState& state, const FeatureRegistry& registry,
                              const LoadAttributes& b, double price) {
  double total = 0.0;
  for (std::size_t k = 0; k < state.size(); ++k) {
    if (state.q()[k] == 0.0) continue;
    total += state.q()[k] * joint_accept_prob(state.candidate(k), registry, b, price);
  }
  return total;
}

double log_likelihood(const CandidateModel& theta, std::span<const ObservationRecord> history,
                      const FeatureRegistry& registry) {
  double total = 0.0;
  for (const auto& obs : history) total += observation_log_likelihood(theta, obs, registry);
  return total;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) {
    i = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
  }
  return idx;
}

BeliefState bagging_resample(const BeliefState& state, const FeatureRegistry& registry,
                             int K, const BaggingConfig& config, Rng& rng,
                             BaggingReport* report) {
  const auto history = state.history();
  if (history.empty()) throw std::invalid_argument("bagging_resample: empty history");
  if (K < 1) throw std::invalid_argument("bagging_resample: K must be >= 1");
  const std::size_t n = history.size();

  Dataset carrier{Side::Carrier, registry.carrier_dim(), {}, {}};
  Dataset shipper{Side::Shipper, registry.shipper_dim(), {}, {}};
  carrier.rows.reserve(n * carrier.dim);
  shipper.rows.reserve(n * shipper.dim);
  for (const auto& obs : history) {
    carrier.add(carrier_features(registry, obs.b, obs.price).values, obs.y_c);
    shipper.add(shipper_features(registry, obs.b, obs.price).values, obs.y_s);
  }

  BaggingReport local;
  BaggingReport& rep = report ? *report : local;
  rep = BaggingReport{};
  const double lambda = config.l1_strength / static_cast<double>(n);
  const std::uint64_t base_seed = rng();

  auto two_classes = [](const Dataset& d) {
    const auto first = d.labels.front();
    return std::any_of(d.labels.begin(), d.labels.end(), [first](int y) { return y != first; });
  };
  // A side whose whole history is one class cannot be fitted; it keeps the
  // previous candidate's weights.
  const bool fit_carrier = two_classes(carrier);
  const bool fit_shipper = two_classes(shipper);

  std::vector<CandidateModel> fitted;
  fitted.reserve(K);
  for (int k = 0; k < K; ++k) {
    const CandidateModel& previous = state.candidate(static_cast<std::size_t>(k) % state.size());
    // Each slot owns a derived stream so slots can be fitted in any order.
    Rng slot_rng(derive_seed(base_seed, {static_cast<std::uint64_t>(k)}));
    bool done = !fit_carrier && !fit_shipper;
    for (int attempt = 0; attempt <= config.max_retries && !done; ++attempt) {
      const auto idx = bootstrap_indices(n, slot_rng);
      Dataset c{Side::Carrier, carrier.dim, {}, {}};
      Dataset s{Side::Shipper, shipper.dim, {}, {}};
      c.rows.reserve(n * c.dim);
      s.rows.reserve(n * s.dim);
      for (std::size_t i : idx) {
        c.add(carrier.row(i), carrier.labels[i]);
        s.add(shipper.row(i), shipper.labels[i]);
      }
      if ((fit_carrier && !two_classes(c)) || (fit_shipper && !two_classes(s))) {
        ++rep.redraws;
        continue;
      }
      CandidateModel model = previous;
      if (fit_carrier) {
        FitResult alpha = fit_l1_logistic(c, lambda, config.fit);
        rep.unconverged_fits += int(!alpha.converged);
        model.alpha = std::move(alpha.weights);
      }
      if (fit_shipper) {
        FitResult beta = fit_l1_logistic(s, lambda, config.fit);
        rep.unconverged_fits += int(!beta.converged);
        model.beta = std::move(beta.weights);
      }
      fitted.push_back(std::move(model));
      done = true;
    }
    if (fitted.size() < static_cast<std::size_t>(k) + 1) {
      fitted.push_back(previous);
      rep.retained.push_back(static_cast<std::size_t>(k));
    }
  }

  std::vector<double> lw(K);
  for (int k = 0; k < K; ++k) lw[k] = log_likelihood(fitted[k], history, registry);

  BeliefState next = state;
  next.candidates_ = std::make_shared<const std::vector<CandidateModel>>(std::move(fitted));
  next.set_log_weights(std::move(lw));
  if (next.q_.empty()) {
    next.set_log_weights(std::vector<double>(K, 0.0));
    ++next.underflow_resets_;
  }
  ++next.resample_count_;
  return next;
}

bool resample_due(long n, int r, long C) {
  if (C < 1) throw std::invalid_argument("resample base C must be >= 1");
  if (r < 0 || r > 60) return false;
  const long target = C << r;
  return target > 0 && n == target;
}

}  // namespace brokerage
