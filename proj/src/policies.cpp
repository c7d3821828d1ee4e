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

#include "brokerage/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace brokerage {

PriceGrid PriceGrid::uniform(double lower, double upper, int m) {
  if (m < 1) throw std::invalid_argument("price grid needs at least one point");
  PriceGrid grid;
  grid.lower = lower;
  grid.upper = upper;
  grid.points.reserve(m);
  for (int i = 1; i <= m; ++i) grid.points.push_back(lower + (upper - lower) * i / m);
  grid.points.back() = upper;
  grid.validate();
  return grid;
}

void PriceGrid::validate() const {
  if (!(lower < upper)) throw std::invalid_argument("price grid needs lower < upper");
  if (points.empty()) throw std::invalid_argument("price grid is empty");
  double prev = lower;
  for (double p : points) {
    if (!(p > prev) || p > upper) {
      throw std::invalid_argument("price grid points must increase inside (lower, upper]");
    }
    prev = p;
  }
}

std::optional<std::size_t> PriceGrid::index_of(double price) const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (std::abs(points[i] - price) <= 1e-12) return i;
  }
  return std::nullopt;
}

HorizonWeight HorizonWeight::constant(double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("tau must be nonnegative");
  HorizonWeight w;
  w.tau = tau;
  return w;
}

HorizonWeight HorizonWeight::remaining(long horizon) {
  if (horizon < 0) throw std::invalid_argument("horizon must be nonnegative");
  HorizonWeight w;
  w.horizon = horizon;
  return w;
}

double HorizonWeight::evaluate(long n) const {
  if (horizon >= 0) return static_cast<double>(std::max(0L, horizon - n));
  return tau;
}

double ContextModels::accept(std::size_t k, double price) const {
  return sigmoid(carrier[k].at(price)) * sigmoid(shipper[k].at(price));
}

double ContextModels::response_likelihood(std::size_t k, int y_c, int y_s,
                                          double price) const {
  return sigmoid(y_c * carrier[k].at(price)) * sigmoid(y_s * shipper[k].at(price));
}

ContextModels context_models(std::span<const CandidateModel> candidates,
                             const FeatureRegistry& registry, const LoadAttributes& b) {
  ContextModels m;
  m.carrier.reserve(candidates.size());
  m.shipper.reserve(candidates.size());
  for (const auto& theta : candidates) {
    m.carrier.push_back(utility_line(theta.alpha, registry, b));
    m.shipper.push_back(utility_line(theta.beta, registry, b));
  }
  return m;
}

namespace {

// Revenue table p_i f_k(p_i) for one context.
struct RevenueTable {
  const PriceGrid& grid;
  ContextModels models;
  std::vector<std::vector<double>> rev;  // [k][i]

  RevenueTable(const BeliefState& state, const FeatureRegistry& registry,
               const LoadAttributes& b, const PriceGrid& g)
      : grid(g), models(context_models(state.candidates(), registry, b)) {
    rev.assign(state.size(), std::vector<double>(grid.size()));
    for (std::size_t k = 0; k < state.size(); ++k) {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        rev[k][i] = grid.points[i] * models.accept(k, grid.points[i]);
      }
    }
  }

  // max_i sum_k w_k rev[k][i]
  double best(const std::vector<double>& w) const {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * rev[k][i];
      top = std::max(top, s);
    }
    return top;
  }

  double mixture(const std::vector<double>& q, std::size_t i) const {
    double s = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) s += q[k] * rev[k][i];
    return s;
  }

  double kg(const std::vector<double>& q, double base, double price) const {
    std::vector<double> w(q.size());
    double total = 0.0;
    for (int y_c : {1, -1}) {
      for (int y_s : {1, -1}) {
        for (std::size_t k = 0; k < q.size(); ++k) {
          w[k] = q[k] * models.response_likelihood(k, y_c, y_s, price);
        }
        total += best(w);
      }
    }
    return total - base;
  }
};

PolicyDecision pick(std::vector<PriceEvaluation> evals) {
  PolicyDecision d;
  d.score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < evals.size(); ++i) {
    if (evals[i].score > d.score) {
      d.score = evals[i].score;
      d.index = i;
    }
  }
  d.price = evals[d.index].price;
  d.diagnostics = std::move(evals);
  return d;
}

}  // namespace

double expected_revenue(const BeliefState& state, const FeatureRegistry& registry,
                        const LoadAttributes& b, double price) {
  return price * predictive_accept_prob(state, registry, b, price);
}

double kg_value(const BeliefState& state, const FeatureRegistry& registry,
                const LoadAttributes& b, double price, const PriceGrid& grid) {
  RevenueTable table(state, registry, b, grid);
  return table.kg(state.q(), table.best(state.q()), price);
}

PolicyDecision kg_policy(const BeliefState& state, const FeatureRegistry& registry,
                         const LoadAttributes& b, const HorizonWeight& tau, long n,
                         const PriceGrid& grid) {
  RevenueTable table(state, registry, b, grid);
  const auto& q = state.q();
  double base = table.best(q);
  double t = tau.evaluate(n);
  std::vector<PriceEvaluation> evals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto& e = evals[i];
    e.price = grid.points[i];
    e.expected_revenue = table.mixture(q, i);
    e.kg_value = table.kg(q, base, e.price);
    e.score = e.expected_revenue + t * e.kg_value;
  }
  return pick(std::move(evals));
}

PolicyDecision exploit_policy(const BeliefState& state, const FeatureRegistry& registry,
                              const LoadAttributes& b, const PriceGrid& grid) {
  RevenueTable table(state, registry, b, grid);
  std::vector<PriceEvaluation> evals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    evals[i].price = grid.points[i];
    evals[i].expected_revenue = table.mixture(state.q(), i);
    evals[i].score = evals[i].expected_revenue;
  }
  return pick(std::move(evals));
}

std::size_t sample_candidate(std::span<const double> q, Rng& rng) {
  if (q.empty()) throw std::invalid_argument("cannot sample from an empty belief");
  double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    acc += q[k];
    if (u < acc) return k;
  }
  // Rounding left the cumulative sum just below one.
  for (std::size_t k = q.size(); k-- > 0;) {
    if (q[k] > 0.0) return k;
  }
  return q.size() - 1;
}

PolicyDecision thompson_policy(const BeliefState& state, const FeatureRegistry& registry,
                               const LoadAttributes& b, const PriceGrid& grid, Rng& rng) {
  std::size_t k = sample_candidate(state.q(), rng);
  ContextModels m = context_models(std::span(&state.candidate(k), 1), registry, b);
  std::vector<PriceEvaluation> evals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    evals[i].price = grid.points[i];
    evals[i].expected_revenue = grid.points[i] * m.accept(0, grid.points[i]);
    evals[i].score = evals[i].expected_revenue;
  }
  PolicyDecision d = pick(std::move(evals));
  d.sampled_candidate = k;
  return d;
}

PolicyDecision opt_thompson_policy(const BeliefState& state, const FeatureRegistry& registry,
                                   const LoadAttributes& b, const PriceGrid& grid, Rng& rng) {
  std::size_t k = sample_candidate(state.q(), rng);
  RevenueTable table(state, registry, b, grid);
  std::vector<PriceEvaluation> evals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    evals[i].price = grid.points[i];
    evals[i].expected_revenue = table.mixture(state.q(), i);
    evals[i].score = std::max(table.rev[k][i], evals[i].expected_revenue);
  }
  PolicyDecision d = pick(std::move(evals));
  d.sampled_candidate = k;
  return d;
}

PolicyDecision est_opt_policy(const CandidateModel& fitted, const FeatureRegistry& registry,
                              const LoadAttributes& b, const PriceGrid& grid) {
  ContextModels m = context_models(std::span(&fitted, 1), registry, b);
  std::vector<PriceEvaluation> evals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    evals[i].price = grid.points[i];
    evals[i].expected_revenue = grid.points[i] * m.accept(0, grid.points[i]);
    evals[i].score = evals[i].expected_revenue;
  }
  return pick(std::move(evals));
}

double mean_price_policy(std::span<const double> accepted_prices) {
  if (accepted_prices.empty()) {
    throw std::domain_error("mean-price policy needs at least one accepted price");
  }
  return std::accumulate(accepted_prices.begin(), accepted_prices.end(), 0.0) /
         static_cast<double>(accepted_prices.size());
}

// ---------------------------------------------------------------------------

LoadAttributes context_free_load() {
  LoadAttributes b;
  b.origin = 0;
  b.destination = 1;
  b.equipment = Equipment::DryVan;
  b.miles = 1000.0;
  return b;
}

CandidateModel make_context_free_candidate(const FeatureRegistry& registry,
                                           const ContextFreeModel& model) {
  CandidateModel theta{WeightVector::zeros(registry, Side::Carrier),
                       WeightVector::zeros(registry, Side::Shipper)};
  const int dry = static_cast<int>(Equipment::DryVan);
  const auto& lc = registry.layout(Side::Carrier);
  const auto& ls = registry.layout(Side::Shipper);
  theta.alpha.weights[lc.intercept] = model.alpha0;
  theta.alpha.weights[lc.equipment_price + dry] = model.alpha1;
  theta.beta.weights[ls.intercept] = model.beta0;
  theta.beta.weights[ls.equipment_price + dry] = model.beta1;
  return theta;
}

ContextFreeModel context_free_view(const CandidateModel& theta,
                                   const FeatureRegistry& registry, const LoadAttributes& b) {
  UtilityLine c = utility_line(theta.alpha, registry, b);
  UtilityLine s = utility_line(theta.beta, registry, b);
  return {c.intercept, c.slope, s.intercept, s.slope};
}

namespace {

enum class Crossing { Everywhere, Nowhere, At };

struct LineCrossing {
  Crossing kind = Crossing::Nowhere;
  double price = 0.0;
};

LineCrossing cross(double a0, double a1, double b0, double b1) {
  double d0 = a0 - b0;
  double d1 = a1 - b1;
  if (d1 == 0.0) return {d0 == 0.0 ? Crossing::Everywhere : Crossing::Nowhere, 0.0};
  return {Crossing::At, -d0 / d1};
}

}  // namespace

UninstructiveBid uninstructive_bid(const ContextFreeModel& first,
                                   const ContextFreeModel& second, double lower,
                                   double upper) {
  LineCrossing c = cross(first.alpha0, first.alpha1, second.alpha0, second.alpha1);
  LineCrossing s = cross(first.beta0, first.beta1, second.beta0, second.beta1);
  UninstructiveBid out;
  if (c.kind == Crossing::Nowhere || s.kind == Crossing::Nowhere) return out;
  if (c.kind == Crossing::Everywhere && s.kind == Crossing::Everywhere) {
    out.degenerate = true;
    return out;
  }
  double p;
  if (c.kind == Crossing::Everywhere) {
    p = s.price;
  } else if (s.kind == Crossing::Everywhere) {
    p = c.price;
  } else {
    double scale = std::max({1.0, std::abs(c.price), std::abs(s.price)});
    if (std::abs(c.price - s.price) > 1e-9 * scale) return out;
    p = 0.5 * (c.price + s.price);
  }
  if (p < lower || p > upper) return out;
  out.price = p;
  return out;
}

namespace {

double stall_margin(const ContextFreeModel& m, double p) {
  return m.alpha1 * (1.0 - sigmoid(m.alpha0 + m.alpha1 * p)) +
         m.beta1 * (1.0 - sigmoid(m.beta0 + m.beta1 * p));
}

void require_slopes(const ContextFreeModel& m) {
  if (!(m.alpha1 > 0.0) || !(m.beta1 < 0.0)) {
    throw std::invalid_argument(
        "incomplete-learning check needs a rising carrier and a falling shipper curve");
  }
}

}  // namespace

IncompleteLearningReport incomplete_learning_check(const ContextFreeModel& first,
                                                   const ContextFreeModel& second,
                                                   double lower, double upper) {
  require_slopes(first);
  require_slopes(second);
  IncompleteLearningReport r;
  UninstructiveBid bid = uninstructive_bid(first, second, lower, upper);
  if (!bid.price || *bid.price <= 0.0) return r;
  double p = *bid.price;
  r.p_hat = p;
  r.m1 = stall_margin(first, p);
  r.m2 = stall_margin(second, p);
  r.in_set = r.m2 > 0.0 && r.m1 < 0.0 && r.m1 + r.m2 >= -1.0 / p;
  return r;
}

std::optional<double> locate_confounding_belief(const ContextFreeModel& first,
                                                const ContextFreeModel& second,
                                                double lower, double upper,
                                                double tolerance) {
  UninstructiveBid bid = uninstructive_bid(first, second, lower, upper);
  if (!bid.price || *bid.price <= 0.0) return std::nullopt;
  double p = *bid.price;
  double m1 = stall_margin(first, p);
  double m2 = stall_margin(second, p);
  // Derivative of p (q f_1 + (1 - q) f_2) at p_hat, divided by the common
  // f(p_hat) > 0.
  auto slope = [&](double q) { return 1.0 + p * (q * m1 + (1.0 - q) * m2); };
  double lo = 0.0, hi = 1.0;
  double f_lo = slope(lo), f_hi = slope(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0)) return std::nullopt;
  while (hi - lo > tolerance) {
    double mid = 0.5 * (lo + hi);
    double f_mid = slope(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace brokerage
