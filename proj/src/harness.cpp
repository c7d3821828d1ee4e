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

#include "brokerage/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace brokerage {

std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::KG: return "kg";
    case PolicyKind::Exploit: return "exploit";
    case PolicyKind::TS: return "ts";
    case PolicyKind::OptTS: return "opt-ts";
    case PolicyKind::EstOpt: return "est-opt";
    case PolicyKind::MeanPrice: return "mean-price";
  }
  return "?";
}

PolicyKind parse_policy(std::string_view name) {
  for (PolicyKind k : {PolicyKind::KG, PolicyKind::Exploit, PolicyKind::TS, PolicyKind::OptTS,
                       PolicyKind::EstOpt, PolicyKind::MeanPrice}) {
    if (policy_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

CandidateModel draw_model(const FeatureRegistry& registry, const PriorConfig& prior, Rng& rng) {
  auto normal = [&](double mean, double sd) { return mean + sd * standard_normal(rng); };
  CandidateModel m{WeightVector::zeros(registry, Side::Carrier),
                   WeightVector::zeros(registry, Side::Shipper)};
  const auto& lc = registry.layout(Side::Carrier);
  auto& a = m.alpha.weights;
  a[lc.intercept] = normal(prior.carrier_intercept_mean, prior.carrier_intercept_sd);
  a[lc.daily_load] = normal(0.0, prior.daily_sd);
  a[lc.dest_daily_demand] = normal(0.0, prior.daily_sd);
  // A shift d of the carrier curve along p is -slope_c * d on its utility
  // and -slope_s * d on the shipper's.
  const double shift_c = -prior.carrier_slope_mean;
  const double shift_s = -prior.shipper_slope_mean;
  std::vector<double> origin_shift(registry.origins().size());
  std::vector<double> dest_shift(registry.destinations().size());
  for (double& d : origin_shift) d = normal(0.0, prior.region_shift_sd);
  for (double& d : dest_shift) d = normal(0.0, prior.region_shift_sd);
  a[lc.min_dist] = shift_c * prior.short_haul_shift + normal(0.0, prior.min_dist_sd);
  for (std::size_t i = 0; i < origin_shift.size(); ++i) {
    a[lc.origin + i] = shift_c * origin_shift[i] + normal(0.0, prior.indicator_sd);
  }
  for (std::size_t i = 0; i < dest_shift.size(); ++i) {
    a[lc.destination + i] = shift_c * dest_shift[i] + normal(0.0, prior.indicator_sd);
  }
  for (int e = 0; e < kEquipmentTypes; ++e) a[lc.equipment + e] = normal(0.0, prior.equipment_sd);
  for (int e = 0; e < kEquipmentTypes; ++e) {
    a[lc.equipment_price + e] =
        std::max(prior.min_abs_slope, normal(prior.carrier_slope_mean, prior.carrier_slope_sd));
  }
  a[lc.price_miles_min_dist] = normal(0.0, prior.price_miles_sd);
  a[lc.price_daily_load] = normal(0.0, prior.price_daily_sd);

  const auto& ls = registry.layout(Side::Shipper);
  auto& b = m.beta.weights;
  b[ls.intercept] = normal(prior.shipper_intercept_mean, prior.shipper_intercept_sd);
  b[ls.min_dist] = shift_s * prior.short_haul_shift + normal(0.0, prior.min_dist_sd);
  for (std::size_t i = 0; i < origin_shift.size(); ++i) {
    b[ls.origin + i] = shift_s * origin_shift[i] + normal(0.0, prior.indicator_sd);
  }
  for (std::size_t i = 0; i < dest_shift.size(); ++i) {
    b[ls.destination + i] = shift_s * dest_shift[i] + normal(0.0, prior.indicator_sd);
  }
  for (int e = 0; e < kEquipmentTypes; ++e) {
    b[ls.equipment_price + e] =
        std::min(-prior.min_abs_slope, normal(prior.shipper_slope_mean, prior.shipper_slope_sd));
  }
  b[ls.price_miles_min_dist] = normal(0.0, prior.price_miles_sd);
  return m;
}

OraclePrice oracle_price(const CandidateModel& truth, const FeatureRegistry& registry,
                         const LoadAttributes& b, const PriceGrid& grid) {
  PolicyDecision d = est_opt_policy(truth, registry, b, grid);
  return {d.price, d.index, d.score};
}

SummaryStat summarize(const std::vector<double>& values) {
  SummaryStat s;
  if (values.empty()) return s;
  double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return s;
}

namespace {

constexpr std::uint64_t kTagCandidates = 0x63616e64ULL;
constexpr std::uint64_t kTagPolicy = 0x706f6c69ULL;
constexpr std::uint64_t kTagResponse = 0x72657370ULL;
constexpr std::uint64_t kTagDemand = 0x64656d61ULL;
constexpr std::uint64_t kTagFleet = 0x666c6565ULL;
constexpr std::uint64_t kTagTrain = 0x74726169ULL;
constexpr std::uint64_t kTagLookahead = 0x6c6f6f6bULL;
constexpr std::uint64_t kTagTruth = 0x74727574ULL;
constexpr std::uint64_t kTagHistory = 0x68697374ULL;

// Responses shared by every policy that bids the same price on the same
// load: grid prices are keyed by index, anything else by its bit pattern.
std::uint64_t price_key(const PriceGrid& grid, double price) {
  if (auto i = grid.index_of(price)) return *i;
  return std::bit_cast<std::uint64_t>(price);
}

Dataset side_dataset(const FeatureRegistry& registry, std::span<const ObservationRecord> history,
                     Side side) {
  Dataset d{side, registry.dim(side), {}, {}};
  d.rows.reserve(history.size() * d.dim);
  for (const auto& o : history) {
    d.add(features(registry, o.b, o.price, side).values,
          side == Side::Carrier ? o.y_c : o.y_s);
  }
  return d;
}

bool has_two_classes(const Dataset& d) {
  return !d.labels.empty() &&
         std::any_of(d.labels.begin(), d.labels.end(),
                     [&](int y) { return y != d.labels.front(); });
}

// One policy's bidding state within one rep.
class Bidder {
 public:
  Bidder(const PolicySpec& spec, const FeatureRegistry& registry, const PriceGrid& grid,
         std::vector<CandidateModel> initial, int K, long C, const BaggingConfig& bagging,
         std::optional<long> horizon, std::uint64_t seed,
         std::span<const ObservationRecord> past = {})
      : spec_(spec),
        registry_(registry),
        grid_(grid),
        K_(K),
        C_(C),
        bagging_(bagging),
        rng_(seed),
        fitted_(initial.front()),
        belief_(init_uniform(std::move(initial))) {
    if (spec.tau_remaining && horizon) {
      tau_ = HorizonWeight::remaining(*horizon);
    } else if (spec.tau) {
      tau_ = *spec.tau;
    } else {
      tau_ = HorizonWeight::constant(100.0);
    }
    refresh_ = spec.refresh_interval == 0 ? C : spec.refresh_interval;
    next_refit_ = refresh_;
    if (spec.kind == PolicyKind::EstOpt && !past.empty()) {
      history_.assign(past.begin(), past.end());
      refit();
      refits_ = 0;
    }
    if (spec.kind == PolicyKind::MeanPrice) set_lane_means(past);
  }

  bool uses_belief() const {
    return spec_.kind != PolicyKind::EstOpt && spec_.kind != PolicyKind::MeanPrice;
  }

  // Resamples or refits when `n` observations have reached the next
  // schedule point.
  void prepare(long n) {
    if (uses_belief()) {
      long due = C_ << belief_.resample_count();
      if (n > 0 && belief_.resample_count() < 40 && n >= due && n > last_resample_) {
        pre_resample_map_.push_back(belief_.candidate(belief_.map_index()));
        belief_ = bagging_resample(belief_, registry_, K_, bagging_, rng_);
        last_resample_ = n;
      }
    } else if (spec_.kind == PolicyKind::EstOpt && refresh_ > 0 && n >= next_refit_ &&
               !history_.empty()) {
      refit();
      next_refit_ = (n / refresh_ + 1) * refresh_;
    }
  }

  struct Bid {
    double price = 0.0;
    bool fallback = false;
  };

  Bid bid(const LoadAttributes& b, long n) {
    switch (spec_.kind) {
      case PolicyKind::KG:
        return {kg_policy(belief_, registry_, b, tau_, n, grid_).price};
      case PolicyKind::Exploit:
        return {exploit_policy(belief_, registry_, b, grid_).price};
      case PolicyKind::TS:
        return {thompson_policy(belief_, registry_, b, grid_, rng_).price};
      case PolicyKind::OptTS:
        return {opt_thompson_policy(belief_, registry_, b, grid_, rng_).price};
      case PolicyKind::EstOpt:
        return {est_opt_policy(fitted_, registry_, b, grid_).price};
      case PolicyKind::MeanPrice: {
        auto it = lane_means_.find({b.origin, b.destination});
        if (it != lane_means_.end()) return {it->second};
        if (overall_mean_) return {*overall_mean_};
        return {spec_.fallback_price, true};
      }
    }
    return {};
  }

  void observe(const ObservationRecord& obs) {
    if (uses_belief()) belief_ = posterior_update(belief_, obs, registry_);
    if (spec_.kind == PolicyKind::EstOpt) history_.push_back(obs);
  }

  int resamples() const { return uses_belief() ? belief_.resample_count() : refits_; }
  const std::vector<CandidateModel>& pre_resample_map() const { return pre_resample_map_; }

 private:
  // Mean accepted price per lane in the historical data, and over all lanes
  // for lanes that never appear.
  void set_lane_means(std::span<const ObservationRecord> past) {
    std::map<std::pair<RegionId, RegionId>, std::vector<double>> by_lane;
    std::vector<double> all;
    for (const auto& o : past) {
      if (o.y_c != 1 || o.y_s != 1) continue;
      by_lane[{o.b.origin, o.b.destination}].push_back(o.price);
      all.push_back(o.price);
    }
    for (const auto& [lane, prices] : by_lane) lane_means_[lane] = mean_price_policy(prices);
    if (!all.empty()) overall_mean_ = mean_price_policy(all);
  }

  void refit() {
    const double lambda = bagging_.l1_strength / static_cast<double>(history_.size());
    Dataset c = side_dataset(registry_, history_, Side::Carrier);
    Dataset s = side_dataset(registry_, history_, Side::Shipper);
    if (has_two_classes(c)) fitted_.alpha = fit_l1_logistic(c, lambda, bagging_.fit).weights;
    if (has_two_classes(s)) fitted_.beta = fit_l1_logistic(s, lambda, bagging_.fit).weights;
    ++refits_;
  }

  PolicySpec spec_;
  const FeatureRegistry& registry_;
  const PriceGrid& grid_;
  int K_;
  long C_;
  BaggingConfig bagging_;
  Rng rng_;
  HorizonWeight tau_;
  long refresh_ = 0;
  long next_refit_ = 0;
  long last_resample_ = 0;
  int refits_ = 0;
  CandidateModel fitted_;
  BeliefState belief_;
  std::vector<ObservationRecord> history_;
  std::map<std::pair<RegionId, RegionId>, double> lane_means_;
  std::optional<double> overall_mean_;
  std::vector<CandidateModel> pre_resample_map_;
};

std::vector<CandidateModel> initial_candidates(const FeatureRegistry& registry,
                                               const PriorConfig& prior, int K,
                                               std::uint64_t seed, int rep) {
  Rng rng(derive_seed(seed, {kTagCandidates, static_cast<std::uint64_t>(rep)}));
  std::vector<CandidateModel> c;
  for (int k = 0; k < K; ++k) c.push_back(draw_model(registry, prior, rng));
  return c;
}

template <typename F>
void for_each_rep(int reps, int threads, F&& body) {
  int workers = std::max(1, std::min(threads, reps));
  if (workers == 1) {
    for (int r = 0; r < reps; ++r) body(r);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex mu;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int r = w; r < reps; r += workers) {
        try {
          body(r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void fill_context(StepRecord& r, const LoadAttributes& b) {
  r.origin = b.origin;
  r.destination = b.destination;
  r.equipment = b.equipment;
}

}  // namespace

// ---------------------------------------------------------------------------

void BanditRunConfig::validate() const {
  if (N < 1) throw std::invalid_argument("bandit run needs N >= 1");
  if (reps < 1) throw std::invalid_argument("bandit run needs reps >= 1");
  if (K < 1) throw std::invalid_argument("bandit run needs K >= 1");
  if (C < 1) throw std::invalid_argument("resample base must be >= 1");
  if (contexts.empty()) throw std::invalid_argument("bandit run needs contexts");
  if (policies.empty()) throw std::invalid_argument("bandit run needs at least one policy");
  grid.validate();
}

std::vector<MetricTrace> run_bandit_experiment(const BanditRunConfig& config) {
  config.validate();
  const std::size_t P = config.policies.size();
  const long N = config.N;
  std::vector<OraclePrice> oracle(N);
  for (long n = 0; n < N; ++n) {
    oracle[n] = oracle_price(config.truth, config.registry,
                             config.contexts[n % config.contexts.size()], config.grid);
  }
  // [rep][policy]
  std::vector<std::vector<std::vector<StepRecord>>> records(
      config.reps, std::vector<std::vector<StepRecord>>(P));
  std::vector<std::vector<RepSummary>> summaries(config.reps, std::vector<RepSummary>(P));

  for_each_rep(config.reps, config.threads, [&](int rep) {
    auto initial = initial_candidates(config.registry, config.prior, config.K, config.seed, rep);
    std::vector<ObservationRecord> past;
    Rng past_rng(derive_seed(config.seed, {kTagHistory, static_cast<std::uint64_t>(rep)}));
    for (const auto& b : config.history_contexts) {
      double p = std::max(0.05, config.history_rate +
                                    config.history_rate_sd * standard_normal(past_rng));
      double fc = accept_prob(config.truth.alpha, carrier_features(config.registry, b, p));
      double fs = accept_prob(config.truth.beta, shipper_features(config.registry, b, p));
      int yc = uniform01(past_rng) < fc ? 1 : -1;
      int ys = uniform01(past_rng) < fs ? 1 : -1;
      past.push_back({b, p, yc, ys, -1});
    }
    for (std::size_t pi = 0; pi < P; ++pi) {
      const PolicySpec& spec = config.policies[pi];
      Bidder bidder(spec, config.registry, config.grid, initial, config.K, config.C,
                    config.bagging, N,
                    derive_seed(config.seed, {kTagPolicy, static_cast<std::uint64_t>(rep),
                                              static_cast<std::uint64_t>(spec.kind)}),
                    spec.kind == PolicyKind::EstOpt && !config.est_opt_uses_history
                        ? std::span<const ObservationRecord>{}
                        : std::span<const ObservationRecord>(past));
      auto& out = records[rep][pi];
      if (config.record_steps) out.reserve(N);
      double cum_regret = 0.0, cum_revenue = 0.0;
      long accepts = 0, carrier = 0, shipper = 0;
      for (long n = 0; n < N; ++n) {
        const LoadAttributes& b = config.contexts[n % config.contexts.size()];
        bidder.prepare(n);
        auto bid = bidder.bid(b, n);
        double fc = accept_prob(config.truth.alpha,
                                carrier_features(config.registry, b, bid.price));
        double fs = accept_prob(config.truth.beta,
                                shipper_features(config.registry, b, bid.price));
        // Off-grid bids can beat the grid optimum; the benchmark then
        // includes the bid itself.
        double value = bid.price * fc * fs;
        double regret = std::max(oracle[n].value, value) - value;
        std::uint64_t pk = price_key(config.grid, bid.price);
        auto r64 = static_cast<std::uint64_t>(rep);
        auto n64 = static_cast<std::uint64_t>(n);
        int yc = keyed_uniform(config.seed, {kTagResponse, r64, n64, pk, 0}) < fc ? 1 : 0;
        int ys = keyed_uniform(config.seed, {kTagResponse, r64, n64, pk, 1}) < fs ? 1 : 0;
        cum_regret += regret;
        cum_revenue += bid.price * yc * ys;
        accepts += yc * ys;
        carrier += yc;
        shipper += ys;
        bidder.observe({b, bid.price, yc ? 1 : -1, ys ? 1 : -1, n});
        if (config.record_steps) {
          StepRecord r;
          r.rep = rep;
          r.step = n;
          fill_context(r, b);
          r.bid = bid.price;
          r.y_c = yc;
          r.y_s = ys;
          r.regret = regret;
          r.cum_regret = cum_regret;
          r.cum_revenue = cum_revenue;
          r.cum_accepts = accepts;
          r.fallback = bid.fallback;
          out.push_back(r);
        }
      }
      RepSummary& s = summaries[rep][pi];
      s.steps = N;
      s.avg_regret = cum_regret / N;
      s.avg_revenue = cum_revenue / N;
      s.accept_rate = static_cast<double>(accepts) / N;
      s.carrier_rate = static_cast<double>(carrier) / N;
      s.shipper_rate = static_cast<double>(shipper) / N;
      s.resamples = bidder.resamples();
      s.pre_resample_map = bidder.pre_resample_map();
    }
  });

  std::vector<MetricTrace> traces(P);
  for (std::size_t pi = 0; pi < P; ++pi) {
    traces[pi].policy = std::string(policy_name(config.policies[pi].kind));
    for (int rep = 0; rep < config.reps; ++rep) {
      auto& src = records[rep][pi];
      traces[pi].records.insert(traces[pi].records.end(), src.begin(), src.end());
      traces[pi].reps.push_back(std::move(summaries[rep][pi]));
    }
  }
  return traces;
}

// ---------------------------------------------------------------------------

namespace {

PriceGrid grid_from(const KeyValueConfig& config, const std::string& prefix) {
  double lower = config.get_double(prefix + "price_lower", 0.0);
  double upper = config.get_double(prefix + "price_upper", 4.0);
  long m = config.get_int(prefix + "grid_points", 80);
  try {
    return PriceGrid::uniform(lower, upper, static_cast<int>(m));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(config.line_of(prefix + "grid_points"), e.what());
  }
}

PriorConfig prior_from(const KeyValueConfig& config) {
  PriorConfig p;
  auto get = [&](const char* key, double& field) {
    field = config.get_double(std::string("prior.") + key, field);
  };
  get("carrier_intercept_mean", p.carrier_intercept_mean);
  get("carrier_intercept_sd", p.carrier_intercept_sd);
  get("carrier_slope_mean", p.carrier_slope_mean);
  get("carrier_slope_sd", p.carrier_slope_sd);
  get("shipper_intercept_mean", p.shipper_intercept_mean);
  get("shipper_intercept_sd", p.shipper_intercept_sd);
  get("shipper_slope_mean", p.shipper_slope_mean);
  get("shipper_slope_sd", p.shipper_slope_sd);
  get("min_abs_slope", p.min_abs_slope);
  get("indicator_sd", p.indicator_sd);
  get("equipment_sd", p.equipment_sd);
  get("min_dist_sd", p.min_dist_sd);
  get("daily_sd", p.daily_sd);
  get("price_daily_sd", p.price_daily_sd);
  get("price_miles_sd", p.price_miles_sd);
  get("region_shift_sd", p.region_shift_sd);
  get("short_haul_shift", p.short_haul_shift);
  return p;
}

BaggingConfig bagging_from(const KeyValueConfig& config, const std::string& prefix) {
  BaggingConfig b;
  b.l1_strength = config.get_double(prefix + "l1_strength", b.l1_strength);
  b.fit.max_iterations =
      static_cast<int>(config.get_int(prefix + "fit_max_iterations", b.fit.max_iterations));
  b.fit.tolerance = config.get_double(prefix + "fit_tolerance", b.fit.tolerance);
  b.max_retries = static_cast<int>(config.get_int(prefix + "max_retries", b.max_retries));
  if (!(b.l1_strength >= 0.0) || b.fit.max_iterations < 1 || b.max_retries < 0) {
    throw ConfigError(config.line_of(prefix + "l1_strength"), "invalid fitting parameters");
  }
  return b;
}

long positive_int(const KeyValueConfig& config, const std::string& key, long fallback) {
  long v = config.get_int(key, fallback);
  if (v < 1) throw ConfigError(config.line_of(key), key + " must be >= 1");
  return v;
}

FeatureRegistry registry_for(const std::vector<LoadAttributes>& loads, int threshold) {
  std::map<RegionId, int> origins, destinations;
  for (const auto& b : loads) {
    ++origins[b.origin];
    ++destinations[b.destination];
  }
  return build_feature_registry(origins, destinations, threshold);
}

}  // namespace

std::vector<PolicySpec> policies_from(const KeyValueConfig& config, const std::string& prefix,
                                      const std::vector<std::string>& default_names) {
  std::vector<std::string> names = default_names;
  if (config.has(prefix + "policies")) names = config.get_strings(prefix + "policies");
  std::optional<HorizonWeight> tau;
  bool remaining = false;
  if (config.has(prefix + "tau")) {
    std::string t = config.get_string(prefix + "tau");
    if (t == "remaining") {
      remaining = true;
    } else {
      double v = config.get_double(prefix + "tau");
      if (!(v >= 0.0)) throw ConfigError(config.line_of(prefix + "tau"), "tau must be >= 0");
      tau = HorizonWeight::constant(v);
    }
  }
  long refresh = config.get_int(prefix + "est_opt_refresh", 0);
  double fallback = config.get_double(prefix + "mean_price_fallback", 2.0);
  std::vector<PolicySpec> out;
  for (const auto& name : names) {
    PolicySpec spec;
    try {
      spec.kind = parse_policy(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(config.line_of(prefix + "policies"), e.what());
    }
    spec.tau = tau;
    spec.tau_remaining = remaining;
    spec.refresh_interval = refresh;
    spec.fallback_price = fallback;
    out.push_back(spec);
  }
  if (out.empty()) throw ConfigError(config.line_of(prefix + "policies"), "no policies listed");
  return out;
}

BanditScenario make_bandit_scenario(const KeyValueConfig& config, std::uint64_t seed) {
  BanditScenario s;
  s.network = network_from_config(config);
  s.booking = booking_config_from(config, s.network);
  BanditRunConfig& r = s.run;
  const std::string p = "bandit.";
  r.N = positive_int(config, p + "steps", 3000);
  r.K = static_cast<int>(positive_int(config, p + "K", 5));
  r.C = positive_int(config, p + "C", 300);
  r.reps = static_cast<int>(positive_int(config, p + "reps", 20));
  r.grid = grid_from(config, p);
  r.policies = policies_from(config, p, {"kg", "exploit", "est-opt", "mean-price"});
  r.seed = seed;
  r.prior = prior_from(config);
  r.bagging = bagging_from(config, p);
  r.threads = static_cast<int>(positive_int(config, "run.threads", 1));
  int threshold = static_cast<int>(config.get_int(p + "indicator_threshold", 15));
  std::uint64_t stream_seed = config.get_uint64(p + "context_seed", derive_seed(seed, {kTagDemand}));

  long history = config.get_int(p + "history_loads", 1000);
  if (history < 0) throw ConfigError(config.line_of(p + "history_loads"), "must be >= 0");
  r.history_rate = config.get_double(p + "history_rate", r.history_rate);
  r.history_rate_sd = config.get_double(p + "history_rate_sd", r.history_rate_sd);
  if (!(r.history_rate > 0.0) || !(r.history_rate_sd >= 0.0)) {
    throw ConfigError(config.line_of(p + "history_rate"), "invalid historical rate");
  }
  // The historical loads precede the experiment in the same stream.
  OfferSampler sampler(s.booking);
  std::vector<LoadAttributes> stream;
  for (int t = 0; static_cast<long>(stream.size()) < r.N + history; ++t) {
    Rng rng(derive_seed(stream_seed, {static_cast<std::uint64_t>(t)}));
    for (const auto& o : sampler.sample(t, rng)) stream.push_back(o.attributes);
    if (t > 100000) throw ConfigError(0, "booking stream produces no loads");
  }
  r.est_opt_uses_history = config.get_bool(p + "est_opt_uses_history", false);
  r.history_contexts.assign(stream.begin(), stream.begin() + history);
  r.contexts.assign(stream.begin() + history, stream.begin() + history + r.N);
  try {
    r.registry = registry_for(r.history_contexts.empty() ? r.contexts : r.history_contexts, threshold);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(config.line_of(p + "indicator_threshold"), e.what());
  }
  Rng truth_rng(derive_seed(seed, {kTagTruth}));
  r.truth = draw_model(r.registry, r.prior, truth_rng);
  return s;
}

// ---------------------------------------------------------------------------

void FleetRunConfig::validate() const {
  if (batches < 1) throw std::invalid_argument("fleet run needs at least one batch");
  if (reps < 1) throw std::invalid_argument("fleet run needs reps >= 1");
  if (K < 1 || C < 1) throw std::invalid_argument("fleet run needs K, C >= 1");
  if (policies.empty()) throw std::invalid_argument("fleet run needs at least one policy");
  for (const auto& p : policies) {
    if (p.kind == PolicyKind::MeanPrice) {
      throw std::invalid_argument("mean-price is not available in fleet mode");
    }
  }
  if (n_drivers < 0) throw std::invalid_argument("fleet size must be nonnegative");
  grid.validate();
  model.params.validate();
  contribution.validate();
  lookahead.validate(true);
  booking.validate();
}

FleetRunConfig make_fleet_config(const KeyValueConfig& config, std::uint64_t seed,
                                 bool allow_test_thresholds) {
  FleetRunConfig c;
  const std::string p = "fleet_sim.";
  c.model.network = network_from_config(config);
  c.booking = booking_config_from(config, c.model.network);
  c.model.params = fleet_params_from(config);
  if (c.model.params.step_hours != c.booking.step_hours) {
    throw ConfigError(config.line_of("fleet.step_hours"),
                      "fleet and booking step lengths differ");
  }
  c.contribution = contribution_params_from(config);
  c.lookahead = lookahead_config_from(config, allow_test_thresholds);
  c.batches = static_cast<int>(positive_int(config, p + "batches", 56));
  c.K = static_cast<int>(positive_int(config, p + "K", 5));
  c.C = positive_int(config, p + "C", 100);
  c.reps = static_cast<int>(positive_int(config, p + "reps", 10));
  c.grid = grid_from(config, p);
  c.policies = policies_from(config, p, {"kg", "ts", "opt-ts", "exploit", "est-opt"});
  for (const auto& spec : c.policies) {
    if (spec.kind == PolicyKind::MeanPrice) {
      throw ConfigError(config.line_of(p + "policies"),
                        "mean-price is not available in fleet mode");
    }
  }
  c.seed = seed;
  c.n_drivers = config.get_int(p + "drivers", 50);
  if (c.n_drivers < 0) throw ConfigError(config.line_of(p + "drivers"), "drivers must be >= 0");
  c.team_fraction = config.get_double(p + "team_fraction", 0.2);
  c.vfa_training_runs = static_cast<int>(config.get_int(p + "vfa_training_runs", 3));
  c.initial_vfa = ValueFunction(
      static_cast<int>(config.get_int("dispatch.value_buckets", c.booking.steps_per_day())),
      config.get_double("dispatch.theta_step", 20.0), config.get_double("dispatch.discount", 0.95));
  c.prior = prior_from(config);
  c.bagging = bagging_from(config, p);
  c.threads = static_cast<int>(positive_int(config, "run.threads", 1));
  int threshold = static_cast<int>(config.get_int(p + "indicator_threshold", 15));
  std::vector<OfferedLoad> history =
      sample_horizon(c.booking, c.batches, derive_seed(seed, {kTagHistory}));
  std::vector<LoadAttributes> loads;
  for (const auto& o : history) loads.push_back(o.attributes);
  c.registry = registry_for(loads, threshold);
  Rng truth_rng(derive_seed(seed, {kTagTruth}));
  c.shipper_truth = draw_model(c.registry, c.prior, truth_rng);
  return c;
}

namespace {

struct FleetPolicyRun {
  std::vector<StepRecord> records;
  RepSummary summary;
  FleetAudit audit;
};

std::vector<std::vector<OfferedLoad>> by_step(const std::vector<OfferedLoad>& loads, int steps) {
  std::vector<std::vector<OfferedLoad>> out(steps);
  for (const auto& l : loads) {
    if (l.offered_at >= 0 && l.offered_at < steps) out[l.offered_at].push_back(l);
  }
  return out;
}

// Warm-up passes of the base model that only train v-bar. Offers are
// committed with probability `accept` at the market rate.
ValueFunction train_vfa(const FleetRunConfig& c, const ResourceVector& drivers,
                        const OfferSampler& sampler, int rep) {
  ValueFunction vfa = c.initial_vfa;
  for (int run = 0; run < c.vfa_training_runs; ++run) {
    FleetState state;
    state.drivers = drivers;
    std::uint64_t seed = derive_seed(c.seed, {kTagTrain, static_cast<std::uint64_t>(rep),
                                              static_cast<std::uint64_t>(run)});
    for (int t = 0; t < c.batches; ++t) {
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
      std::vector<AcceptanceInput> inputs;
      for (auto& o : sampler.sample(t, rng)) {
        double revenue = c.lookahead.market_rate_per_mile * o.attributes.miles;
        inputs.push_back({o, revenue, uniform01(rng) < 0.5});
      }
      DispatchResult d = solve_dispatch(state, vfa, c.model, c.contribution);
      vfa = update_value_function(vfa, d.duals, state.t);
      advance_time(state, d.decision, inputs, c.model);
    }
  }
  return vfa;
}

FleetPolicyRun run_fleet_policy(const FleetRunConfig& c, const PolicySpec& spec, int rep,
                                const std::vector<std::vector<OfferedLoad>>& demand,
                                const ResourceVector& drivers, const ValueFunction& trained,
                                const OfferSampler& sampler,
                                const std::vector<CandidateModel>& initial) {
  FleetPolicyRun out;
  long total = 0;
  for (const auto& batch : demand) total += static_cast<long>(batch.size());
  auto r64 = static_cast<std::uint64_t>(rep);
  Bidder bidder(spec, c.registry, c.grid, initial, c.K, c.C, c.bagging, total,
                derive_seed(c.seed, {kTagPolicy, r64, static_cast<std::uint64_t>(spec.kind)}));
  FleetState state;
  state.drivers = drivers;
  ValueFunction vfa = trained;
  const long fleet_size = total_drivers(drivers);
  long n = 0, accepts = 0, carrier = 0, shipper = 0;
  double cum_revenue = 0.0;
  FleetAudit& audit = out.audit;

  for (int t = 0; t < c.batches; ++t) {
    const auto& batch = demand[t];
    bidder.prepare(n);
    std::vector<PricedOffer> priced;
    std::vector<bool> fallback;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      auto bid = bidder.bid(batch[i].attributes, n + static_cast<long>(i));
      priced.push_back({batch[i], bid.price * batch[i].attributes.miles});
      fallback.push_back(bid.fallback);
    }
    std::vector<bool> carrier_ok;
    if (!priced.empty()) {
      Rng look(derive_seed(c.seed, {kTagLookahead, r64, static_cast<std::uint64_t>(t)}));
      LookaheadInputs li{c.model, c.contribution, sampler, vfa};
      CoverageEstimate cov = run_lookahead(state, priced, c.lookahead, li, look, 1);
      carrier_ok = accepted_offers(priced, cov, c.lookahead.theta_accept, c.model.params);
    }
    std::vector<AcceptanceInput> offers;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const LoadAttributes& b = batch[i].attributes;
      double price = priced[i].revenue / b.miles;
      std::uint64_t pk = price_key(c.grid, price);
      double fs = accept_prob(c.shipper_truth.beta, shipper_features(c.registry, b, price));
      int yc = carrier_ok[i] ? 1 : 0;
      int ys = keyed_uniform(c.seed, {kTagResponse, r64, static_cast<std::uint64_t>(n), pk, 1}) < fs
                   ? 1
                   : 0;
      offers.push_back({batch[i], priced[i].revenue, yc == 1 && ys == 1});
      cum_revenue += price * yc * ys;
      accepts += yc * ys;
      carrier += yc;
      shipper += ys;
      bidder.observe({b, price, yc ? 1 : -1, ys ? 1 : -1, n});
      if (c.record_steps) {
        StepRecord r;
        r.rep = rep;
        r.step = n;
        r.batch = t;
        fill_context(r, b);
        r.bid = price;
        r.y_c = yc;
        r.y_s = ys;
        r.cum_revenue = cum_revenue;
        r.cum_accepts = accepts;
        r.fallback = fallback[i];
        out.records.push_back(r);
      }
      ++n;
    }
    DispatchResult d = solve_dispatch(state, vfa, c.model, c.contribution);
    vfa = update_value_function(vfa, d.duals, state.t);
    StepReport report = advance_time(state, d.decision, offers, c.model);
    audit.accepted += report.accepted;
    audit.served += report.served;
    audit.expired += report.expired;
    audit.penalty += report.penalty;
    audit.carrier_revenue += report.revenue;
    audit.steps.push_back(report);
    audit.max_driver_deviation =
        std::max(audit.max_driver_deviation, std::abs(total_drivers(state.drivers) - fleet_size));
    if (audit.accepted != audit.served + audit.expired + state.loads.pending_total()) {
      ++audit.ledger_mismatches;
    }
  }
  audit.pending = state.loads.pending_total();
  RepSummary& s = out.summary;
  s.steps = n;
  if (n > 0) {
    s.avg_revenue = cum_revenue / n;
    s.accept_rate = static_cast<double>(accepts) / n;
    s.carrier_rate = static_cast<double>(carrier) / n;
    s.shipper_rate = static_cast<double>(shipper) / n;
  }
  s.resamples = bidder.resamples();
  return out;
}

}  // namespace

std::vector<MetricTrace> run_fleet_experiment(const FleetRunConfig& config) {
  config.validate();
  const std::size_t P = config.policies.size();
  OfferSampler sampler(config.booking);
  std::vector<std::vector<FleetPolicyRun>> runs(config.reps, std::vector<FleetPolicyRun>(P));
  for_each_rep(config.reps, config.threads, [&](int rep) {
    auto r64 = static_cast<std::uint64_t>(rep);
    std::vector<OfferedLoad> loads =
        config.trace.empty()
            ? sample_horizon(config.booking, config.batches,
                             derive_seed(config.seed, {kTagDemand, r64}))
            : config.trace;
    for (auto& l : loads) {
      validate_load(l.attributes, config.booking.max_lag_steps());
    }
    auto demand = by_step(loads, config.batches);
    ResourceVector drivers =
        config.drivers ? *config.drivers
                       : make_fleet(config.model.network, config.n_drivers,
                                    derive_seed(config.seed, {kTagFleet, r64}),
                                    config.team_fraction, config.booking.equipment_mix,
                                    config.model.params.hours_cap);
    ValueFunction trained = train_vfa(config, drivers, sampler, rep);
    auto initial = initial_candidates(config.registry, config.prior, config.K, config.seed, rep);
    for (std::size_t pi = 0; pi < P; ++pi) {
      runs[rep][pi] = run_fleet_policy(config, config.policies[pi], rep, demand, drivers, trained,
                                       sampler, initial);
    }
  });
  std::vector<MetricTrace> traces(P);
  for (std::size_t pi = 0; pi < P; ++pi) {
    traces[pi].policy = std::string(policy_name(config.policies[pi].kind));
    traces[pi].fleet_mode = true;
    for (int rep = 0; rep < config.reps; ++rep) {
      auto& r = runs[rep][pi];
      traces[pi].records.insert(traces[pi].records.end(), r.records.begin(), r.records.end());
      traces[pi].reps.push_back(std::move(r.summary));
      traces[pi].audits.push_back(std::move(r.audit));
    }
  }
  return traces;
}

// ---------------------------------------------------------------------------

void write_metric_csv(std::ostream& out, const MetricTrace& trace) {
  if (trace.fleet_mode) {
    out << "rep,step,batch,context,bid,y_c,y_s,cum_revenue,cum_accepts,fallback\n";
  } else {
    out << "rep,step,context,bid,y_c,y_s,regret,cum_regret,fallback\n";
  }
  char buf[256];
  for (const auto& r : trace.records) {
    std::string ctx = std::to_string(r.origin) + "-" + std::to_string(r.destination) + "-" +
                      std::string(equipment_name(r.equipment));
    if (trace.fleet_mode) {
      std::snprintf(buf, sizeof buf, "%d,%ld,%d,%s,%.10g,%d,%d,%.10g,%ld,%d\n", r.rep, r.step,
                    r.batch, ctx.c_str(), r.bid, r.y_c, r.y_s, r.cum_revenue, r.cum_accepts,
                    int(r.fallback));
    } else {
      std::snprintf(buf, sizeof buf, "%d,%ld,%s,%.10g,%d,%d,%.10g,%.10g,%d\n", r.rep, r.step,
                    ctx.c_str(), r.bid, r.y_c, r.y_s, r.regret, r.cum_regret, int(r.fallback));
    }
    out << buf;
  }
}

void write_summary_csv(std::ostream& out, const std::vector<MetricTrace>& traces) {
  out << "policy,reps,steps,avg_regret,avg_regret_se,avg_revenue,avg_revenue_se,"
         "accept_rate,accept_rate_se,carrier_rate,shipper_rate\n";
  char buf[512];
  for (const auto& t : traces) {
    std::vector<double> regret, revenue, accept, carrier, shipper;
    long steps = 0;
    for (const auto& r : t.reps) {
      regret.push_back(r.avg_regret);
      revenue.push_back(r.avg_revenue);
      accept.push_back(r.accept_rate);
      carrier.push_back(r.carrier_rate);
      shipper.push_back(r.shipper_rate);
      steps = std::max(steps, r.steps);
    }
    auto g = summarize(regret), v = summarize(revenue), a = summarize(accept);
    std::snprintf(buf, sizeof buf, "%s,%zu,%ld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  t.policy.c_str(), t.reps.size(), steps, g.mean, g.se, v.mean, v.se, a.mean,
                  a.se, summarize(carrier).mean, summarize(shipper).mean);
    out << buf;
  }
}

void emit_metrics(const std::vector<MetricTrace>& traces, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& t : traces) {
    std::ofstream f(dir / (t.policy + ".csv"), std::ios::binary);
    write_metric_csv(f, t);
    if (!f) throw std::runtime_error("cannot write " + (dir / (t.policy + ".csv")).string());
    if (!t.fleet_mode) continue;
    std::filesystem::create_directories(dir / "runlog");
    for (std::size_t rep = 0; rep < t.audits.size(); ++rep) {
      std::ofstream log(dir / "runlog" / (t.policy + "_rep" + std::to_string(rep) + ".csv"),
                        std::ios::binary);
      write_run_log_header(log);
      for (const auto& s : t.audits[rep].steps) write_run_log_row(log, s);
    }
  }
  std::ofstream s(dir / "summary.csv", std::ios::binary);
  write_summary_csv(s, traces);
  if (!s) throw std::runtime_error("cannot write summary.csv");
}

}  // namespace brokerage
