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

#ifndef BROKERAGE_HARNESS_HPP_
#define BROKERAGE_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "brokerage/acceptance.hpp"
#include "brokerage/belief.hpp"
#include "brokerage/booking.hpp"
#include "brokerage/choice_model.hpp"
#include "brokerage/config.hpp"
#include "brokerage/dispatch.hpp"
#include "brokerage/fleet.hpp"
#include "brokerage/policies.hpp"

namespace brokerage {

enum class PolicyKind { KG, Exploit, TS, OptTS, EstOpt, MeanPrice };

std::string_view policy_name(PolicyKind kind);
// kg | exploit | ts | opt-ts | est-opt | mean-price
PolicyKind parse_policy(std::string_view name);

struct PolicySpec {
  PolicyKind kind = PolicyKind::KG;
  // Unset: constant 100.
  std::optional<HorizonWeight> tau;
  bool tau_remaining = false;  // N - n with N the run's number of bids
  long refresh_interval = 0;  // Est-Opt; 0 = the resample base C, < 0 = never
  double fallback_price = 2.0;  // Mean-Price without any accepted history
};

// Prior over model weights. Carrier curves rise and shipper curves fall in
// p: the per-equipment price slopes are clipped away from zero with the
// right sign.
struct PriorConfig {
  double carrier_intercept_mean = -3.0;
  double carrier_intercept_sd = 0.5;
  double carrier_slope_mean = 2.0;
  double carrier_slope_sd = 0.5;
  double shipper_intercept_mean = 5.0;
  double shipper_intercept_sd = 0.5;
  double shipper_slope_mean = -2.0;
  double shipper_slope_sd = 0.5;
  double min_abs_slope = 0.25;
  double indicator_sd = 0.4;
  double equipment_sd = 0.2;
  double min_dist_sd = 0.3;
  double daily_sd = 0.02;
  double price_daily_sd = 0.02;
  double price_miles_sd = 0.0005;
  // Price-level shifts (price units) shared by both sides: a region or a
  // short haul that moves the carrier curve right moves the shipper curve
  // right as well.
  double region_shift_sd = 0.3;
  double short_haul_shift = 0.3;
};

CandidateModel draw_model(const FeatureRegistry& registry, const PriorConfig& prior, Rng& rng);

struct OraclePrice {
  double price = 0.0;
  std::size_t index = 0;
  double value = 0.0;
};

// Grid argmax of p f(b, p; truth); lowest index on ties.
OraclePrice oracle_price(const CandidateModel& truth, const FeatureRegistry& registry,
                         const LoadAttributes& b, const PriceGrid& grid);

struct StepRecord {
  int rep = 0;
  long step = 0;
  int batch = -1;  // fleet mode only
  RegionId origin = 0;
  RegionId destination = 0;
  Equipment equipment = Equipment::DryVan;
  double bid = 0.0;
  int y_c = 0;  // 1 accept, 0 reject
  int y_s = 0;
  double regret = 0.0;  // bandit mode
  double cum_regret = 0.0;
  double cum_revenue = 0.0;
  long cum_accepts = 0;
  bool fallback = false;  // a configured fallback price was used
};

struct RepSummary {
  double avg_regret = 0.0;   // R(N) / N
  double avg_revenue = 0.0;  // G(N) / N
  double accept_rate = 0.0;  // P(N) / N
  double carrier_rate = 0.0;
  double shipper_rate = 0.0;
  long steps = 0;
  int resamples = 0;
  // Most probable candidate right before each resample (bandit mode).
  std::vector<CandidateModel> pre_resample_map;
};

struct FleetAudit {
  long max_driver_deviation = 0;  // |drivers(t) - drivers(0)| over the run
  long ledger_mismatches = 0;     // steps where accepted != served+expired+pending
  long accepted = 0;
  long served = 0;
  long expired = 0;
  long pending = 0;
  double penalty = 0.0;
  double carrier_revenue = 0.0;
  std::vector<StepReport> steps;
};

struct MetricTrace {
  std::string policy;
  bool fleet_mode = false;
  std::vector<StepRecord> records;
  std::vector<RepSummary> reps;
  std::vector<FleetAudit> audits;  // fleet mode, one per rep
};

struct SummaryStat {
  double mean = 0.0;
  double se = 0.0;
};
// Mean and standard error (sample sd / sqrt(n)); se = 0 for one value.
SummaryStat summarize(const std::vector<double>& values);

struct BanditRunConfig {
  long N = 3000;
  int K = 5;
  long C = 300;
  PriceGrid grid = PriceGrid::uniform(0.0, 4.0, 80);
  std::vector<PolicySpec> policies;
  int reps = 20;
  std::uint64_t seed = 1;
  FeatureRegistry registry;
  CandidateModel truth;
  std::vector<LoadAttributes> contexts;  // cycled when shorter than N
  // Past loads priced near a posted rate with little variation; each rep
  // draws its own prices and responses on them. They seed Mean-Price and
  // the first Est-Opt fit.
  std::vector<LoadAttributes> history_contexts;
  double history_rate = 2.0;
  double history_rate_sd = 0.2;
  // Est-Opt starts from the first initial candidate unless this is set.
  bool est_opt_uses_history = false;
  PriorConfig prior;
  BaggingConfig bagging;
  bool record_steps = true;
  int threads = 1;

  void validate() const;
};

// A ready-to-run bandit setup: synthetic network and booking stream, a
// registry built from the stream with the >15-observations rule, and a
// truth drawn from the prior.
struct BanditScenario {
  Network network;
  BookingConfig booking;
  BanditRunConfig run;
};
BanditScenario make_bandit_scenario(const KeyValueConfig& config, std::uint64_t seed);

std::vector<MetricTrace> run_bandit_experiment(const BanditRunConfig& config);

struct FleetRunConfig {
  int batches = 56;
  int K = 5;
  long C = 100;
  PriceGrid grid = PriceGrid::uniform(0.0, 4.0, 80);
  std::vector<PolicySpec> policies;
  int reps = 10;
  std::uint64_t seed = 1;
  FleetModel model;
  BookingConfig booking;
  ContributionParams contribution;
  LookaheadConfig lookahead;
  ValueFunction initial_vfa;
  long n_drivers = 50;
  double team_fraction = 0.2;
  std::optional<ResourceVector> drivers;  // overrides n_drivers
  int vfa_training_runs = 3;
  FeatureRegistry registry;
  CandidateModel shipper_truth;  // only beta is used
  // Replayed demand; when empty each rep samples its own from the booking
  // config.
  std::vector<OfferedLoad> trace;
  PriorConfig prior;
  BaggingConfig bagging;
  bool record_steps = true;
  int threads = 1;

  void validate() const;
};

FleetRunConfig make_fleet_config(const KeyValueConfig& config, std::uint64_t seed,
                                 bool allow_test_thresholds = false);

std::vector<MetricTrace> run_fleet_experiment(const FleetRunConfig& config);

// One CSV per policy plus summary.csv; fleet mode also writes a run log
// per policy and rep under runlog/.
void emit_metrics(const std::vector<MetricTrace>& traces, const std::filesystem::path& dir);
void write_metric_csv(std::ostream& out, const MetricTrace& trace);
void write_summary_csv(std::ostream& out, const std::vector<MetricTrace>& traces);

std::vector<PolicySpec> policies_from(const KeyValueConfig& config, const std::string& prefix,
                                      const std::vector<std::string>& default_names);

}  // namespace brokerage

#endif  // BROKERAGE_HARNESS_HPP_
