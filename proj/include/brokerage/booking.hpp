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

#ifndef BROKERAGE_BOOKING_HPP_
#define BROKERAGE_BOOKING_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "brokerage/choice_model.hpp"
#include "brokerage/config.hpp"
#include "brokerage/network.hpp"
#include "brokerage/random.hpp"

namespace brokerage {

inline constexpr int kMaxLagDays = 14;

struct Lane {
  RegionId origin = 0;
  RegionId destination = 0;
  double weight = 0.0;
  double miles = 0.0;
};

struct BookingConfig {
  std::vector<RegionId> regions;
  std::vector<Lane> lanes;
  std::map<RegionId, double> outbound_intensity;  // loads per step
  std::vector<double> lag_distribution;           // P(lag = d days), d = 0..14
  std::array<double, 7> dow_multipliers{1, 1, 1, 1, 1, 1, 1};
  std::array<double, kEquipmentTypes> equipment_mix{1, 0, 0, 0, 0};
  // Optional per-week multipliers (week = day / 7, cycled); empty = off.
  std::vector<double> week_multipliers;
  int step_hours = 6;

  // Throws std::invalid_argument on a broken invariant.
  void validate() const;
  int steps_per_day() const { return 24 / step_hours; }
  int max_lag_steps() const { return kMaxLagDays * steps_per_day(); }
  // Expected loads offered at step t.
  double expected_offers(int t) const;
  // Offers out of `origin` per day spread over its lanes by weight.
  double lane_daily_load(RegionId origin, RegionId destination) const;
  double region_daily_outbound(RegionId region) const;
  const Lane* find_lane(RegionId origin, RegionId destination) const;
};

struct OfferedLoad {
  LoadAttributes attributes;
  int offered_at = 0;
  int pickup_at = 0;
  int lag_days = 0;
};

// Truncated geometric law on {0, ..., 14} days with P(lag >= 4 days) = 0.5.
std::vector<double> default_lag_distribution();

// Offers called in during step t. Counts per region are Poisson with mean
// outbound_intensity x day-of-week (x week) multiplier; regions are visited
// in ascending id order so the stream is reproducible. A lag of d days puts
// the pickup d days later; same-day loads are picked up next step.
std::vector<OfferedLoad> sample_offers(const BookingConfig& config, int t, Rng& rng);
// Same, on a stream derived from (seed, t).
std::vector<OfferedLoad> sample_offers(const BookingConfig& config, int t,
                                       std::uint64_t seed);

// Offers for steps [0, steps).
std::vector<OfferedLoad> sample_horizon(const BookingConfig& config, int steps,
                                        std::uint64_t seed);

struct LaneShare {
  RegionId origin = 0;
  RegionId destination = 0;
  double configured = 0.0;
  double sampled = 0.0;
  long count = 0;
};

struct ConsistencyReport {
  std::vector<LaneShare> lanes;
  std::map<RegionId, long> outbound_counts;
  double max_deviation = 0.0;
};

// Per-origin sampled lane split against the configured lane weights.
ConsistencyReport aggregate_consistency_report(const std::vector<OfferedLoad>& samples,
                                               const BookingConfig& config);

// `regions` ids on a synthetic network, lanes between every ordered pair
// with weight proportional to destination volume and decaying with
// distance, and `loads_per_step` offers per step split by origin volume.
BookingConfig make_synthetic_booking(const Network& network, double loads_per_step);

// Reads a [network] block: regions, seed, width, height.
Network network_from_config(const KeyValueConfig& config,
                            const std::string& prefix = "network.");

// Precomputed sampling tables for one config; cheaper than sample_offers
// when many steps are drawn from the same config.
class OfferSampler {
 public:
  explicit OfferSampler(const BookingConfig& config);
  std::vector<OfferedLoad> sample(int t, Rng& rng) const;
  const BookingConfig& config() const { return config_; }

 private:
  struct Origin {
    RegionId region = 0;
    double intensity = 0.0;
    double daily_outbound = 0.0;
    std::vector<double> cumulative;  // over `lanes`
    std::vector<const Lane*> lanes;
    std::vector<double> lane_daily_load;
  };
  BookingConfig config_;
  std::vector<Origin> origins_;
  std::map<RegionId, double> daily_outbound_;
  std::vector<double> lag_cumulative_;
  std::vector<double> equipment_cumulative_;
};

// Reads a [booking] block:
//   loads_per_step, step_hours, lag_distribution (15 values),
//   dow_multipliers (7), week_multipliers, equipment_mix (5)
// and optional explicit lanes `lane.<origin>.<destination> = weight, miles`
// with intensities `intensity.<region> = loads per step`.
BookingConfig booking_config_from(const KeyValueConfig& config, const Network& network,
                                  const std::string& prefix = "booking.");

// CSV with header t,t',origin,destination,equipment,miles.
void write_trace_csv(std::ostream& out, const std::vector<OfferedLoad>& loads);
// Lane statistics are filled in from `config`. Throws ConfigError with the
// line number on malformed rows.
std::vector<OfferedLoad> read_trace_csv(std::istream& in, const BookingConfig& config);

}  // namespace brokerage

#endif  // BROKERAGE_BOOKING_HPP_
