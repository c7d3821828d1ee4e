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

#include "brokerage/booking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace brokerage {

namespace {

std::size_t pick(const std::vector<double>& cumulative, double u) {
  // The first entry whose running sum exceeds u * total always has positive
  // width.
  double total = cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u * total);
  if (it == cumulative.end()) it = std::lower_bound(cumulative.begin(), cumulative.end(), total);
  return static_cast<std::size_t>(it - cumulative.begin());
}

std::vector<double> running_sum(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  std::partial_sum(w.begin(), w.end(), c.begin());
  return c;
}

}  // namespace

void BookingConfig::validate() const {
  if (step_hours <= 0 || 24 % step_hours != 0) {
    throw std::invalid_argument("step_hours must divide 24");
  }
  if (lag_distribution.size() != kMaxLagDays + 1) {
    throw std::invalid_argument("lag distribution needs 15 entries (0..14 days)");
  }
  double total = 0.0;
  for (double p : lag_distribution) {
    if (!(p >= 0.0)) throw std::invalid_argument("lag probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("lag distribution must sum to 1");
  for (double m : dow_multipliers) {
    if (!(m >= 0.0)) throw std::invalid_argument("day-of-week multipliers must be nonnegative");
  }
  for (double m : week_multipliers) {
    if (!(m >= 0.0)) throw std::invalid_argument("week multipliers must be nonnegative");
  }
  double mix = 0.0;
  for (double e : equipment_mix) {
    if (!(e >= 0.0)) throw std::invalid_argument("equipment mix must be nonnegative");
    mix += e;
  }
  if (!(mix > 0.0)) throw std::invalid_argument("equipment mix is all zero");
  auto known = [&](RegionId r) {
    return std::find(regions.begin(), regions.end(), r) != regions.end();
  };
  bool any = false;
  for (const Lane& lane : lanes) {
    if (!known(lane.origin) || !known(lane.destination)) {
      throw std::invalid_argument("lane uses a region outside the region list");
    }
    if (!(lane.weight >= 0.0)) throw std::invalid_argument("lane weights must be nonnegative");
    if (!(lane.miles > 0.0)) throw std::invalid_argument("lane miles must be positive");
    any = any || lane.weight > 0.0;
  }
  if (!any) throw std::invalid_argument("at least one lane weight must be positive");
  for (const auto& [region, intensity] : outbound_intensity) {
    if (!known(region)) throw std::invalid_argument("intensity for an unknown region");
    if (!(intensity >= 0.0)) throw std::invalid_argument("intensities must be nonnegative");
    if (intensity == 0.0) continue;
    bool has_lane = std::any_of(lanes.begin(), lanes.end(), [&](const Lane& l) {
      return l.origin == region && l.weight > 0.0;
    });
    if (!has_lane) {
      throw std::invalid_argument("region " + std::to_string(region) +
                                  " has outbound intensity but no lanes");
    }
  }
}

namespace {

double step_multiplier(const BookingConfig& c, int t) {
  int day = t / c.steps_per_day();
  double m = c.dow_multipliers[day % 7];
  if (!c.week_multipliers.empty()) {
    m *= c.week_multipliers[(day / 7) % c.week_multipliers.size()];
  }
  return m;
}

}  // namespace

double BookingConfig::expected_offers(int t) const {
  double total = 0.0;
  for (const auto& [region, intensity] : outbound_intensity) total += intensity;
  return total * step_multiplier(*this, t);
}

double BookingConfig::region_daily_outbound(RegionId region) const {
  auto it = outbound_intensity.find(region);
  return it == outbound_intensity.end() ? 0.0 : it->second * steps_per_day();
}

double BookingConfig::lane_daily_load(RegionId origin, RegionId destination) const {
  double total = 0.0, own = 0.0;
  for (const Lane& lane : lanes) {
    if (lane.origin != origin) continue;
    total += lane.weight;
    if (lane.destination == destination) own += lane.weight;
  }
  if (total <= 0.0) return 0.0;
  return region_daily_outbound(origin) * own / total;
}

const Lane* BookingConfig::find_lane(RegionId origin, RegionId destination) const {
  for (const Lane& lane : lanes) {
    if (lane.origin == origin && lane.destination == destination) return &lane;
  }
  return nullptr;
}

std::vector<double> default_lag_distribution() {
  // Tail mass P(lag >= 4) of the truncated geometric rho^d is increasing in
  // rho; bisect for 1/2.
  auto law = [](double rho) {
    std::vector<double> p(kMaxLagDays + 1);
    double w = 1.0;
    for (double& x : p) {
      x = w;
      w *= rho;
    }
    double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& x : p) x /= s;
    return p;
  };
  auto tail = [&](double rho) {
    auto p = law(rho);
    return std::accumulate(p.begin() + 4, p.end(), 0.0);
  };
  double lo = 1e-6, hi = 1.0 - 1e-12;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (tail(mid) < 0.5 ? lo : hi) = mid;
  }
  return law(0.5 * (lo + hi));
}

OfferSampler::OfferSampler(const BookingConfig& config) : config_(config) {
  config_.validate();
  std::vector<RegionId> regions = config_.regions;
  std::sort(regions.begin(), regions.end());
  for (RegionId r : regions) daily_outbound_[r] = config_.region_daily_outbound(r);
  for (RegionId r : regions) {
    auto it = config_.outbound_intensity.find(r);
    if (it == config_.outbound_intensity.end() || it->second <= 0.0) continue;
    Origin o;
    o.region = r;
    o.intensity = it->second;
    o.daily_outbound = daily_outbound_[r];
    std::vector<double> w;
    for (const Lane& lane : config_.lanes) {
      if (lane.origin != r || lane.weight <= 0.0) continue;
      o.lanes.push_back(&lane);
      w.push_back(lane.weight);
    }
    o.cumulative = running_sum(w);
    for (std::size_t j = 0; j < o.lanes.size(); ++j) {
      o.lane_daily_load.push_back(o.daily_outbound * w[j] / o.cumulative.back());
    }
    origins_.push_back(std::move(o));
  }
  lag_cumulative_ = running_sum(config_.lag_distribution);
  equipment_cumulative_ = running_sum(
      std::vector<double>(config_.equipment_mix.begin(), config_.equipment_mix.end()));
}

std::vector<OfferedLoad> OfferSampler::sample(int t, Rng& rng) const {
  std::vector<OfferedLoad> out;
  double mult = step_multiplier(config_, t);
  int spd = config_.steps_per_day();
  for (const Origin& o : origins_) {
    double mean = o.intensity * mult;
    if (mean <= 0.0) continue;
    long count = std::poisson_distribution<long>(mean)(rng);
    for (long i = 0; i < count; ++i) {
      std::size_t j = pick(o.cumulative, uniform01(rng));
      const Lane& lane = *o.lanes[j];
      int lag = static_cast<int>(pick(lag_cumulative_, uniform01(rng)));
      int eq = static_cast<int>(pick(equipment_cumulative_, uniform01(rng)));
      OfferedLoad load;
      load.offered_at = t;
      load.lag_days = lag;
      load.pickup_at = t + std::max(1, lag * spd);
      LoadAttributes& b = load.attributes;
      b.origin = lane.origin;
      b.destination = lane.destination;
      b.equipment = static_cast<Equipment>(eq);
      b.miles = lane.miles;
      b.call_in = t;
      b.pickup = load.pickup_at;
      b.lane_daily_load = o.lane_daily_load[j];
      auto d = daily_outbound_.find(lane.destination);
      b.dest_daily_demand = d == daily_outbound_.end() ? 0.0 : d->second;
      out.push_back(load);
    }
  }
  return out;
}

std::vector<OfferedLoad> sample_offers(const BookingConfig& config, int t, Rng& rng) {
  return OfferSampler(config).sample(t, rng);
}

std::vector<OfferedLoad> sample_offers(const BookingConfig& config, int t,
                                       std::uint64_t seed) {
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
  return sample_offers(config, t, rng);
}

std::vector<OfferedLoad> sample_horizon(const BookingConfig& config, int steps,
                                        std::uint64_t seed) {
  OfferSampler sampler(config);
  std::vector<OfferedLoad> all;
  for (int t = 0; t < steps; ++t) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    auto batch = sampler.sample(t, rng);
    all.insert(all.end(), batch.begin(), batch.end());
  }
  return all;
}

ConsistencyReport aggregate_consistency_report(const std::vector<OfferedLoad>& samples,
                                               const BookingConfig& config) {
  ConsistencyReport report;
  std::map<std::pair<RegionId, RegionId>, long> counts;
  for (const auto& s : samples) {
    ++counts[{s.attributes.origin, s.attributes.destination}];
    ++report.outbound_counts[s.attributes.origin];
  }
  std::map<RegionId, double> origin_weight;
  for (const Lane& lane : config.lanes) origin_weight[lane.origin] += lane.weight;
  for (const Lane& lane : config.lanes) {
    LaneShare row;
    row.origin = lane.origin;
    row.destination = lane.destination;
    double w = origin_weight[lane.origin];
    row.configured = w > 0.0 ? lane.weight / w : 0.0;
    row.count = counts[{lane.origin, lane.destination}];
    long out = report.outbound_counts[lane.origin];
    if (out == 0) {
      report.lanes.push_back(row);
      continue;
    }
    row.sampled = static_cast<double>(row.count) / static_cast<double>(out);
    report.max_deviation = std::max(report.max_deviation, std::abs(row.sampled - row.configured));
    report.lanes.push_back(row);
  }
  return report;
}

BookingConfig make_synthetic_booking(const Network& network, double loads_per_step) {
  if (!(loads_per_step >= 0.0)) throw std::invalid_argument("loads_per_step must be nonnegative");
  BookingConfig c;
  double total_weight = 0.0;
  for (const Region& r : network.regions()) {
    c.regions.push_back(r.id);
    total_weight += r.weight;
  }
  for (const Region& o : network.regions()) {
    c.outbound_intensity[o.id] = loads_per_step * o.weight / total_weight;
    for (const Region& d : network.regions()) {
      if (d.id == o.id) continue;
      double miles = network.miles(o.id, d.id);
      c.lanes.push_back({o.id, d.id, d.weight * std::exp(-miles / 800.0), miles});
    }
  }
  if (c.lanes.empty()) {
    // A one-region network still needs a lane; make it a local haul.
    RegionId r = network.regions().front().id;
    c.lanes.push_back({r, r, 1.0, 100.0});
  }
  c.lag_distribution = default_lag_distribution();
  c.equipment_mix = {0.6, 0.15, 0.15, 0.05, 0.05};
  return c;
}

Network network_from_config(const KeyValueConfig& config, const std::string& prefix) {
  long n = config.get_int(prefix + "regions", 20);
  if (n < 1) throw ConfigError(config.line_of(prefix + "regions"), "network needs a region");
  std::uint64_t seed = config.get_uint64(prefix + "seed", 7);
  double width = config.get_double(prefix + "width", 1500.0);
  double height = config.get_double(prefix + "height", 1000.0);
  if (!(width > 0.0) || !(height > 0.0)) {
    throw ConfigError(config.line_of(prefix + "width"), "network extent must be positive");
  }
  return make_synthetic_network(static_cast<int>(n), seed, width, height);
}

namespace {

template <std::size_t N>
void read_array(const KeyValueConfig& config, const std::string& key,
                std::array<double, N>& out) {
  if (!config.has(key)) return;
  auto v = config.get_doubles(key);
  if (v.size() != N) {
    throw ConfigError(config.line_of(key),
                      key + " needs " + std::to_string(N) + " values");
  }
  std::copy(v.begin(), v.end(), out.begin());
}

std::pair<RegionId, RegionId> lane_ids(const KeyValueConfig& config, const std::string& key,
                                       const std::string& rest) {
  auto parts = split_list(rest, '.');
  if (parts.size() != 2) throw ConfigError(config.line_of(key), "lane key must be lane.<o>.<d>");
  try {
    return {std::stoi(parts[0]), std::stoi(parts[1])};
  } catch (const std::exception&) {
    throw ConfigError(config.line_of(key), "lane key must name two region ids");
  }
}

}  // namespace

BookingConfig booking_config_from(const KeyValueConfig& config, const Network& network,
                                  const std::string& prefix) {
  double lps = config.get_double(prefix + "loads_per_step", 15.0);
  BookingConfig c = make_synthetic_booking(network, lps);
  c.step_hours = static_cast<int>(config.get_int(prefix + "step_hours", 6));
  if (config.has(prefix + "lag_distribution")) {
    c.lag_distribution = config.get_doubles(prefix + "lag_distribution");
  }
  read_array(config, prefix + "dow_multipliers", c.dow_multipliers);
  read_array(config, prefix + "equipment_mix", c.equipment_mix);
  if (config.has(prefix + "week_multipliers")) {
    c.week_multipliers = config.get_doubles(prefix + "week_multipliers");
  }
  auto lane_keys = config.keys_with_prefix(prefix + "lane.");
  if (!lane_keys.empty()) {
    c.lanes.clear();
    for (const auto& key : lane_keys) {
      auto [o, d] = lane_ids(config, key, key.substr(prefix.size() + 5));
      auto v = config.get_doubles(key);
      if (v.size() != 2) throw ConfigError(config.line_of(key), "lane needs weight, miles");
      if (!network.contains(o) || !network.contains(d)) {
        throw ConfigError(config.line_of(key), "lane uses a region outside the network");
      }
      c.lanes.push_back({o, d, v[0], v[1]});
    }
  }
  auto intensity_keys = config.keys_with_prefix(prefix + "intensity.");
  if (!intensity_keys.empty()) {
    c.outbound_intensity.clear();
    for (const auto& key : intensity_keys) {
      RegionId r;
      try {
        r = std::stoi(key.substr(prefix.size() + 10));
      } catch (const std::exception&) {
        throw ConfigError(config.line_of(key), "intensity key must name a region id");
      }
      c.outbound_intensity[r] = config.get_double(key);
    }
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, std::string("booking: ") + e.what());
  }
  return c;
}

void write_trace_csv(std::ostream& out, const std::vector<OfferedLoad>& loads) {
  out << "t,t',origin,destination,equipment,miles\n";
  char buf[64];
  for (const auto& l : loads) {
    std::snprintf(buf, sizeof buf, "%.17g", l.attributes.miles);
    out << l.offered_at << ',' << l.pickup_at << ',' << l.attributes.origin << ','
        << l.attributes.destination << ',' << equipment_name(l.attributes.equipment) << ','
        << buf << '\n';
  }
}

std::vector<OfferedLoad> read_trace_csv(std::istream& in, const BookingConfig& config) {
  std::vector<OfferedLoad> loads;
  std::string line;
  int number = 0;
  int spd = config.steps_per_day();
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (number == 1) {
      if (trim(line) != "t,t',origin,destination,equipment,miles") {
        throw ConfigError(number, "unexpected trace header");
      }
      continue;
    }
    if (trim(line).empty()) continue;
    auto f = split_list(line, ',');
    if (f.size() != 6) throw ConfigError(number, "trace rows need 6 fields");
    OfferedLoad l;
    try {
      l.offered_at = std::stoi(f[0]);
      l.pickup_at = std::stoi(f[1]);
      l.attributes.origin = std::stoi(f[2]);
      l.attributes.destination = std::stoi(f[3]);
      l.attributes.equipment = parse_equipment(f[4]);
      l.attributes.miles = std::stod(f[5]);
    } catch (const std::exception& e) {
      throw ConfigError(number, std::string("bad trace row: ") + e.what());
    }
    int lag = l.pickup_at - l.offered_at;
    if (lag < 0 || lag > config.max_lag_steps() || !(l.attributes.miles > 0.0)) {
      throw ConfigError(number, "trace row outside the lag support or with nonpositive miles");
    }
    l.lag_days = lag / spd;
    l.attributes.call_in = l.offered_at;
    l.attributes.pickup = l.pickup_at;
    l.attributes.lane_daily_load =
        config.lane_daily_load(l.attributes.origin, l.attributes.destination);
    l.attributes.dest_daily_demand = config.region_daily_outbound(l.attributes.destination);
    loads.push_back(l);
  }
  return loads;
}

}  // namespace brokerage
