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

#include "brokerage/acceptance.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace brokerage {

void LookaheadConfig::validate(bool allow_test_thresholds) const {
  if (n_paths < 1) throw std::invalid_argument("lookahead needs at least one path");
  if (horizon < 1) throw std::invalid_argument("lookahead horizon must be at least one step");
  if (!(theta_accept >= 0.0)) throw std::invalid_argument("theta_accept must be nonnegative");
  if (theta_accept > 1.0 && !allow_test_thresholds) {
    throw std::invalid_argument("theta_accept above 1 rejects every load");
  }
  if (!(market_rate_per_mile >= 0.0)) {
    throw std::invalid_argument("market rate must be nonnegative");
  }
}

CoverageEstimate lookahead_path(const FleetState& base, const std::vector<PricedOffer>& offers,
                                const LookaheadConfig& config, const LookaheadInputs& in,
                                std::uint64_t path_seed) {
  CoverageEstimate out;
  if (offers.empty()) return out;
  FleetState s;
  s.t = base.t;
  s.drivers = base.drivers;
  s.loads = base.loads.pending_from(base.t);
  int last = base.t;
  std::vector<AcceptanceInput> first;
  for (const auto& o : offers) {
    first.push_back({o.load, o.revenue, true});
    last = std::max(last, o.load.pickup_at);
  }
  last = std::min(last, base.t + config.horizon);
  Rng rng(path_seed);
  std::vector<AcceptanceInput> arrivals = std::move(first);
  for (int step = base.t; step <= last; ++step) {
    DispatchResult d = solve_dispatch(s, in.vfa, in.model, in.contribution);
    advance_time(s, d.decision, arrivals, in.model);
    arrivals.clear();
    if (step == last) break;
    for (auto& load : in.booking.sample(step + 1, rng)) {
      double revenue = config.market_rate_per_mile * load.attributes.miles;
      arrivals.push_back({std::move(load), revenue, true});
    }
  }
  for (const auto& o : offers) {
    LedgerKey key = ledger_key(o.load.attributes, in.model.params);
    if (key.pickup > last || out.contains(key)) continue;
    const LedgerEntry* e = s.loads.find(key);
    if (!e || e->accepted == 0) continue;
    out[key] = static_cast<double>(e->served) / static_cast<double>(e->accepted);
  }
  return out;
}

CoverageEstimate run_lookahead(const FleetState& base, const std::vector<PricedOffer>& offers,
                               const LookaheadConfig& config, const LookaheadInputs& in,
                               std::span<const std::uint64_t> path_seeds, int threads) {
  config.validate(true);
  std::vector<CoverageEstimate> paths(path_seeds.size());
  int workers = std::max(1, std::min<int>(threads, static_cast<int>(path_seeds.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < path_seeds.size(); ++i) {
      paths[i] = lookahead_path(base, offers, config, in, path_seeds[i]);
    }
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < path_seeds.size(); i += workers) {
          paths[i] = lookahead_path(base, offers, config, in, path_seeds[i]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  std::map<LedgerKey, std::vector<double>> values;
  for (const auto& p : paths) {
    for (const auto& [key, rho] : p) values[key].push_back(rho);
  }
  CoverageEstimate mean;
  for (auto& [key, v] : values) {
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    mean[key] = sum / static_cast<double>(v.size());
  }
  return mean;
}

CoverageEstimate run_lookahead(const FleetState& base, const std::vector<PricedOffer>& offers,
                               const LookaheadConfig& config, const LookaheadInputs& in,
                               Rng& rng, int threads) {
  std::uint64_t root = rng();
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < config.n_paths; ++i) {
    seeds.push_back(derive_seed(root, {static_cast<std::uint64_t>(i)}));
  }
  return run_lookahead(base, offers, config, in, seeds, threads);
}

namespace {

bool passes(const CoverageEstimate& coverage, const LedgerKey& key, double theta) {
  auto it = coverage.find(key);
  double rho = it == coverage.end() ? 0.0 : it->second;
  return rho >= theta;
}

}  // namespace

std::map<LedgerKey, long> accept_loads(const std::vector<PricedOffer>& offers,
                                       const CoverageEstimate& coverage, double theta_accept,
                                       const FleetParams& params) {
  std::map<LedgerKey, long> offered;
  for (const auto& o : offers) ++offered[ledger_key(o.load.attributes, params)];
  std::map<LedgerKey, long> x;
  for (const auto& [key, count] : offered) {
    x[key] = passes(coverage, key, theta_accept) ? count : 0;
  }
  return x;
}

std::vector<bool> accepted_offers(const std::vector<PricedOffer>& offers,
                                  const CoverageEstimate& coverage, double theta_accept,
                                  const FleetParams& params) {
  std::vector<bool> out;
  out.reserve(offers.size());
  for (const auto& o : offers) {
    out.push_back(passes(coverage, ledger_key(o.load.attributes, params), theta_accept));
  }
  return out;
}

void write_coverage_csv(std::ostream& out, const CoverageEstimate& coverage) {
  out << "t',origin,destination,equipment,miles_bucket,rho_bar\n";
  char buf[64];
  for (const auto& [k, rho] : coverage) {
    std::snprintf(buf, sizeof buf, "%.10g", rho);
    out << k.pickup << ',' << k.origin << ',' << k.destination << ','
        << equipment_name(k.equipment) << ',' << k.miles_bucket << ',' << buf << '\n';
  }
}

LookaheadConfig lookahead_config_from(const KeyValueConfig& config, bool allow_test_thresholds,
                                      const std::string& prefix) {
  LookaheadConfig c;
  c.n_paths = static_cast<int>(config.get_int(prefix + "n_paths", c.n_paths));
  c.horizon = static_cast<int>(config.get_int(prefix + "horizon", c.horizon));
  c.theta_accept = config.get_double(prefix + "theta_accept", c.theta_accept);
  c.market_rate_per_mile = config.get_double(prefix + "market_rate_per_mile", c.market_rate_per_mile);
  try {
    c.validate(allow_test_thresholds);
  } catch (const std::invalid_argument& e) {
    int line = config.line_of(prefix + "theta_accept");
    throw ConfigError(line, std::string("acceptance: ") + e.what());
  }
  return c;
}

}  // namespace brokerage
