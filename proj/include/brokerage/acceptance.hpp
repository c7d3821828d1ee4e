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

#ifndef BROKERAGE_ACCEPTANCE_HPP_
#define BROKERAGE_ACCEPTANCE_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "brokerage/booking.hpp"
#include "brokerage/config.hpp"
#include "brokerage/dispatch.hpp"
#include "brokerage/fleet.hpp"
#include "brokerage/random.hpp"

namespace brokerage {

struct LookaheadConfig {
  int n_paths = 20;
  int horizon = 56;  // steps
  double theta_accept = 0.8;
  // Per-mile revenue assumed for sampled future loads.
  double market_rate_per_mile = 2.0;

  // theta_accept > 1 is rejected unless `allow_test_thresholds`.
  void validate(bool allow_test_thresholds = false) const;
};

// An offered load priced at the broker's bid.
struct PricedOffer {
  OfferedLoad load;
  double revenue = 0.0;
};

using CoverageEstimate = std::map<LedgerKey, double>;

struct LookaheadInputs {
  const FleetModel& model;
  const ContributionParams& contribution;
  const OfferSampler& booking;
  const ValueFunction& vfa;
};

// Coverage of one sampled future: served / accepted units for each key of
// `offers`. Keys the path never reaches are left out.
CoverageEstimate lookahead_path(const FleetState& base, const std::vector<PricedOffer>& offers,
                                const LookaheadConfig& config, const LookaheadInputs& in,
                                std::uint64_t path_seed);

// Mean of the per-path estimates over the paths that define each key.
// Values are sorted before summing, so the result does not depend on the
// order of `path_seeds`. Paths run on up to `threads` workers.
CoverageEstimate run_lookahead(const FleetState& base, const std::vector<PricedOffer>& offers,
                               const LookaheadConfig& config, const LookaheadInputs& in,
                               std::span<const std::uint64_t> path_seeds, int threads = 1);
// Path seeds derived from one draw of `rng`.
CoverageEstimate run_lookahead(const FleetState& base, const std::vector<PricedOffer>& offers,
                               const LookaheadConfig& config, const LookaheadInputs& in,
                               Rng& rng, int threads = 1);

// Per key: every offered unit if rho-bar >= theta, else none. Keys missing
// from the estimate count as rho-bar = 0.
std::map<LedgerKey, long> accept_loads(const std::vector<PricedOffer>& offers,
                                       const CoverageEstimate& coverage, double theta_accept,
                                       const FleetParams& params);
// The same rule per offer.
std::vector<bool> accepted_offers(const std::vector<PricedOffer>& offers,
                                  const CoverageEstimate& coverage, double theta_accept,
                                  const FleetParams& params);

// t',origin,destination,equipment,miles_bucket,rho_bar
void write_coverage_csv(std::ostream& out, const CoverageEstimate& coverage);

LookaheadConfig lookahead_config_from(const KeyValueConfig& config, bool allow_test_thresholds,
                                      const std::string& prefix = "acceptance.");

}  // namespace brokerage

#endif  // BROKERAGE_ACCEPTANCE_HPP_
