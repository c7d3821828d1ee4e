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

#ifndef BROKERAGE_CHOICE_MODEL_HPP_
#define BROKERAGE_CHOICE_MODEL_HPP_

#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace brokerage {

using RegionId = int;

enum class Equipment : int { DryVan = 0, FlatBed, Refrigerated, RGN, StepDeck };
inline constexpr int kEquipmentTypes = 5;

std::string_view equipment_name(Equipment e);
Equipment parse_equipment(std::string_view name);

// Loads of at most this many miles set the MinDist indicator.
inline constexpr double kMinDistMiles = 300.0;

// Context of one offered load. `call_in` and `pickup` are simulator steps.
struct LoadAttributes {
  RegionId origin = 0;
  RegionId destination = 0;
  Equipment equipment = Equipment::DryVan;
  double miles = 1.0;
  int call_in = 0;
  int pickup = 0;
  double lane_daily_load = 0.0;
  double dest_daily_demand = 0.0;
};

// Throws std::invalid_argument on nonpositive miles, a negative lag or a lag
// longer than `max_lag_steps`.
void validate_load(const LoadAttributes& b, int max_lag_steps);

enum class Side { Carrier, Shipper };

std::string_view side_name(Side side);

// Offsets of each feature block for one side; -1 marks a block the side
// does not have. Carrier layout:
//   intercept, DailyLoad, DestDailyDemand, MinDist, origin indicators,
//   destination indicators, 5 equipment intercepts, 5 equipment x p,
//   p*Miles*MinDist, p*DailyLoad.
// Shipper layout:
//   intercept, MinDist, origin indicators, destination indicators,
//   5 equipment x p, p*Miles*MinDist.
struct FeatureLayout {
  int intercept = -1;
  int daily_load = -1;
  int dest_daily_demand = -1;
  int min_dist = -1;
  int origin = -1;
  int destination = -1;
  int equipment = -1;
  int equipment_price = -1;
  int price_miles_min_dist = -1;
  int price_daily_load = -1;
  int dim = 0;
};

// Which origins and destinations get their own indicator column. Regions
// without one contribute an all-zero indicator block.
class FeatureRegistry {
 public:
  FeatureRegistry() = default;
  // Lists are sorted; a repeated region throws std::invalid_argument.
  FeatureRegistry(std::vector<RegionId> origins, std::vector<RegionId> destinations);

  const std::vector<RegionId>& origins() const { return origins_; }
  const std::vector<RegionId>& destinations() const { return destinations_; }

  std::optional<int> origin_slot(RegionId region) const;
  std::optional<int> destination_slot(RegionId region) const;

  const FeatureLayout& layout(Side side) const;
  int carrier_dim() const { return carrier_.dim; }
  int shipper_dim() const { return shipper_.dim; }
  int dim(Side side) const { return layout(side).dim; }

  // Column names in layout order, e.g. "DailyLoad", "I_O_12",
  // "p*I_T_DryVan", "p*Miles*MinDist".
  std::vector<std::string> feature_names(Side side) const;

  bool operator==(const FeatureRegistry& other) const {
    return origins_ == other.origins_ && destinations_ == other.destinations_;
  }

 private:
  std::vector<RegionId> origins_;
  std::vector<RegionId> destinations_;
  std::map<RegionId, int> origin_index_;
  std::map<RegionId, int> destination_index_;
  FeatureLayout carrier_;
  FeatureLayout shipper_;
};

// A region gets an indicator iff its count exceeds `threshold`.
FeatureRegistry build_feature_registry(const std::map<RegionId, int>& origin_counts,
                                       const std::map<RegionId, int>& destination_counts,
                                       int threshold = 15);
FeatureRegistry build_feature_registry(const std::map<RegionId, int>& counts,
                                       int threshold = 15);

struct FeatureVector {
  std::vector<double> values;
  Side side = Side::Carrier;
};

struct WeightVector {
  std::vector<double> weights;
  Side side = Side::Carrier;

  static WeightVector zeros(const FeatureRegistry& registry, Side side);
  bool operator==(const WeightVector&) const = default;
};

FeatureVector carrier_features(const FeatureRegistry& registry, const LoadAttributes& b,
                               double price);
FeatureVector shipper_features(const FeatureRegistry& registry, const LoadAttributes& b,
                               double price);
FeatureVector features(const FeatureRegistry& registry, const LoadAttributes& b,
                       double price, Side side);

// x(b, p) = base + p * slope; every feature is affine in the bid.
struct FeatureLine {
  FeatureVector base;
  FeatureVector slope;
};
FeatureLine feature_line(const FeatureRegistry& registry, const LoadAttributes& b, Side side);

// w.x; throws std::invalid_argument when sides or lengths disagree.
double dot(const WeightVector& w, const FeatureVector& x);

// 1 / (1 + exp(-h)) with the argument clamped to [-700, 700].
double sigmoid(double h);
// log(sigmoid(h)) without clamping.
double log_sigmoid(double h);

double accept_prob(const WeightVector& w, const FeatureVector& x);

struct CandidateModel {
  WeightVector alpha;  // carrier
  WeightVector beta;   // shipper

  bool operator==(const CandidateModel&) const = default;
};

// f(b, p; theta) = f^c(b, p; alpha) * f^s(b, p; beta).
double joint_accept_prob(const CandidateModel& theta, const FeatureRegistry& registry,
                         const LoadAttributes& b, double price);

// Utility for a fixed context as a line in the bid.
struct UtilityLine {
  double intercept = 0.0;
  double slope = 0.0;
  double at(double price) const { return intercept + slope * price; }
};
UtilityLine utility_line(const WeightVector& w, const FeatureRegistry& registry,
                         const LoadAttributes& b);

// ---------------------------------------------------------------------------
// L1-regularized logistic regression.

// Dense row-major design matrix with +/-1 labels.
struct Dataset {
  Side side = Side::Carrier;
  int dim = 0;
  std::vector<double> rows;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {rows.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  void add(std::span<const double> x, int label);
};

struct LabeledExample {
  FeatureVector x;
  int label = 1;
};

Dataset make_dataset(std::span<const LabeledExample> examples);

struct FitConfig {
  int max_iterations = 500;
  double tolerance = 1e-6;
};

struct FitResult {
  WeightVector weights;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
};

// Mean logistic loss + lambda * sum_{j >= 1} |w_j|; column 0 is the
// unpenalized intercept.
double l1_logistic_objective(const Dataset& data, std::span<const double> w, double lambda);

// Proximal-gradient minimisation of l1_logistic_objective. Throws
// std::invalid_argument on non-finite features, bad labels, an empty data set,
// or single-class labels with lambda == 0. Hitting max_iterations returns the
// best iterate with converged == false.
FitResult fit_l1_logistic(const Dataset& data, double lambda, const FitConfig& config = {});
FitResult fit_l1_logistic(std::span<const LabeledExample> data, double lambda,
                          const FitConfig& config = {});

// ---------------------------------------------------------------------------
// Serialization. Registries and weights use a versioned JSON layout; weight
// CSVs have one header row of feature names and one row per vector.

inline constexpr std::string_view kRegistryFormat = "brokerage-registry/1";
inline constexpr std::string_view kWeightsFormat = "brokerage-weights/1";

std::string registry_to_json(const FeatureRegistry& registry);
FeatureRegistry registry_from_json(const std::string& text);
std::string weights_to_json(const WeightVector& w, const FeatureRegistry& registry);
WeightVector weights_from_json(const std::string& text, const FeatureRegistry& registry);
void write_weights_csv(std::ostream& out, const FeatureRegistry& registry, Side side,
                       std::span<const WeightVector> weights);

}  // namespace brokerage

#endif  // BROKERAGE_CHOICE_MODEL_HPP_
