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

#include "brokerage/choice_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace brokerage {
namespace {

constexpr std::string_view kEquipmentNames[kEquipmentTypes] = {
    "DryVan", "FlatBed", "Refrigerated", "RGN", "StepDeck"};

FeatureLayout carrier_layout(int n_origins, int n_destinations) {
  FeatureLayout l;
  l.intercept = 0;
  l.daily_load = 1;
  l.dest_daily_demand = 2;
  l.min_dist = 3;
  l.origin = 4;
  l.destination = l.origin + n_origins;
  l.equipment = l.destination + n_destinations;
  l.equipment_price = l.equipment + kEquipmentTypes;
  l.price_miles_min_dist = l.equipment_price + kEquipmentTypes;
  l.price_daily_load = l.price_miles_min_dist + 1;
  l.dim = l.price_daily_load + 1;
  return l;
}

FeatureLayout shipper_layout(int n_origins, int n_destinations) {
  FeatureLayout l;
  l.intercept = 0;
  l.min_dist = 1;
  l.origin = 2;
  l.destination = l.origin + n_origins;
  l.equipment_price = l.destination + n_destinations;
  l.price_miles_min_dist = l.equipment_price + kEquipmentTypes;
  l.dim = l.price_miles_min_dist + 1;
  return l;
}

std::vector<RegionId> sorted_unique(std::vector<RegionId> regions, const char* what) {
  std::sort(regions.begin(), regions.end());
  if (std::adjacent_find(regions.begin(), regions.end()) != regions.end()) {
    throw std::invalid_argument(std::string("duplicate region in ") + what + " indicators");
  }
  return regions;
}

void check_compatible(const WeightVector& w, const FeatureVector& x) {
  if (w.side != x.side) {
    throw std::invalid_argument("weight/feature side mismatch (" +
                                std::string(side_name(w.side)) + " weights, " +
                                std::string(side_name(x.side)) + " features)");
  }
  if (w.weights.size() != x.values.size()) {
    throw std::invalid_argument("weight/feature dimension mismatch: " +
                                std::to_string(w.weights.size()) + " vs " +
                                std::to_string(x.values.size()) +
                                " (registry and model out of sync)");
  }
}

// Writes base (price = 0) and slope parts of x(b, p).
void fill_line(const FeatureRegistry& registry, const LoadAttributes& b, Side side,
               std::vector<double>& base, std::vector<double>& slope) {
  const FeatureLayout& l = registry.layout(side);
  base.assign(l.dim, 0.0);
  slope.assign(l.dim, 0.0);
  const double min_dist = b.miles <= kMinDistMiles ? 1.0 : 0.0;
  const int eq = static_cast<int>(b.equipment);

  base[l.intercept] = 1.0;
  base[l.min_dist] = min_dist;
  if (l.daily_load >= 0) base[l.daily_load] = b.lane_daily_load;
  if (l.dest_daily_demand >= 0) base[l.dest_daily_demand] = b.dest_daily_demand;
  if (auto s = registry.origin_slot(b.origin)) base[l.origin + *s] = 1.0;
  if (auto s = registry.destination_slot(b.destination)) base[l.destination + *s] = 1.0;
  if (l.equipment >= 0) base[l.equipment + eq] = 1.0;

  slope[l.equipment_price + eq] = 1.0;
  slope[l.price_miles_min_dist] = b.miles * min_dist;
  if (l.price_daily_load >= 0) slope[l.price_daily_load] = b.lane_daily_load;
}

}  // namespace

std::string_view equipment_name(Equipment e) {
  return kEquipmentNames[static_cast<int>(e)];
}

Equipment parse_equipment(std::string_view name) {
  for (int i = 0; i < kEquipmentTypes; ++i) {
    if (kEquipmentNames[i] == name) return static_cast<Equipment>(i);
  }
  throw std::invalid_argument("unknown equipment type '" + std::string(name) + "'");
}

std::string_view side_name(Side side) {
  return side == Side::Carrier ? "carrier" : "shipper";
}

void validate_load(const LoadAttributes& b, int max_lag_steps) {
  if (!(b.miles > 0.0) || !std::isfinite(b.miles)) {
    throw std::invalid_argument("load miles must be positive");
  }
  const int lag = b.pickup - b.call_in;
  if (lag < 0 || lag > max_lag_steps) {
    throw std::invalid_argument("pickup lag " + std::to_string(lag) + " outside [0, " +
                                std::to_string(max_lag_steps) + "]");
  }
  const int eq = static_cast<int>(b.equipment);
  if (eq < 0 || eq >= kEquipmentTypes) throw std::invalid_argument("bad equipment type");
}

FeatureRegistry::FeatureRegistry(std::vector<RegionId> origins,
                                 std::vector<RegionId> destinations)
    : origins_(sorted_unique(std::move(origins), "origin")),
      destinations_(sorted_unique(std::move(destinations), "destination")) {
  for (std::size_t i = 0; i < origins_.size(); ++i) origin_index_[origins_[i]] = int(i);
  for (std::size_t i = 0; i < destinations_.size(); ++i) {
    destination_index_[destinations_[i]] = int(i);
  }
  carrier_ = carrier_layout(int(origins_.size()), int(destinations_.size()));
  shipper_ = shipper_layout(int(origins_.size()), int(destinations_.size()));
}

std::optional<int> FeatureRegistry::origin_slot(RegionId region) const {
  auto it = origin_index_.find(region);
  if (it == origin_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> FeatureRegistry::destination_slot(RegionId region) const {
  auto it = destination_index_.find(region);
  if (it == destination_index_.end()) return std::nullopt;
  return it->second;
}

const FeatureLayout& FeatureRegistry::layout(Side side) const {
  return side == Side::Carrier ? carrier_ : shipper_;
}

std::vector<std::string> FeatureRegistry::feature_names(Side side) const {
  const FeatureLayout& l = layout(side);
  std::vector<std::string> names(l.dim);
  names[l.intercept] = "Intercept";
  names[l.min_dist] = "MinDist";
  if (l.daily_load >= 0) names[l.daily_load] = "DailyLoad";
  if (l.dest_daily_demand >= 0) names[l.dest_daily_demand] = "DestDailyDemand";
  for (std::size_t i = 0; i < origins_.size(); ++i) {
    names[l.origin + i] = "I_O_" + std::to_string(origins_[i]);
  }
  for (std::size_t i = 0; i < destinations_.size(); ++i) {
    names[l.destination + i] = "I_D_" + std::to_string(destinations_[i]);
  }
  for (int e = 0; e < kEquipmentTypes; ++e) {
    const std::string eq(kEquipmentNames[e]);
    if (l.equipment >= 0) names[l.equipment + e] = "I_T_" + eq;
    names[l.equipment_price + e] = "p*I_T_" + eq;
  }
  names[l.price_miles_min_dist] = "p*Miles*MinDist";
  if (l.price_daily_load >= 0) names[l.price_daily_load] = "p*DailyLoad";
  return names;
}

FeatureRegistry build_feature_registry(const std::map<RegionId, int>& origin_counts,
                                       const std::map<RegionId, int>& destination_counts,
                                       int threshold) {
  if (threshold < 1) throw std::invalid_argument("indicator threshold must be >= 1");
  auto select = [threshold](const std::map<RegionId, int>& counts) {
    std::vector<RegionId> out;
    for (const auto& [region, count] : counts) {
      if (count < 0) throw std::invalid_argument("negative region count");
      if (count > threshold) out.push_back(region);
    }
    return out;
  };
  return FeatureRegistry(select(origin_counts), select(destination_counts));
}

FeatureRegistry build_feature_registry(const std::map<RegionId, int>& counts,
                                       int threshold) {
  return build_feature_registry(counts, counts, threshold);
}

WeightVector WeightVector::zeros(const FeatureRegistry& registry, Side side) {
  return WeightVector{std::vector<double>(registry.dim(side), 0.0), side};
}

FeatureLine feature_line(const FeatureRegistry& registry, const LoadAttributes& b,
                         Side side) {
  FeatureLine line;
  line.base.side = side;
  line.slope.side = side;
  fill_line(registry, b, side, line.base.values, line.slope.values);
  return line;
}

FeatureVector features(const FeatureRegistry& registry, const LoadAttributes& b,
                       double price, Side side) {
  if (!(price > 0.0)) throw std::invalid_argument("price must be positive");
  FeatureLine line = feature_line(registry, b, side);
  for (std::size_t j = 0; j < line.base.values.size(); ++j) {
    if (line.slope.values[j] != 0.0) line.base.values[j] += price * line.slope.values[j];
  }
  return std::move(line.base);
}

FeatureVector carrier_features(const FeatureRegistry& registry, const LoadAttributes& b,
                               double price) {
  return features(registry, b, price, Side::Carrier);
}

FeatureVector shipper_features(const FeatureRegistry& registry, const LoadAttributes& b,
                               double price) {
  return features(registry, b, price, Side::Shipper);
}

double dot(const WeightVector& w, const FeatureVector& x) {
  check_compatible(w, x);
  double s = 0.0;
  for (std::size_t j = 0; j < x.values.size(); ++j) s += w.weights[j] * x.values[j];
  return s;
}

double sigmoid(double h) {
  h = std::clamp(h, -700.0, 700.0);
  if (h >= 0.0) return 1.0 / (1.0 + std::exp(-h));
  const double e = std::exp(h);
  return e / (1.0 + e);
}

double log_sigmoid(double h) {
  if (h >= 0.0) return -std::log1p(std::exp(-h));
  return h - std::log1p(std::exp(h));
}

double accept_prob(const WeightVector& w, const FeatureVector& x) {
  return sigmoid(dot(w, x));
}

double joint_accept_prob(const CandidateModel& theta, const FeatureRegistry& registry,
                         const LoadAttributes& b, double price) {
  return accept_prob(theta.alpha, carrier_features(registry, b, price)) *
         accept_prob(theta.beta, shipper_features(registry, b, price));
}

UtilityLine utility_line(const WeightVector& w, const FeatureRegistry& registry,
                         const LoadAttributes& b) {
  FeatureLine line = feature_line(registry, b, w.side);
  return UtilityLine{dot(w, line.base), dot(w, line.slope)};
}

// ---------------------------------------------------------------------------

void Dataset::add(std::span<const double> x, int label) {
  if (static_cast<int>(x.size()) != dim) {
    throw std::invalid_argument("dataset row has wrong dimension");
  }
  rows.insert(rows.end(), x.begin(), x.end());
  labels.push_back(label);
}

Dataset make_dataset(std::span<const LabeledExample> examples) {
  Dataset data;
  if (examples.empty()) return data;
  data.side = examples.front().x.side;
  data.dim = static_cast<int>(examples.front().x.values.size());
  data.rows.reserve(examples.size() * data.dim);
  for (const auto& ex : examples) {
    if (ex.x.side != data.side) throw std::invalid_argument("mixed sides in dataset");
    data.add(ex.x.values, ex.label);
  }
  return data;
}

double l1_logistic_objective(const Dataset& data, std::span<const double> w, double lambda) {
  if (static_cast<int>(w.size()) != data.dim) {
    throw std::invalid_argument("objective: weight dimension mismatch");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto x = data.row(i);
    double m = 0.0;
    for (int j = 0; j < data.dim; ++j) m += x[j] * w[j];
    loss -= log_sigmoid(data.labels[i] * m);
  }
  double penalty = 0.0;
  for (int j = 1; j < data.dim; ++j) penalty += std::abs(w[j]);
  return loss / static_cast<double>(data.size()) + lambda * penalty;
}

namespace {

// The fit runs on columns scaled to unit RMS; the L1 weights are rescaled so
// the objective in original coordinates is unchanged.
struct ScaledProblem {
  int n = 0;
  int d = 0;
  std::vector<double> z;        // row-major n x d
  std::vector<double> y;        // +/-1
  std::vector<double> scale;    // original w_j = v_j / scale_j
  std::vector<double> penalty;  // per-coordinate L1 weight in scaled space

  // Smooth part (mean logistic loss) and its gradient.
  double loss(const std::vector<double>& v, std::vector<double>* grad,
              std::vector<double>& margin) const {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double* row = z.data() + std::size_t(i) * d;
      double m = 0.0;
      for (int j = 0; j < d; ++j) m += row[j] * v[j];
      margin[i] = y[i] * m;
      total -= log_sigmoid(margin[i]);
    }
    if (grad) {
      std::fill(grad->begin(), grad->end(), 0.0);
      for (int i = 0; i < n; ++i) {
        const double coeff = -y[i] * sigmoid(-margin[i]);
        if (coeff == 0.0) continue;
        const double* row = z.data() + std::size_t(i) * d;
        for (int j = 0; j < d; ++j) (*grad)[j] += coeff * row[j];
      }
      for (double& g : *grad) g /= n;
    }
    return total / n;
  }

  double regularizer(const std::vector<double>& v) const {
    double r = 0.0;
    for (int j = 0; j < d; ++j) r += penalty[j] * std::abs(v[j]);
    return r;
  }
};

}  // namespace

FitResult fit_l1_logistic(const Dataset& data, double lambda, const FitConfig& config) {
  if (data.size() == 0) throw std::invalid_argument("fit_l1_logistic: empty data set");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("fit_l1_logistic: lambda must be a nonnegative number");
  }
  bool has_pos = false, has_neg = false;
  for (int label : data.labels) {
    if (label == 1) has_pos = true;
    else if (label == -1) has_neg = true;
    else throw std::invalid_argument("fit_l1_logistic: labels must be +1 or -1");
  }
  for (double v : data.rows) {
    if (!std::isfinite(v)) throw std::invalid_argument("fit_l1_logistic: non-finite feature");
  }
  if ((!has_pos || !has_neg) && lambda == 0.0) {
    throw std::invalid_argument(
        "fit_l1_logistic: single-class labels have no minimiser without regularization");
  }

  ScaledProblem prob;
  prob.n = static_cast<int>(data.size());
  prob.d = data.dim;
  prob.scale.assign(prob.d, 1.0);
  for (int j = 0; j < prob.d; ++j) {
    double ss = 0.0;
    for (int i = 0; i < prob.n; ++i) {
      const double x = data.rows[std::size_t(i) * prob.d + j];
      ss += x * x;
    }
    const double rms = std::sqrt(ss / prob.n);
    if (rms > 0.0) prob.scale[j] = rms;
  }
  prob.z.resize(data.rows.size());
  for (int i = 0; i < prob.n; ++i) {
    for (int j = 0; j < prob.d; ++j) {
      const std::size_t k = std::size_t(i) * prob.d + j;
      prob.z[k] = data.rows[k] / prob.scale[j];
    }
  }
  prob.y.assign(data.labels.begin(), data.labels.end());
  prob.penalty.assign(prob.d, 0.0);
  for (int j = 1; j < prob.d; ++j) prob.penalty[j] = lambda / prob.scale[j];

  std::vector<double> v(prob.d, 0.0), v_prev(prob.d, 0.0), look(prob.d, 0.0);
  std::vector<double> grad(prob.d), trial(prob.d), margin(prob.n);
  double lipschitz = 1.0;
  double momentum = 1.0;
  double objective = prob.loss(v, nullptr, margin) + prob.regularizer(v);
  std::vector<double> best = v;
  double best_objective = objective;

  FitResult result;
  int iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    const double f_look = prob.loss(look, &grad, margin);
    double f_trial = 0.0;
    for (;;) {
      for (int j = 0; j < prob.d; ++j) {
        const double step = look[j] - grad[j] / lipschitz;
        const double thresh = prob.penalty[j] / lipschitz;
        trial[j] = std::copysign(std::max(std::abs(step) - thresh, 0.0), step);
      }
      f_trial = prob.loss(trial, nullptr, margin);
      double lin = 0.0, quad = 0.0;
      for (int j = 0; j < prob.d; ++j) {
        const double diff = trial[j] - look[j];
        lin += grad[j] * diff;
        quad += diff * diff;
      }
      if (f_trial <= f_look + lin + 0.5 * lipschitz * quad + 1e-12 * std::abs(f_look)) break;
      lipschitz *= 2.0;
      if (lipschitz > 1e12) break;
    }
    const double trial_objective = f_trial + prob.regularizer(trial);

    if (trial_objective > objective) {
      // A plain prox step from the accepted iterate cannot increase the
      // objective, so this only happens at numerical noise level.
      if (momentum == 1.0) {
        result.converged = true;
        ++iter;
        break;
      }
      // Momentum overshot: restart from the last accepted iterate.
      momentum = 1.0;
      look = v;
      continue;
    }
    const double change = objective - trial_objective;
    const double next_momentum = (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum)) / 2.0;
    const double beta = (momentum - 1.0) / next_momentum;
    v_prev = v;
    v = trial;
    for (int j = 0; j < prob.d; ++j) look[j] = v[j] + beta * (v[j] - v_prev[j]);
    momentum = next_momentum;
    objective = trial_objective;
    if (objective < best_objective) {
      best_objective = objective;
      best = v;
    }
    if (change < config.tolerance) {
      result.converged = true;
      ++iter;
      break;
    }
  }

  result.iterations = iter;
  result.weights.side = data.side;
  result.weights.weights.resize(prob.d);
  for (int j = 0; j < prob.d; ++j) result.weights.weights[j] = best[j] / prob.scale[j];
  result.objective = l1_logistic_objective(data, result.weights.weights, lambda);
  return result;
}

FitResult fit_l1_logistic(std::span<const LabeledExample> data, double lambda,
                          const FitConfig& config) {
  return fit_l1_logistic(make_dataset(data), lambda, config);
}

// ---------------------------------------------------------------------------

std::string registry_to_json(const FeatureRegistry& registry) {
  nlohmann::json j;
  j["format"] = kRegistryFormat;
  j["origins"] = registry.origins();
  j["destinations"] = registry.destinations();
  j["carrier_dim"] = registry.carrier_dim();
  j["shipper_dim"] = registry.shipper_dim();
  return j.dump(2);
}

FeatureRegistry registry_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  if (j.value("format", std::string()) != kRegistryFormat) {
    throw std::invalid_argument("unsupported registry format");
  }
  FeatureRegistry registry(j.at("origins").get<std::vector<RegionId>>(),
                           j.at("destinations").get<std::vector<RegionId>>());
  if (j.at("carrier_dim").get<int>() != registry.carrier_dim() ||
      j.at("shipper_dim").get<int>() != registry.shipper_dim()) {
    throw std::invalid_argument("registry dimensions disagree with region lists");
  }
  return registry;
}

std::string weights_to_json(const WeightVector& w, const FeatureRegistry& registry) {
  if (static_cast<int>(w.weights.size()) != registry.dim(w.side)) {
    throw std::invalid_argument("weights do not match registry");
  }
  nlohmann::json j;
  j["format"] = kWeightsFormat;
  j["side"] = side_name(w.side);
  j["names"] = registry.feature_names(w.side);
  j["weights"] = w.weights;
  return j.dump(2);
}

WeightVector weights_from_json(const std::string& text, const FeatureRegistry& registry) {
  auto j = nlohmann::json::parse(text);
  if (j.value("format", std::string()) != kWeightsFormat) {
    throw std::invalid_argument("unsupported weights format");
  }
  const std::string side = j.at("side").get<std::string>();
  WeightVector w;
  if (side == "carrier") w.side = Side::Carrier;
  else if (side == "shipper") w.side = Side::Shipper;
  else throw std::invalid_argument("unknown side '" + side + "'");
  w.weights = j.at("weights").get<std::vector<double>>();
  if (j.at("names").get<std::vector<std::string>>() != registry.feature_names(w.side)) {
    throw std::invalid_argument("weight names do not match registry layout");
  }
  return w;
}

void write_weights_csv(std::ostream& out, const FeatureRegistry& registry, Side side,
                       std::span<const WeightVector> weights) {
  const auto names = registry.feature_names(side);
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << "\n";
  char buf[32];
  for (const auto& w : weights) {
    if (w.side != side || w.weights.size() != names.size()) {
      throw std::invalid_argument("weights do not match registry layout");
    }
    for (std::size_t j = 0; j < w.weights.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", w.weights[j]);
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
}

}  // namespace brokerage
