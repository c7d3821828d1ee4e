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

#include "brokerage/dispatch.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "brokerage/assignment.hpp"

namespace brokerage {

void ContributionParams::validate() const {
  if (!(empty_cost_per_mile >= 0.0)) throw std::invalid_argument("empty cost must be nonnegative");
  if (!(loaded_cost_per_mile >= 0.0)) throw std::invalid_argument("loaded cost must be nonnegative");
  if (!(late_penalty_per_step >= 0.0)) throw std::invalid_argument("late penalty must be nonnegative");
}

double contribution(const DriverAttributes& a, const std::optional<LedgerKey>& load,
                    double miles, double revenue, const FleetModel& model,
                    const ContributionParams& params) {
  if (!load) return 0.0;
  MovePlan plan = plan_move(a, *load, miles, model);
  double deadhead_hours = plan.deadhead_miles / model.params.speed_mph;
  int late = std::max(
      0, static_cast<int>(std::ceil(deadhead_hours / model.params.step_hours - 1e-12)) - 1);
  return revenue - plan.deadhead_miles * params.empty_cost_per_mile -
         miles * params.loaded_cost_per_mile - late * params.late_penalty_per_step;
}

ValueFunction::ValueFunction(int buckets, double theta_step, double discount)
    : buckets_(buckets), theta_step_(theta_step), discount_(discount) {
  if (buckets < 1) throw std::invalid_argument("value function needs at least one bucket");
  if (!(theta_step > 0.0)) throw std::invalid_argument("stepsize parameter must be positive");
  if (!(discount >= 0.0 && discount <= 1.0)) throw std::invalid_argument("discount must be in [0, 1]");
}

double ValueFunction::stepsize() const {
  return theta_step_ / (theta_step_ + static_cast<double>(iteration_));
}

double ValueFunction::get(const ValueKey& key) const {
  auto it = table_.find(key);
  return it == table_.end() ? 0.0 : it->second;
}

void ValueFunction::set(const ValueKey& key, double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("value estimates must be finite");
  table_[key] = value;
}

ValueKey ValueFunction::key(const DriverAttributes& a, int step) const {
  return {((step % buckets_) + buckets_) % buckets_, a.location, a.equipment};
}

double ValueFunction::post_decision_value(const DriverAttributes& post, int t) const {
  int ahead = 1 + post.eta_steps;
  return std::pow(discount_, ahead) * get(key(post, t + ahead));
}

void ValueFunction::write_csv(std::ostream& out) const {
  out << "bucket,location,equipment,value\n";
  char buf[64];
  for (const auto& [k, v] : table_) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << k.bucket << ',' << k.location << ',' << equipment_name(k.equipment) << ',' << buf
        << '\n';
  }
}

void ValueFunction::read_csv(std::istream& in) {
  std::map<ValueKey, double> table;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (number == 1 || trim(line).empty()) continue;
    auto f = split_list(line, ',');
    if (f.size() != 4) throw ConfigError(number, "value rows need 4 fields");
    try {
      ValueKey k{std::stoi(f[0]), std::stoi(f[1]), parse_equipment(f[2])};
      if (k.bucket < 0 || k.bucket >= buckets_) throw std::out_of_range("bucket");
      double v = std::stod(f[3]);
      if (!std::isfinite(v)) throw std::out_of_range("value");
      table[k] = v;
    } catch (const std::exception& e) {
      throw ConfigError(number, std::string("bad value row: ") + e.what());
    }
  }
  table_ = std::move(table);
}

ValueFunction update_value_function(const ValueFunction& vfa,
                                    const std::map<DriverAttributes, double>& duals, int t) {
  ValueFunction next = vfa;
  std::map<ValueKey, std::pair<double, int>> observed;
  for (const auto& [a, dual] : duals) {
    auto& o = observed[vfa.key(a, t)];
    o.first += dual;
    ++o.second;
  }
  double gamma = vfa.stepsize();
  for (const auto& [k, o] : observed) {
    double target = o.first / o.second;
    next.table_[k] = (1.0 - gamma) * vfa.get(k) + gamma * target;
  }
  ++next.iteration_;
  return next;
}

DispatchResult solve_dispatch(const FleetState& state, const ValueFunction& vfa,
                              const FleetModel& model, const ContributionParams& params) {
  DispatchResult result;
  const int t = state.t;

  struct Unit {
    LedgerKey key;
    double revenue;
    double miles;
  };
  std::vector<Unit> units;
  std::vector<LedgerKey> keys = state.loads.due(t);
  for (const auto& key : keys) {
    const LedgerEntry* e = state.loads.find(key);
    for (double r : e->pending) units.push_back({key, r, e->miles});
  }

  // Columns: one per available driver unit, in attribute order.
  std::vector<const DriverAttributes*> attrs;  // distinct available attributes
  std::vector<int> column_attr;
  std::vector<double> hold_value;
  for (const auto& [a, count] : state.drivers) {
    double hold = vfa.post_decision_value(hold_transition(a, model.params), t);
    result.objective += hold * static_cast<double>(count);
    if (a.eta_steps > 0) {
      result.decision[{a, std::nullopt}] += count;
      continue;
    }
    attrs.push_back(&a);
    hold_value.push_back(hold);
    for (long c = 0; c < count; ++c) column_attr.push_back(static_cast<int>(attrs.size()) - 1);
  }

  const double inf = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(units.size());
  const int drivers = static_cast<int>(column_attr.size());
  std::vector<int> assigned(drivers, -1);
  std::vector<double> gain_dual(drivers, 0.0);

  if (n > 0 && drivers > 0) {
    // Gain over holding for each (attribute, key) pair, without revenue.
    std::map<std::pair<int, LedgerKey>, double> base;
    auto gain = [&](int ai, const Unit& u) {
      auto [it, fresh] = base.try_emplace({ai, u.key}, inf);
      if (fresh) {
        const DriverAttributes& a = *attrs[ai];
        if (can_move(a, u.key, u.miles, model)) {
          DriverAttributes post = move_transition(a, u.key, u.miles, model);
          it->second = contribution(a, u.key, u.miles, 0.0, model, params) +
                       vfa.post_decision_value(post, t) - hold_value[ai];
        }
      }
      return it->second == inf ? -inf : it->second + u.revenue;
    };
    std::vector<std::vector<double>> cost(n, std::vector<double>(drivers + n, 0.0));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < drivers; ++j) {
        double g = gain(column_attr[j], units[i]);
        cost[i][j] = g == -inf ? inf : -g;
      }
    }
    AssignmentResult ar = solve_assignment(cost);
    for (int i = 0; i < n; ++i) {
      int j = ar.column_of_row[i];
      if (j < drivers) {
        assigned[j] = i;
        result.objective -= cost[i][j];
      }
    }
    for (int j = 0; j < drivers; ++j) gain_dual[j] = -ar.column_potential[j];
  }

  std::map<DriverAttributes, std::pair<double, long>> dual_sum;
  for (int j = 0; j < drivers; ++j) {
    const DriverAttributes& a = *attrs[column_attr[j]];
    if (assigned[j] >= 0) {
      result.decision[{a, units[assigned[j]].key}] += 1;
    } else {
      result.decision[{a, std::nullopt}] += 1;
    }
    auto& d = dual_sum[a];
    d.first += hold_value[column_attr[j]] + gain_dual[j];
    ++d.second;
  }
  for (const auto& [a, d] : dual_sum) result.duals[a] = d.first / static_cast<double>(d.second);
  return result;
}

ContributionParams contribution_params_from(const KeyValueConfig& config,
                                            const std::string& prefix) {
  ContributionParams p;
  p.empty_cost_per_mile = config.get_double(prefix + "empty_cost_per_mile", p.empty_cost_per_mile);
  p.loaded_cost_per_mile =
      config.get_double(prefix + "loaded_cost_per_mile", p.loaded_cost_per_mile);
  p.late_penalty_per_step =
      config.get_double(prefix + "late_penalty_per_step", p.late_penalty_per_step);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, std::string("dispatch: ") + e.what());
  }
  return p;
}

}  // namespace brokerage
