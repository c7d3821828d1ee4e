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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 only
// when every selected criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "brokerage/booking.hpp"
#include "brokerage/harness.hpp"
#include "brokerage/theory.hpp"
#include "oracles.hpp"

using namespace brokerage;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0,
                double e = 0, double g = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d, e, g);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Pass only when the check holds and the run stays inside its time budget.
Outcome timed(double limit_s, const std::function<Outcome()>& body) {
  Stopwatch w;
  Outcome o = body();
  o.seconds = w.seconds();
  if (limit_s > 0 && o.seconds > limit_s) {
    o.passed = false;
    o.detail += fmt("; over the %.0f s budget", limit_s);
  }
  return o;
}

Outcome from_check(const CheckResult& r) { return {r.passed, r.detail, 0.0}; }

struct Context {
  fs::path configs;
  fs::path work;
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;
  // Kept for criteria that reuse the experiment runs.
  std::optional<std::vector<MetricTrace>> bandit_traces;
  std::optional<std::vector<MetricTrace>> fleet_traces;
  std::optional<FleetRunConfig> fleet_config;
};

KeyValueConfig load(const Context& ctx, const char* name) {
  return KeyValueConfig::load(ctx.configs / name);
}

std::uint64_t seed_of(const Context& ctx, const KeyValueConfig& config) {
  return ctx.has_seed_override ? ctx.seed_override : config.get_uint64("run.seed", 1);
}

std::map<std::string, SummaryStat> stat_by_policy(const std::vector<MetricTrace>& traces,
                                                  double RepSummary::*field) {
  std::map<std::string, SummaryStat> out;
  for (const auto& t : traces) {
    std::vector<double> v;
    for (const auto& r : t.reps) v.push_back(r.*field);
    out[t.policy] = summarize(v);
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome kg_nonnegativity() {
  TheoryOptions o;
  o.nonnegativity_draws = 10000;
  return from_check(check_kg_nonnegativity(o));
}

Outcome kg_oracle() {
  FeatureRegistry reg = theory_registry();
  Rng rng(derive_seed(20260101, {0xC2}));
  double worst = 0.0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    int K = 1 + static_cast<int>(rng() % 4);
    RandomInstance inst = random_instance(reg, K, 10, rng);
    BeliefState s = BeliefState::with_probabilities(inst.candidates, inst.q);
    double p = inst.grid.points[inst.price_index];
    double got = kg_value(s, reg, inst.context, p, inst.grid);
    double want = oracle::kg(s, reg, inst.context, p, inst.grid);
    worst = std::max(worst, std::abs(got - want));
  }
  return {worst <= 1e-10, fmt("instances=%.0f max|kg - oracle|=%.3g", n, worst)};
}

Outcome nullity() {
  TheoryOptions o;
  o.nullity_pairs = 100;
  return from_check(check_uninstructive_nullity(o));
}

Outcome consistency() {
  TheoryOptions o;
  o.consistency_seeds = 20;
  o.consistency_required = 19;
  o.consistency_steps = 2000;
  o.consistency_contexts = 50;
  o.consistency_K = 5;
  o.consistency_tau = 100.0;
  return from_check(check_consistency(o));
}

Outcome stall() { return from_check(check_confounding_stall(TheoryOptions{})); }

std::vector<MetricTrace> bandit_run(Context& ctx, const fs::path& out) {
  KeyValueConfig config = load(ctx, "bandit.conf");
  BanditScenario s = make_bandit_scenario(config, seed_of(ctx, config));
  auto traces = run_bandit_experiment(s.run);
  emit_metrics(traces, out);
  return traces;
}

Outcome bandit_ordering(Context& ctx) {
  ctx.bandit_traces = bandit_run(ctx, ctx.work / "bandit_a");
  auto regret = stat_by_policy(*ctx.bandit_traces, &RepSummary::avg_regret);
  const std::vector<std::string> order{"kg", "exploit", "est-opt", "mean-price"};
  for (const auto& p : order) {
    if (!regret.count(p)) return {false, "bandit.conf does not run policy " + p};
  }
  bool ok = true;
  std::string detail;
  for (const auto& p : order) {
    detail += p + fmt("=%.4f(%.4f) ", regret[p].mean, regret[p].se);
  }
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    const auto& a = regret[order[i]];
    const auto& b = regret[order[i + 1]];
    double pooled = std::sqrt(a.se * a.se + b.se * b.se);
    double gap = b.mean - a.mean;
    bool step = gap > 2.0 * pooled;
    ok = ok && step;
    detail += order[i] + "<" + order[i + 1] + fmt(":gap=%.2fSE ", pooled > 0 ? gap / pooled : 0.0) +
              (step ? "" : "(short) ");
  }
  return {ok, detail};
}

Outcome bagging_improvement(Context& ctx) {
  KeyValueConfig config = load(ctx, "bandit.conf");
  const std::uint64_t base = seed_of(ctx, config);
  const int seeds = 20, contexts = 10, levels = 3;
  std::vector<double> mad(levels, 0.0);
  for (int s = 0; s < seeds; ++s) {
    BanditScenario sc = make_bandit_scenario(config, derive_seed(base, {0xC7, std::uint64_t(s)}));
    BanditRunConfig run = sc.run;
    // Resamples at C, 2C and 4C; run just past the third.
    run.N = 4 * run.C + 1;
    run.reps = 1;
    run.record_steps = false;
    PolicySpec kg;
    for (const auto& p : sc.run.policies) {
      if (p.kind == PolicyKind::KG) kg = p;
    }
    run.policies = {kg};
    auto traces = run_bandit_experiment(run);
    const auto& maps = traces.at(0).reps.at(0).pre_resample_map;
    if (maps.size() < static_cast<std::size_t>(levels)) {
      return {false, fmt("seed %.0f recorded only %.0f resamples", s, maps.size())};
    }
    auto held_out = sample_horizon(sc.booking, 4, derive_seed(base, {0xC7, 0xFFFF, std::uint64_t(s)}));
    if (held_out.size() < static_cast<std::size_t>(contexts)) {
      return {false, "not enough held-out contexts"};
    }
    for (int c = 0; c < contexts; ++c) {
      const LoadAttributes& b = held_out[c].attributes;
      for (int r = 0; r < levels; ++r) {
        double gap = 0.0;
        for (double p : run.grid.points) {
          gap += std::abs(joint_accept_prob(maps[r], run.registry, b, p) -
                          joint_accept_prob(run.truth, run.registry, b, p));
        }
        mad[r] += gap / run.grid.size() / (seeds * contexts);
      }
    }
  }
  bool ok = mad[0] > mad[1] && mad[1] > mad[2];
  return {ok, fmt("MAD r=0 %.4f, r=1 %.4f, r=2 %.4f", mad[0], mad[1], mad[2])};
}

Outcome dispatch_optimality() {
  Rng rng(derive_seed(20260101, {0xC8}));
  ContributionParams p;
  double worst = 0.0;
  int infeasible = 0;
  for (int i = 0; i < 100; ++i) {
    auto inst = oracle::random_dispatch_instance(rng, 6, 6);
    auto d = solve_dispatch(inst.state, inst.vfa, inst.model, p);
    worst = std::max(worst, std::abs(d.objective -
                                     oracle::brute_dispatch(inst.state, inst.vfa, inst.model, p)));
    infeasible += !validate_decision(inst.state, d.decision, inst.model).empty();
  }
  return {worst <= 1e-9 && infeasible == 0,
          fmt("instances=100 max|gap|=%.3g infeasible=%.0f", worst, infeasible)};
}

std::vector<MetricTrace> fleet_run(Context& ctx, const fs::path& out) {
  KeyValueConfig config = load(ctx, "fleet.conf");
  FleetRunConfig run = make_fleet_config(config, seed_of(ctx, config));
  auto traces = run_fleet_experiment(run);
  emit_metrics(traces, out);
  ctx.fleet_config = run;
  return traces;
}

Outcome fleet_ordering(Context& ctx) {
  ctx.fleet_traces = fleet_run(ctx, ctx.work / "fleet_a");
  auto revenue = stat_by_policy(*ctx.fleet_traces, &RepSummary::avg_revenue);
  auto accept = stat_by_policy(*ctx.fleet_traces, &RepSummary::accept_rate);
  if (!revenue.count("kg")) return {false, "fleet.conf does not run kg"};
  std::string best_other;
  for (const auto& [p, s] : revenue) {
    if (p == "kg") continue;
    if (best_other.empty() || s.mean > revenue[best_other].mean) best_other = p;
  }
  if (best_other.empty()) return {false, "no comparison policy"};
  bool top = revenue["kg"].mean > revenue[best_other].mean;
  bool rate = accept["kg"].mean > accept[best_other].mean;
  std::string detail;
  for (const auto& [p, s] : revenue) {
    detail += p + fmt(" rev=%.4f(%.4f) acc=%.4f; ", s.mean, s.se, accept[p].mean);
  }
  detail += "second=" + best_other + (top ? "" : "; kg not highest revenue") +
            (rate ? "" : "; kg acceptance not above second");
  return {top && rate, detail};
}

Outcome fleet_conservation(Context& ctx) {
  if (!ctx.fleet_traces) ctx.fleet_traces = fleet_run(ctx, ctx.work / "fleet_a");
  long runs = 0, deviation = 0, mismatches = 0, unbalanced = 0;
  int batches = ctx.fleet_config->batches;
  for (const auto& t : *ctx.fleet_traces) {
    for (const auto& a : t.audits) {
      ++runs;
      deviation = std::max(deviation, a.max_driver_deviation);
      mismatches += a.ledger_mismatches;
      unbalanced += a.accepted != a.served + a.expired + a.pending;
      if (static_cast<int>(a.steps.size()) != batches) ++unbalanced;
    }
  }
  // Lag law on the fleet booking stream.
  OfferSampler sampler(ctx.fleet_config->booking);
  Rng rng(derive_seed(20260101, {0xC9}));
  long total = 0, late = 0;
  for (int t = 0; total < 100000; ++t) {
    for (const auto& o : sampler.sample(t, rng)) {
      ++total;
      late += o.lag_days >= 4;
    }
  }
  double share = static_cast<double>(late) / static_cast<double>(total);
  bool ok = runs > 0 && deviation == 0 && mismatches == 0 && unbalanced == 0 &&
            std::abs(share - 0.5) <= 0.02;
  return {ok, fmt("runs=%.0f batches=%.0f driver_dev=%.0f ledger_mismatch=%.0f P(lag>=4d)=%.4f "
                  "over %.0f loads",
                  runs, batches, deviation, mismatches + unbalanced, share, total)};
}

// Every file under one tree has a byte-identical twin under the other.
std::string compare_trees(const fs::path& a, const fs::path& b, int* files) {
  std::set<fs::path> names;
  for (const auto& root : {a, b}) {
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) names.insert(fs::relative(e.path(), root));
    }
  }
  for (const auto& n : names) {
    ++*files;
    if (!fs::exists(a / n) || !fs::exists(b / n)) return "missing " + n.string();
    if (oracle::slurp(a / n) != oracle::slurp(b / n)) return "differs " + n.string();
  }
  return "";
}

Outcome determinism(Context& ctx) {
  if (!ctx.bandit_traces) ctx.bandit_traces = bandit_run(ctx, ctx.work / "bandit_a");
  if (!ctx.fleet_traces) ctx.fleet_traces = fleet_run(ctx, ctx.work / "fleet_a");
  bandit_run(ctx, ctx.work / "bandit_b");
  fleet_run(ctx, ctx.work / "fleet_b");
  int files = 0;
  std::string bad = compare_trees(ctx.work / "bandit_a", ctx.work / "bandit_b", &files);
  if (bad.empty()) bad = compare_trees(ctx.work / "fleet_a", ctx.work / "fleet_b", &files);
  return {bad.empty() && files > 0, bad.empty() ? fmt("%.0f files identical", files) : bad};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  Context ctx;
  std::string only;
  app.add_option("--configs", ctx.configs, "directory holding bandit.conf and fleet.conf")
      ->required();
  app.add_option("--work", ctx.work, "scratch directory for experiment output")->required();
  app.add_option("--only", only, "comma separated criterion numbers");
  auto* seed = app.add_option("--seed", ctx.seed_override, "override run.seed");
  CLI11_PARSE(app, argc, argv);
  ctx.has_seed_override = seed->count() > 0;

  std::set<int> selected;
  for (const auto& s : split_list(only)) selected.insert(std::stoi(s));
  auto wanted = [&](int n) { return selected.empty() || selected.count(n); };

  fs::remove_all(ctx.work);
  fs::create_directories(ctx.work);

  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  // Listed in evaluation order; criterion 9 reuses the runs of criterion 10.
  std::vector<Criterion> plan{
      {1, "KG nonnegativity", 60, kg_nonnegativity},
      {2, "KG oracle equivalence", 30, kg_oracle},
      {3, "uninstructive-bid nullity", 0, nullity},
      {4, "consistency", 300, consistency},
      {5, "confounding stall", 0, stall},
      {6, "bandit policy ordering", 900, [&] { return bandit_ordering(ctx); }},
      {7, "bagging improvement", 0, [&] { return bagging_improvement(ctx); }},
      {8, "dispatch optimality", 10, dispatch_optimality},
      {10, "fleet policy ordering", 3600, [&] { return fleet_ordering(ctx); }},
      {9, "fleet conservation", 0, [&] { return fleet_conservation(ctx); }},
      {11, "determinism", 0, [&] { return determinism(ctx); }},
  };
  std::map<int, std::pair<const char*, Outcome>> results;
  for (const auto& c : plan) {
    if (!wanted(c.id)) continue;
    std::cerr << "running criterion " << c.id << " (" << c.name << ")" << std::endl;
    Outcome o;
    try {
      o = timed(c.limit_s, c.run);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what(), 0.0};
    }
    std::cerr << "  " << (o.passed ? "PASS" : "FAIL") << " " << o.detail << std::endl;
    results[c.id] = {c.name, o};
  }

  bool all = true;
  for (const auto& [id, r] : results) {
    const auto& [name, o] = r;
    std::printf("criterion %2d %s  %s: %s (%.1f s)\n", id, o.passed ? "PASS" : "FAIL", name,
                o.detail.c_str(), o.seconds);
    all = all && o.passed;
  }
  std::fflush(stdout);
  return all ? 0 : 1;
}
