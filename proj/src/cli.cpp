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

#include "brokerage/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <map>
#include <sstream>

#include "brokerage/booking.hpp"
#include "brokerage/config.hpp"
#include "brokerage/dispatch.hpp"
#include "brokerage/fleet.hpp"
#include "brokerage/harness.hpp"
#include "brokerage/theory.hpp"

namespace brokerage {

namespace fs = std::filesystem;

namespace {

// Anything the user can fix by changing inputs or flags.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

KeyValueConfig load_config(const CommandOptions& options, bool required) {
  if (options.config.empty()) {
    if (required) throw UsageError("--config is required");
    return {};
  }
  if (!fs::exists(options.config)) {
    throw UsageError("config file not found: " + options.config.string());
  }
  return KeyValueConfig::load(options.config);
}

std::uint64_t seed_of(const CommandOptions& options, const KeyValueConfig& config) {
  if (options.seed) return *options.seed;
  return config.get_uint64("run.seed", 1);
}

void apply_overrides(const CommandOptions& options, KeyValueConfig& config,
                     const std::string& prefix) {
  if (!options.policies.empty()) config.set(prefix + "policies", join(options.policies));
  if (options.threads) {
    if (*options.threads < 1) throw UsageError("--threads must be >= 1");
    config.set("run.threads", std::to_string(*options.threads));
  }
}

// Creates an empty run directory; an existing non-empty one is only
// replaced under --force.
void prepare_out_dir(const CommandOptions& options) {
  if (options.out.empty()) throw UsageError("--out is required");
  if (fs::exists(options.out)) {
    if (!fs::is_directory(options.out)) {
      throw UsageError(options.out.string() + " exists and is not a directory");
    }
    if (!fs::is_empty(options.out)) {
      if (!options.force) {
        throw UsageError(options.out.string() +
                         " is not empty; pass --force to overwrite it");
      }
      fs::remove_all(options.out);
    }
  }
  fs::create_directories(options.out);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

void write_manifest(const std::string& command, const CommandOptions& options,
                    const KeyValueConfig& config, std::uint64_t seed,
                    const std::vector<std::string>& policies, int threads) {
  RunManifest m;
  m.command = command;
  m.config_path = options.config.string();
  m.seed = seed;
  m.out_dir = options.out.string();
  m.config_hash = fnv1a_hex(config.canonical());
  m.policies = policies;
  m.threads = threads;
  write_file(options.out / "manifest.json", manifest_to_json(m));
}

fs::path relative_to_config(const CommandOptions& options, const std::string& file) {
  fs::path p(file);
  if (p.is_absolute() || options.config.empty()) return p;
  return options.config.parent_path() / p;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  return in;
}

std::vector<std::string> names_of(const std::vector<PolicySpec>& specs) {
  std::vector<std::string> out;
  for (const auto& s : specs) out.emplace_back(policy_name(s.kind));
  return out;
}

// Maps exceptions to exit codes and prints one diagnostic line.
template <typename F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "config error";
    if (e.line() > 0) log << " (line " << e.line() << ")";
    log << ": " << e.what() << '\n';
  } catch (const UsageError& e) {
    log << "error: " << e.what() << '\n';
  } catch (const std::invalid_argument& e) {
    log << "invalid input: " << e.what() << '\n';
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
  }
  return kExitConfigError;
}

// origin,destination,equipment,miles,lane_daily_load,dest_daily_demand,price,y_c,y_s
constexpr const char* kObservationHeader =
    "origin,destination,equipment,miles,lane_daily_load,dest_daily_demand,price,y_c,y_s";

void write_observations_csv(std::ostream& out, const std::vector<ObservationRecord>& obs) {
  out << kObservationHeader << '\n';
  char buf[256];
  for (const auto& o : obs) {
    std::snprintf(buf, sizeof buf, "%d,%d,%s,%.10g,%.10g,%.10g,%.10g,%d,%d\n", o.b.origin,
                  o.b.destination, std::string(equipment_name(o.b.equipment)).c_str(),
                  o.b.miles, o.b.lane_daily_load, o.b.dest_daily_demand, o.price,
                  o.y_c > 0 ? 1 : 0, o.y_s > 0 ? 1 : 0);
    out << buf;
  }
}

std::vector<ObservationRecord> read_observations_csv(std::istream& in) {
  std::vector<ObservationRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != kObservationHeader) throw ConfigError(1, "unexpected observation header");
      continue;
    }
    if (trim(line).empty()) continue;
    auto f = split_list(line);
    if (f.size() != 9) throw ConfigError(lineno, "expected 9 fields");
    try {
      ObservationRecord o;
      o.b.origin = std::stoi(f[0]);
      o.b.destination = std::stoi(f[1]);
      o.b.equipment = parse_equipment(f[2]);
      o.b.miles = std::stod(f[3]);
      o.b.lane_daily_load = std::stod(f[4]);
      o.b.dest_daily_demand = std::stod(f[5]);
      o.price = std::stod(f[6]);
      int yc = std::stoi(f[7]), ys = std::stoi(f[8]);
      if ((yc != 0 && yc != 1) || (ys != 0 && ys != 1)) {
        throw std::invalid_argument("responses must be 0 or 1");
      }
      if (!(o.b.miles > 0.0)) throw std::invalid_argument("miles must be positive");
      o.y_c = yc ? 1 : -1;
      o.y_s = ys ? 1 : -1;
      o.n = static_cast<long>(out.size());
      out.push_back(o);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(lineno, e.what());
    }
  }
  return out;
}

}  // namespace

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["format"] = "brokerage-manifest/1";
  j["version"] = kVersion;
  j["command"] = m.command;
  j["config"] = m.config_path;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["out"] = m.out_dir;
  j["policies"] = m.policies;
  j["threads"] = m.threads;
  return j.dump(2) + "\n";
}

int cmd_bandit_sim(const CommandOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    KeyValueConfig config = load_config(options, true);
    apply_overrides(options, config, "bandit.");
    std::uint64_t seed = seed_of(options, config);
    BanditScenario scenario = make_bandit_scenario(config, seed);
    prepare_out_dir(options);
    write_manifest("bandit-sim", options, config, seed, names_of(scenario.run.policies),
                   scenario.run.threads);
    auto traces = run_bandit_experiment(scenario.run);
    emit_metrics(traces, options.out);
    log << "bandit-sim: " << traces.size() << " policies, " << scenario.run.reps << " reps, "
        << scenario.run.N << " steps -> " << options.out.string() << '\n';
    return kExitOk;
  });
}

int cmd_fleet_sim(const CommandOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    KeyValueConfig config = load_config(options, true);
    apply_overrides(options, config, "fleet_sim.");
    std::uint64_t seed = seed_of(options, config);
    bool test_mode = config.get_bool("run.test_mode", false);
    FleetRunConfig run = make_fleet_config(config, seed, test_mode);
    if (config.has("fleet_sim.trace_file")) {
      auto in = open_input(relative_to_config(options, config.get_string("fleet_sim.trace_file")));
      run.trace = read_trace_csv(in, run.booking);
    }
    if (config.has("fleet_sim.drivers_file")) {
      auto in =
          open_input(relative_to_config(options, config.get_string("fleet_sim.drivers_file")));
      run.drivers = read_drivers_csv(in, run.model.network, run.model.params);
    }
    if (config.has("fleet_sim.vfa_file")) {
      auto in = open_input(relative_to_config(options, config.get_string("fleet_sim.vfa_file")));
      run.initial_vfa.read_csv(in);
    }
    prepare_out_dir(options);
    write_manifest("fleet-sim", options, config, seed, names_of(run.policies), run.threads);
    auto traces = run_fleet_experiment(run);
    emit_metrics(traces, options.out);
    log << "fleet-sim: " << traces.size() << " policies, " << run.reps << " reps, "
        << run.batches << " batches -> " << options.out.string() << '\n';
    return kExitOk;
  });
}

int cmd_check_theory(const CommandOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    KeyValueConfig config = load_config(options, false);
    TheoryOptions theory;
    theory.seed = options.seed ? *options.seed : config.get_uint64("run.seed", theory.seed);
    theory.nonnegativity_draws = static_cast<int>(
        config.get_int("theory.nonnegativity_draws", theory.nonnegativity_draws));
    theory.consistency_seeds =
        static_cast<int>(config.get_int("theory.consistency_seeds", theory.consistency_seeds));
    theory.consistency_required = static_cast<int>(
        config.get_int("theory.consistency_required", theory.consistency_required));
    prepare_out_dir(options);
    write_manifest("check-theory", options, config, theory.seed, {}, 1);
    auto results = run_theory_suite(theory);
    std::ostringstream report;
    write_theory_report(report, results);
    write_file(options.out / "theory_report.csv", report.str());
    bool ok = true;
    for (const auto& r : results) {
      log << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
      ok = ok && r.passed;
    }
    return ok ? kExitOk : kExitCheckFailed;
  });
}

int cmd_gen_scenario(const CommandOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    KeyValueConfig config = load_config(options, false);
    std::uint64_t seed = seed_of(options, config);
    FleetRunConfig fleet = make_fleet_config(config, seed, true);
    BanditScenario bandit = make_bandit_scenario(config, seed);
    long n_obs = config.get_int("scenario.observations", 2000);
    if (n_obs < 0) throw ConfigError(config.line_of("scenario.observations"), "must be >= 0");
    prepare_out_dir(options);
    write_manifest("gen-scenario", options, config, seed, {}, 1);

    std::ostringstream net;
    net << "id,x,y,weight\n";
    for (const auto& r : fleet.model.network.regions()) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g\n", r.id, r.x, r.y, r.weight);
      net << buf;
    }
    write_file(options.out / "network.csv", net.str());

    std::ostringstream trace;
    write_trace_csv(trace, sample_horizon(fleet.booking, fleet.batches, derive_seed(seed, {1})));
    write_file(options.out / "trace.csv", trace.str());

    std::ostringstream drivers;
    write_drivers_csv(drivers, make_fleet(fleet.model.network, fleet.n_drivers,
                                          derive_seed(seed, {2}), fleet.team_fraction,
                                          fleet.booking.equipment_mix,
                                          fleet.model.params.hours_cap));
    write_file(options.out / "drivers.csv", drivers.str());

    const BanditRunConfig& run = bandit.run;
    write_file(options.out / "registry.json", registry_to_json(run.registry));
    write_file(options.out / "truth_carrier.json", weights_to_json(run.truth.alpha, run.registry));
    write_file(options.out / "truth_shipper.json", weights_to_json(run.truth.beta, run.registry));

    // Responses of the truth at uniformly random grid prices.
    Rng rng(derive_seed(seed, {3}));
    std::vector<ObservationRecord> obs;
    for (long n = 0; n < n_obs; ++n) {
      const LoadAttributes& b = run.contexts[n % run.contexts.size()];
      double p = run.grid.points[rng() % run.grid.size()];
      double fc = accept_prob(run.truth.alpha, carrier_features(run.registry, b, p));
      double fs = accept_prob(run.truth.beta, shipper_features(run.registry, b, p));
      int yc = uniform01(rng) < fc ? 1 : -1;
      int ys = uniform01(rng) < fs ? 1 : -1;
      obs.push_back({b, p, yc, ys, n});
    }
    std::ostringstream o;
    write_observations_csv(o, obs);
    write_file(options.out / "observations.csv", o.str());
    log << "gen-scenario: wrote scenario files to " << options.out.string() << '\n';
    return kExitOk;
  });
}

int cmd_fit(const CommandOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    KeyValueConfig config = load_config(options, false);
    if (options.data.empty()) throw UsageError("--data is required");
    auto in = open_input(options.data);
    std::vector<ObservationRecord> obs = read_observations_csv(in);
    if (obs.empty()) throw UsageError("no observations in " + options.data.string());
    int threshold = static_cast<int>(config.get_int("fit.indicator_threshold", 15));
    double strength = config.get_double("fit.l1_strength", 1.0);
    if (!(strength >= 0.0)) throw ConfigError(config.line_of("fit.l1_strength"), "must be >= 0");
    FitConfig fit;
    fit.max_iterations = static_cast<int>(config.get_int("fit.max_iterations", 2000));
    fit.tolerance = config.get_double("fit.tolerance", fit.tolerance);

    std::map<RegionId, int> origins, destinations;
    for (const auto& o : obs) {
      ++origins[o.b.origin];
      ++destinations[o.b.destination];
    }
    FeatureRegistry registry = build_feature_registry(origins, destinations, threshold);
    prepare_out_dir(options);
    write_manifest("fit", options, config, seed_of(options, config), {}, 1);
    write_file(options.out / "registry.json", registry_to_json(registry));
    const double lambda = strength / static_cast<double>(obs.size());
    for (Side side : {Side::Carrier, Side::Shipper}) {
      Dataset d{side, registry.dim(side), {}, {}};
      for (const auto& o : obs) {
        d.add(features(registry, o.b, o.price, side).values,
              side == Side::Carrier ? o.y_c : o.y_s);
      }
      FitResult r = fit_l1_logistic(d, lambda, fit);
      std::string name(side_name(side));
      write_file(options.out / (name + ".json"), weights_to_json(r.weights, registry));
      std::ostringstream csv;
      write_weights_csv(csv, registry, side, std::span<const WeightVector>(&r.weights, 1));
      write_file(options.out / (name + ".csv"), csv.str());
      log << "fit " << name << ": " << obs.size() << " records, " << r.iterations
          << " iterations" << (r.converged ? "" : " (not converged)") << '\n';
    }
    return kExitOk;
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Freight brokerage bidding simulator", "brokerage"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommandOptions options;
  std::string policies;
  std::uint64_t seed = 0;
  int threads = 0;
  auto common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", options.config, "key = value configuration file");
    if (config_required) c->required();
    sub->add_option("--seed", seed, "base seed (overrides run.seed)");
    sub->add_option("--out", options.out, "run directory")->required();
    sub->add_flag("--force", options.force, "replace a non-empty run directory");
    sub->add_option("--threads", threads, "worker thread cap");
  };
  auto* bandit = app.add_subcommand("bandit-sim", "contextual bandit regret experiment");
  common(bandit, true);
  bandit->add_option("--policies", policies, "comma separated policy list");
  auto* fleet = app.add_subcommand("fleet-sim", "fleet-coupled bidding experiment");
  common(fleet, true);
  fleet->add_option("--policies", policies, "comma separated policy list");
  auto* theory = app.add_subcommand("check-theory", "numerical checks of the KG properties");
  common(theory, false);
  auto* gen = app.add_subcommand("gen-scenario", "write a synthetic network, trace and truth");
  common(gen, false);
  auto* fit = app.add_subcommand("fit", "fit L1 logistic acceptance models to observations");
  common(fit, false);
  fit->add_option("--data", options.data, "observations CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed")) options.seed = seed;
    if (sub->count("--threads")) options.threads = threads;
  }
  if (!policies.empty()) options.policies = split_list(policies);

  if (bandit->parsed()) return cmd_bandit_sim(options, err);
  if (fleet->parsed()) return cmd_fleet_sim(options, err);
  if (theory->parsed()) return cmd_check_theory(options, err);
  if (gen->parsed()) return cmd_gen_scenario(options, err);
  return cmd_fit(options, err);
}

}  // namespace brokerage
