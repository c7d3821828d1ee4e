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

#ifndef BROKERAGE_CLI_HPP_
#define BROKERAGE_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace brokerage {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;

// Written as manifest.json in the run directory before any other output.
struct RunManifest {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string config_hash;
  std::vector<std::string> policies;
  int threads = 1;
};

std::string manifest_to_json(const RunManifest& manifest);

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;
  std::vector<std::string> policies;  // empty keeps the configured list
  std::filesystem::path data;         // fit only
  bool force = false;
  std::optional<int> threads;
};

int cmd_bandit_sim(const CommandOptions& options, std::ostream& log);
int cmd_fleet_sim(const CommandOptions& options, std::ostream& log);
int cmd_check_theory(const CommandOptions& options, std::ostream& log);
int cmd_gen_scenario(const CommandOptions& options, std::ostream& log);
int cmd_fit(const CommandOptions& options, std::ostream& log);

// Parses argv and dispatches to a subcommand; returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace brokerage

#endif  // BROKERAGE_CLI_HPP_
