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

#ifndef BROKERAGE_CONFIG_HPP_
#define BROKERAGE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace brokerage {

// Raised for malformed or invalid configuration. `line()` is 0 when the
// problem is not tied to a single line (e.g. a missing required key).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

// Flat `key = value` configuration with `[section]` prefixes and `#`
// comments. Keys inside a section are stored as `section.key`.
//
//   [bandit]
//   steps = 3000        # becomes bandit.steps
//   policies = kg, exploit
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

  // Keys starting with `prefix`, in sorted order.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  // 0 when the key was set programmatically.
  int line_of(const std::string& key) const;

  // Throws ConfigError naming the first key that no getter has read.
  void reject_unused() const;

  // Canonical text (sorted `key = value` lines); used for hashing.
  std::string canonical() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  const Entry& require(const std::string& key) const;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

std::vector<std::string> split_list(const std::string& text, char sep = ',');
std::string trim(const std::string& text);

// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace brokerage

#endif  // BROKERAGE_CONFIG_HPP_
