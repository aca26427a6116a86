/* Copyright 2026 The PADA Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Command-line front door: key=value run configurations and subcommand
// dispatch.

#ifndef PADA_TOOLS_CLI_HPP_
#define PADA_TOOLS_CLI_HPP_

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pada/harness.hpp"

namespace pada::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Bad flags, config keys or values; maps to kExitUsage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

// Every recognised key, in documentation order.
const std::vector<ConfigKey>& config_keys();

// Lines "key = value"; blank lines and lines starting with '#' are skipped.
std::map<std::string, std::string> parse_config_text(std::string_view text);

class RunConfig {
 public:
  // Defaults, then `file` entries, then `flags`, each layer overriding the last.
  static RunConfig merge(const std::map<std::string, std::string>& file,
                         const std::map<std::string, std::string>& flags);

  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  // FNV-1a 64 over the sorted "key=value" lines, excluding `out`; hex.
  std::string hash() const;
  // Canonical form, itself a valid config file.
  std::string to_text() const;

  ExperimentConfig experiment() const;
  SyntheticSpec synthetic() const;
  JsonlSchema schema() const;
  MetricKind metric() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Runs one command line (without the program name); returns the exit code.
int run(const std::vector<std::string>& args);

}  // namespace pada::cli

#endif  // PADA_TOOLS_CLI_HPP_
