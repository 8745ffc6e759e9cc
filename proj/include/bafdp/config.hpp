// Copyright 2026 The BAFDP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BAFDP_CONFIG_HPP_
#define BAFDP_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bafdp/data.hpp"
#include "bafdp/protocol.hpp"

namespace bafdp {

// Raised when a configuration fails validation; carries every issue found.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" or a CSV path
  std::size_t n_cells = 10;
  std::size_t n_days = 30;
  WindowSpec window;
  PartitionScheme partition = PartitionScheme::by_cell;
  std::vector<std::string> holidays;
  SyntheticProfile profile;
};

struct RunConfig {
  SimConfig sim;
  double attack_ratio = 0.0;
  DataConfig data;
  std::filesystem::path output_dir = "out";
};

// Parses INI text. Unknown keys and bad values are collected into a single
// ConfigError with `section.key` paths.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Every cross-field constraint; empty when valid.
std::vector<std::string> validate_config(const RunConfig& cfg);

// Fully resolved INI text with all defaults materialized.
std::string resolved_config(const RunConfig& cfg);

// FNV-1a hash (hex) of the resolved config without the output section.
std::string config_fingerprint(const RunConfig& cfg);

std::vector<std::size_t> parse_size_list(const std::string& text);

}  // namespace bafdp

#endif  // BAFDP_CONFIG_HPP_
