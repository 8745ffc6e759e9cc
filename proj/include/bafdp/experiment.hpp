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

#ifndef BAFDP_EXPERIMENT_HPP_
#define BAFDP_EXPERIMENT_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "bafdp/config.hpp"
#include "bafdp/protocol.hpp"

namespace bafdp {

struct PreparedData {
  FederatedData fed;
  std::optional<LoadReport> report;
};

PreparedData prepare_data(const RunConfig& cfg);

// Validates, resolves B and the fingerprint, and runs the simulation.
SimResult run_simulation(const RunConfig& cfg, const PreparedData& data);

// Runs one configuration and writes trace.jsonl, summary.csv and
// resolved.ini into `out`. Files already written are removed on failure.
RunSummary run_to_dir(const RunConfig& cfg, const std::filesystem::path& out, const std::string& run_id);

enum class SweepAxis { budget_a, attack_ratio, quorum };

SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis axis);
void apply_axis(RunConfig& cfg, SweepAxis axis, double value);

std::vector<RunSummary> sweep(const RunConfig& cfg, SweepAxis axis, std::vector<double> values,
                              const std::filesystem::path& out);

std::vector<RunSummary> compare(const RunConfig& cfg, const std::filesystem::path& out);

}  // namespace bafdp

#endif  // BAFDP_EXPERIMENT_HPP_
