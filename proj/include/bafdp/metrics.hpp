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

#ifndef BAFDP_METRICS_HPP_
#define BAFDP_METRICS_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bafdp/core_math.hpp"

namespace bafdp {

double rmse(std::span<const double> targets, std::span<const double> preds);
double mae(std::span<const double> targets, std::span<const double> preds);

std::uint64_t comm_volume(std::uint64_t model_bytes, std::uint64_t participants, std::uint64_t rounds);

enum class EventKind { client_step, server_step, dual_step, eval };

std::string to_string(EventKind kind);
EventKind parse_event_kind(const std::string& name);

struct TraceEvent {
  double virtual_time = 0.0;
  std::int64_t iteration = 0;
  EventKind kind = EventKind::eval;
  std::optional<std::size_t> client_id;
  std::optional<double> eps;  // client_step: budget in effect at activation
  std::optional<double> train_loss;
  std::optional<double> test_rmse;
  std::optional<double> test_mae;
  std::optional<double> stationarity_gap;
  std::optional<std::uint64_t> bytes_transferred;
  std::optional<std::vector<std::pair<std::size_t, double>>> eps_per_client;

  bool operator==(const TraceEvent&) const = default;
};

struct TrainingTrace {
  std::string config_fingerprint;
  std::uint64_t seed = 0;
  std::size_t clients = 0;
  std::vector<TraceEvent> events;

  bool operator==(const TrainingTrace&) const = default;
};

std::string event_to_json(const TraceEvent& event);
void write_trace_header(std::ostream& out, const TrainingTrace& trace);
void write_trace_jsonl(std::ostream& out, const TrainingTrace& trace);
TrainingTrace read_trace_jsonl(std::istream& in);

std::vector<std::pair<std::int64_t, double>> privacy_trajectory(const TrainingTrace& trace,
                                                                std::size_t client_id);

struct RunSummary {
  std::string run_id;
  std::string method;
  std::size_t horizon = 1;
  double attack_ratio = 0.0;
  double budget_a = 1.0;
  double final_rmse = 0.0;
  double final_mae = 0.0;
  double final_train_loss = 0.0;
  double final_gap = 0.0;
  std::optional<std::int64_t> iters_to_gap;
  double wall_virtual_time = 0.0;
  std::uint64_t bytes_total = 0;
  std::int64_t iterations = 0;

  bool operator==(const RunSummary&) const = default;
};

// Fills the trace-derived fields of `summary` (everything after budget_a).
void summarize(const TrainingTrace& trace, double gap_target, RunSummary& summary);

std::string summary_csv_header();
std::string summary_csv_row(const RunSummary& summary);

}  // namespace bafdp

#endif  // BAFDP_METRICS_HPP_
