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

#include "bafdp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>

namespace bafdp {

using nlohmann::json;

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("metric operands differ in length");
  if (a.empty()) throw ShapeError("metric needs at least one value");
}

}  // namespace

double rmse(std::span<const double> targets, std::span<const double> preds) {
  check_pair(targets, preds);
  double acc = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double e = targets[i] - preds[i];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(targets.size()));
}

double mae(std::span<const double> targets, std::span<const double> preds) {
  check_pair(targets, preds);
  double acc = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) acc += std::abs(targets[i] - preds[i]);
  return acc / static_cast<double>(targets.size());
}

std::uint64_t comm_volume(std::uint64_t model_bytes, std::uint64_t participants, std::uint64_t rounds) {
  return 2 * model_bytes * participants * rounds;
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::client_step: return "client_step";
    case EventKind::server_step: return "server_step";
    case EventKind::dual_step: return "dual_step";
    case EventKind::eval: return "eval";
  }
  return "unknown";
}

EventKind parse_event_kind(const std::string& name) {
  if (name == "client_step") return EventKind::client_step;
  if (name == "server_step") return EventKind::server_step;
  if (name == "dual_step") return EventKind::dual_step;
  if (name == "eval") return EventKind::eval;
  throw Error("unknown trace event kind '" + name + "'");
}

std::string event_to_json(const TraceEvent& e) {
  json j = json::object();
  j["virtual_time"] = e.virtual_time;
  j["iteration"] = e.iteration;
  j["event"] = to_string(e.kind);
  if (e.client_id) j["client_id"] = *e.client_id;
  if (e.eps) j["eps"] = *e.eps;
  if (e.train_loss) j["train_loss"] = *e.train_loss;
  if (e.test_rmse) j["test_rmse"] = *e.test_rmse;
  if (e.test_mae) j["test_mae"] = *e.test_mae;
  if (e.stationarity_gap) j["stationarity_gap"] = *e.stationarity_gap;
  if (e.bytes_transferred) j["bytes_transferred"] = *e.bytes_transferred;
  if (e.eps_per_client) {
    json m = json::object();
    for (const auto& [id, eps] : *e.eps_per_client) m[std::to_string(id)] = eps;
    j["eps_per_client"] = std::move(m);
  }
  return j.dump();
}

void write_trace_header(std::ostream& out, const TrainingTrace& trace) {
  json h = json::object();
  h["event"] = "header";
  h["config_fingerprint"] = trace.config_fingerprint;
  h["seed"] = trace.seed;
  h["clients"] = trace.clients;
  out << h.dump() << '\n';
}

void write_trace_jsonl(std::ostream& out, const TrainingTrace& trace) {
  write_trace_header(out, trace);
  for (const auto& e : trace.events) out << event_to_json(e) << '\n';
}

TrainingTrace read_trace_jsonl(std::istream& in) {
  TrainingTrace trace;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& ex) {
      throw Error("trace line " + std::to_string(line_no) + ": " + ex.what());
    }
    const std::string kind = j.at("event").get<std::string>();
    if (kind == "header") {
      trace.config_fingerprint = j.at("config_fingerprint").get<std::string>();
      trace.seed = j.at("seed").get<std::uint64_t>();
      trace.clients = j.at("clients").get<std::size_t>();
      have_header = true;
      continue;
    }
    TraceEvent e;
    e.kind = parse_event_kind(kind);
    e.virtual_time = j.at("virtual_time").get<double>();
    e.iteration = j.at("iteration").get<std::int64_t>();
    if (j.contains("client_id")) e.client_id = j["client_id"].get<std::size_t>();
    if (j.contains("eps")) e.eps = j["eps"].get<double>();
    if (j.contains("train_loss")) e.train_loss = j["train_loss"].get<double>();
    if (j.contains("test_rmse")) e.test_rmse = j["test_rmse"].get<double>();
    if (j.contains("test_mae")) e.test_mae = j["test_mae"].get<double>();
    if (j.contains("stationarity_gap")) e.stationarity_gap = j["stationarity_gap"].get<double>();
    if (j.contains("bytes_transferred")) e.bytes_transferred = j["bytes_transferred"].get<std::uint64_t>();
    if (j.contains("eps_per_client")) {
      std::vector<std::pair<std::size_t, double>> m;
      for (const auto& [k, v] : j["eps_per_client"].items()) m.emplace_back(std::stoull(k), v.get<double>());
      std::sort(m.begin(), m.end());
      e.eps_per_client = std::move(m);
    }
    trace.events.push_back(std::move(e));
  }
  if (!have_header) throw Error("trace has no header line");
  return trace;
}

std::vector<std::pair<std::int64_t, double>> privacy_trajectory(const TrainingTrace& trace,
                                                                std::size_t client_id) {
  if (client_id >= trace.clients) {
    throw Error("client " + std::to_string(client_id) + " is not part of the trace");
  }
  std::vector<std::pair<std::int64_t, double>> out;
  for (const auto& e : trace.events) {
    if (e.kind == EventKind::client_step && e.client_id == client_id && e.eps) {
      out.emplace_back(e.iteration, *e.eps);
    }
  }
  return out;
}

void summarize(const TrainingTrace& trace, double gap_target, RunSummary& s) {
  s.final_rmse = s.final_mae = s.final_train_loss = s.final_gap = 0.0;
  s.iters_to_gap.reset();
  s.wall_virtual_time = 0.0;
  s.bytes_total = 0;
  s.iterations = 0;
  for (const auto& e : trace.events) {
    s.wall_virtual_time = std::max(s.wall_virtual_time, e.virtual_time);
    s.iterations = std::max(s.iterations, e.iteration);
    if (e.bytes_transferred) s.bytes_total += *e.bytes_transferred;
    if (e.kind != EventKind::eval) continue;
    if (e.test_rmse) s.final_rmse = *e.test_rmse;
    if (e.test_mae) s.final_mae = *e.test_mae;
    if (e.train_loss) s.final_train_loss = *e.train_loss;
    if (e.stationarity_gap) {
      s.final_gap = *e.stationarity_gap;
      if (!s.iters_to_gap && *e.stationarity_gap <= gap_target) s.iters_to_gap = e.iteration;
    }
  }
}

std::string summary_csv_header() {
  return "run_id,method,H,attack_ratio,budget_a,final_rmse,final_mae,iters_to_gap,wall_virtual_time,bytes_total";
}

std::string summary_csv_row(const RunSummary& s) {
  std::ostringstream os;
  os.precision(17);
  os << s.run_id << ',' << s.method << ',' << s.horizon << ',' << s.attack_ratio << ',' << s.budget_a << ','
     << s.final_rmse << ',' << s.final_mae << ',';
  if (s.iters_to_gap) os << *s.iters_to_gap;
  os << ',' << s.wall_virtual_time << ',' << s.bytes_total;
  return os.str();
}

}  // namespace bafdp
