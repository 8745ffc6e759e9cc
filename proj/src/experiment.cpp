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

#include "bafdp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bafdp {

namespace fs = std::filesystem;

PreparedData prepare_data(const RunConfig& cfg) {
  PreparedData out;
  std::vector<TrafficSeries> series;
  if (cfg.data.source == "synthetic") {
    series = generate_synthetic(cfg.data.n_cells, cfg.data.n_days, cfg.sim.seed, cfg.data.profile);
  } else {
    auto loaded = load_cdr_csv(cfg.data.source);
    series = std::move(loaded.series);
    out.report = std::move(loaded.report);
  }
  std::vector<WindowedDataset> train;
  std::vector<WindowedDataset> test;
  for (const auto& s : series) {
    auto split = split_train_test(make_windows(s, cfg.data.window, cfg.data.holidays), s.size());
    if (split.train.size() == 0) throw DataError("cell " + s.cell_id + " has no training windows");
    train.push_back(std::move(split.train));
    test.push_back(std::move(split.test));
  }
  const NormState norm = minmax_fit(train);
  for (auto& d : train) d = minmax_apply(d, norm);
  out.fed.norm = norm;
  out.fed.clients = partition_clients(train, cfg.sim.clients, cfg.data.partition, cfg.sim.seed);
  WindowedDataset all_test;
  all_test.cell_id = "test";
  all_test.spec = cfg.data.window;
  all_test.samples.d_x = cfg.data.window.input_dim();
  all_test.samples.d_y = cfg.data.window.horizon;
  for (const auto& d : test) {
    const auto n = minmax_apply(d, norm);
    all_test.samples.inputs.insert(all_test.samples.inputs.end(), n.samples.inputs.begin(), n.samples.inputs.end());
    all_test.samples.targets.insert(all_test.samples.targets.end(), n.samples.targets.begin(), n.samples.targets.end());
    all_test.end_index.insert(all_test.end_index.end(), n.end_index.begin(), n.end_index.end());
  }
  all_test.norm = norm;
  out.fed.test = std::move(all_test);
  return out;
}

namespace {

SimConfig resolve_sim(const RunConfig& cfg) {
  SimConfig sim = cfg.sim;
  sim.byzantine = static_cast<std::size_t>(std::llround(cfg.attack_ratio * static_cast<double>(sim.clients)));
  sim.fingerprint = config_fingerprint(cfg);
  return sim;
}

// Removes the files it tracks (and the directory if it created it) unless
// released.
class OutputGuard {
 public:
  explicit OutputGuard(const fs::path& dir) : dir_(dir) {
    if (!fs::exists(dir)) {
      fs::create_directories(dir);
      created_ = true;
    }
  }
  ~OutputGuard() {
    if (released_) return;
    std::error_code ec;
    if (created_) {
      fs::remove_all(dir_, ec);
      return;
    }
    for (const auto& f : files_) fs::remove(f, ec);
  }
  fs::path track(const std::string& name) {
    files_.push_back(dir_ / name);
    return files_.back();
  }
  void release() { released_ = true; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  bool created_ = false;
  bool released_ = false;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

SimResult run_simulation(const RunConfig& cfg, const PreparedData& data) {
  const auto issues = validate_config(cfg);
  if (!issues.empty()) throw ConfigError(issues);
  return simulate(resolve_sim(cfg), data.fed);
}

RunSummary run_to_dir(const RunConfig& cfg, const fs::path& out, const std::string& run_id) {
  const auto issues = validate_config(cfg);
  if (!issues.empty()) throw ConfigError(issues);
  OutputGuard guard(out);
  const PreparedData data = prepare_data(cfg);
  const SimConfig sim = resolve_sim(cfg);
  validate_sim(sim, data.fed);

  const fs::path trace_path = guard.track("trace.jsonl");
  std::ofstream trace(trace_path, std::ios::binary);
  if (!trace) throw Error("cannot write " + trace_path.string());
  TrainingTrace header;
  header.config_fingerprint = sim.fingerprint;
  header.seed = sim.seed;
  header.clients = sim.clients;
  write_trace_header(trace, header);
  SimResult res = simulate(sim, data.fed, [&](const TraceEvent& e) { trace << event_to_json(e) << '\n'; });
  trace.close();
  if (!trace) throw Error("failed writing " + trace_path.string());

  res.summary.run_id = run_id;
  write_text(guard.track("summary.csv"), summary_csv_header() + "\n" + summary_csv_row(res.summary) + "\n");
  write_text(guard.track("resolved.ini"), resolved_config(cfg));
  if (data.report) write_text(guard.track("load_report.txt"), data.report->summary());
  guard.release();
  return res.summary;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "budget_a") return SweepAxis::budget_a;
  if (name == "attack_ratio") return SweepAxis::attack_ratio;
  if (name == "S") return SweepAxis::quorum;
  throw ConfigError({"sweep axis must be one of budget_a, attack_ratio, S (got '" + name + "')"});
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::budget_a: return "budget_a";
    case SweepAxis::attack_ratio: return "attack_ratio";
    case SweepAxis::quorum: return "S";
  }
  return "unknown";
}

void apply_axis(RunConfig& cfg, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::budget_a:
      cfg.sim.privacy.budget_a = value;
      break;
    case SweepAxis::attack_ratio:
      cfg.attack_ratio = value;
      break;
    case SweepAxis::quorum:
      if (!(value >= 1.0) || value != std::floor(value)) throw ConfigError({"protocol.S: sweep values must be integers >= 1"});
      cfg.sim.quorum = static_cast<std::size_t>(value);
      break;
  }
}

namespace {

std::string value_label(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<RunSummary> sweep(const RunConfig& cfg, SweepAxis axis, std::vector<double> values,
                              const fs::path& out) {
  if (values.empty()) throw ConfigError({"sweep needs at least one value"});
  std::sort(values.begin(), values.end());
  std::vector<std::string> issues;
  std::vector<RunConfig> runs;
  for (double v : values) {
    RunConfig c = cfg;
    try {
      apply_axis(c, axis, v);
    } catch (const ConfigError& e) {
      for (const auto& s : e.issues()) issues.push_back(s);
      continue;
    }
    for (const auto& s : validate_config(c)) issues.push_back(to_string(axis) + "=" + value_label(v) + ": " + s);
    runs.push_back(std::move(c));
  }
  if (!issues.empty()) throw ConfigError(issues);
  std::vector<RunSummary> rows;
  std::string csv = summary_csv_header() + "\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string id = to_string(axis) + "=" + value_label(values[i]);
    rows.push_back(run_to_dir(runs[i], out / (to_string(axis) + "_" + value_label(values[i])), id));
    csv += summary_csv_row(rows.back()) + "\n";
  }
  fs::create_directories(out);
  write_text(out / ("sweep_" + to_string(axis) + ".csv"), csv);
  return rows;
}

std::vector<RunSummary> compare(const RunConfig& cfg, const fs::path& out) {
  const auto issues = validate_config(cfg);
  if (!issues.empty()) throw ConfigError(issues);
  const PreparedData data = prepare_data(cfg);
  std::vector<RunSummary> rows;
  std::string csv = summary_csv_header() + "\n";
  std::string curves = "method,virtual_time,iteration,train_loss,test_rmse,test_mae\n";
  fs::create_directories(out);
  for (Method m : {Method::bafdp, Method::bsfdp, Method::fedavg, Method::rsa_no_dp}) {
    RunConfig c = cfg;
    c.sim.method = m;
    SimResult res = run_simulation(c, data);
    res.summary.run_id = to_string(m);
    rows.push_back(res.summary);
    csv += summary_csv_row(res.summary) + "\n";
    std::ostringstream os;
    os.precision(17);
    for (const auto& e : res.trace.events) {
      if (e.kind != EventKind::eval) continue;
      os << to_string(m) << ',' << e.virtual_time << ',' << e.iteration << ',' << e.train_loss.value_or(0.0) << ','
         << e.test_rmse.value_or(0.0) << ',' << e.test_mae.value_or(0.0) << '\n';
    }
    curves += os.str();
  }
  write_text(out / "compare.csv", csv);
  write_text(out / "curves.csv", curves);
  return rows;
}

}  // namespace bafdp
