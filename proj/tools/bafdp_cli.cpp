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

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bafdp/config.hpp"
#include "bafdp/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInvalid = 2;

bafdp::RunConfig load(const std::string& path, const std::optional<std::uint64_t>& seed,
                      const std::optional<std::string>& out) {
  bafdp::RunConfig cfg = bafdp::load_config(path);
  if (seed) cfg.sim.seed = *seed;
  if (out) cfg.output_dir = *out;
  return cfg;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty()) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw bafdp::ConfigError({"--values: '" + item + "' is not a number"});
      }
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Byzantine-robust asynchronous federated learning simulator with local differential privacy"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  app.add_option("--seed", seed, "override sim.seed");
  app.add_option("--out", out, "override output.dir");

  std::string config;
  auto* run = app.add_subcommand("run", "run one configuration");
  run->add_option("config", config, "INI config file")->required();

  auto* sw = app.add_subcommand("sweep", "run one configuration per axis value");
  sw->add_option("config", config, "INI config file")->required();
  std::string axis;
  std::string values;
  sw->add_option("--axis", axis, "budget_a | attack_ratio | S")->required();
  sw->add_option("--values", values, "comma-separated values")->required();

  auto* cmp = app.add_subcommand("compare", "run bafdp, bsfdp, fedavg and rsa_no_dp side by side");
  cmp->add_option("config", config, "INI config file")->required();

  auto* show = app.add_subcommand("resolve", "print the resolved configuration and its fingerprint");
  show->add_option("config", config, "INI config file")->required();

  for (auto* sub : {run, sw, cmp, show}) {
    sub->add_option("--seed", seed, "override sim.seed");
    sub->add_option("--out", out, "override output.dir");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    const bafdp::RunConfig cfg = load(config, seed, out);
    if (*run) {
      const auto s = bafdp::run_to_dir(cfg, cfg.output_dir, "run");
      std::cout << bafdp::summary_csv_header() << '\n' << bafdp::summary_csv_row(s) << '\n';
    } else if (*sw) {
      const auto rows = bafdp::sweep(cfg, bafdp::parse_sweep_axis(axis), parse_values(values), cfg.output_dir);
      std::cout << bafdp::summary_csv_header() << '\n';
      for (const auto& r : rows) std::cout << bafdp::summary_csv_row(r) << '\n';
    } else if (*cmp) {
      const auto rows = bafdp::compare(cfg, cfg.output_dir);
      std::cout << bafdp::summary_csv_header() << '\n';
      for (const auto& r : rows) std::cout << bafdp::summary_csv_row(r) << '\n';
    } else if (*show) {
      std::cout << bafdp::resolved_config(cfg) << "\n# fingerprint " << bafdp::config_fingerprint(cfg) << '\n';
    }
  } catch (const bafdp::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
