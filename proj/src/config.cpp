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

#include "bafdp/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace bafdp {

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string msg = "invalid configuration:";
  for (const auto& s : issues) msg += "\n  " + s;
  return msg;
}

std::string fmt(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

template <typename T>
std::string fmt_int(T v) {
  return std::to_string(v);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) throw Error("expected a number, got '" + text + "'");
  return v;
}

template <typename T>
T to_uint(const std::string& text) {
  const std::string s = trim(text);
  T v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    throw Error("expected a nonnegative integer, got '" + text + "'");
  }
  return v;
}

std::int64_t to_int(const std::string& text) {
  const std::string s = trim(text);
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) throw Error("expected an integer, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw Error("expected true or false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define BAFDP_DOUBLE(sec, name, expr)                                       \
  Field {                                                                   \
    sec, name, [](const RunConfig& c) { return fmt(c.expr); },              \
        [](RunConfig& c, const std::string& v) { c.expr = to_double(v); } \
  }
#define BAFDP_SIZE(sec, name, expr)                                                    \
  Field {                                                                              \
    sec, name, [](const RunConfig& c) { return fmt_int(c.expr); },                     \
        [](RunConfig& c, const std::string& v) { c.expr = to_uint<std::size_t>(v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"model", "hidden",
            [](const RunConfig& c) {
              std::vector<std::string> parts;
              for (auto w : c.sim.hidden) parts.push_back(std::to_string(w));
              return join(parts);
            },
            [](RunConfig& c, const std::string& v) { c.sim.hidden = parse_size_list(v); }},
      BAFDP_DOUBLE("model", "kappa", sim.kappa),
      Field{"model", "power_iters", [](const RunConfig& c) { return fmt_int(c.sim.power_iters); },
            [](RunConfig& c, const std::string& v) { c.sim.power_iters = static_cast<int>(to_int(v)); }},

      BAFDP_DOUBLE("privacy", "delta", sim.privacy.delta),
      BAFDP_DOUBLE("privacy", "sensitivity", sim.privacy.sensitivity),
      BAFDP_DOUBLE("privacy", "budget_a", sim.privacy.budget_a),
      BAFDP_DOUBLE("privacy", "epsilon_min", sim.privacy.epsilon_min),
      BAFDP_DOUBLE("privacy", "gamma", sim.privacy.gamma),
      BAFDP_DOUBLE("privacy", "beta", sim.privacy.beta),
      BAFDP_DOUBLE("privacy", "c1", sim.privacy.c1),
      BAFDP_DOUBLE("privacy", "c2", sim.privacy.c2),

      Field{"protocol", "method", [](const RunConfig& c) { return to_string(c.sim.method); },
            [](RunConfig& c, const std::string& v) { c.sim.method = parse_method(trim(v)); }},
      BAFDP_SIZE("protocol", "R", sim.clients),
      BAFDP_SIZE("protocol", "S", sim.quorum),
      Field{"protocol", "T", [](const RunConfig& c) { return fmt_int(c.sim.iterations); },
            [](RunConfig& c, const std::string& v) { c.sim.iterations = to_int(v); }},
      BAFDP_SIZE("protocol", "batch_size", sim.batch_size),
      BAFDP_DOUBLE("protocol", "psi", sim.hp.psi),
      BAFDP_DOUBLE("protocol", "step_omega", sim.hp.step_omega),
      BAFDP_DOUBLE("protocol", "step_eps", sim.hp.step_eps),
      BAFDP_DOUBLE("protocol", "step_z", sim.hp.step_z),
      BAFDP_DOUBLE("protocol", "step_lambda", sim.hp.step_lambda),
      BAFDP_DOUBLE("protocol", "step_phi", sim.hp.step_phi),
      BAFDP_DOUBLE("protocol", "mu1", sim.hp.mu1),
      BAFDP_DOUBLE("protocol", "mu2", sim.hp.mu2),
      BAFDP_DOUBLE("protocol", "mu3", sim.hp.mu3),
      BAFDP_DOUBLE("protocol", "mu4", sim.hp.mu4),
      BAFDP_DOUBLE("protocol", "reg_floor_lambda", sim.reg_floor_lambda),
      BAFDP_DOUBLE("protocol", "reg_floor_phi", sim.reg_floor_phi),
      Field{"protocol", "eval_every", [](const RunConfig& c) { return fmt_int(c.sim.eval_every); },
            [](RunConfig& c, const std::string& v) { c.sim.eval_every = to_int(v); }},
      BAFDP_DOUBLE("protocol", "gap_target", sim.gap_target),

      Field{"attack", "kind", [](const RunConfig& c) { return to_string(c.sim.attack.kind); },
            [](RunConfig& c, const std::string& v) { c.sim.attack.kind = parse_attack_kind(trim(v)); }},
      BAFDP_DOUBLE("attack", "ratio", attack_ratio),
      BAFDP_DOUBLE("attack", "scale", sim.attack.scale),
      Field{"attack", "collusion_seed", [](const RunConfig& c) { return fmt_int(c.sim.attack.collusion_seed); },
            [](RunConfig& c, const std::string& v) { c.sim.attack.collusion_seed = to_uint<std::uint64_t>(v); }},

      Field{"data", "source", [](const RunConfig& c) { return c.data.source; },
            [](RunConfig& c, const std::string& v) { c.data.source = trim(v); }},
      BAFDP_SIZE("data", "n_cells", data.n_cells),
      BAFDP_SIZE("data", "n_days", data.n_days),
      BAFDP_SIZE("data", "n_c", data.window.n_c),
      BAFDP_SIZE("data", "n_p", data.window.n_p),
      BAFDP_SIZE("data", "H", data.window.horizon),
      Field{"data", "partition", [](const RunConfig& c) { return to_string(c.data.partition); },
            [](RunConfig& c, const std::string& v) { c.data.partition = parse_partition_scheme(trim(v)); }},
      Field{"data", "holidays", [](const RunConfig& c) { return join(c.data.holidays); },
            [](RunConfig& c, const std::string& v) {
              c.data.holidays = split_list(v);
              for (const auto& h : c.data.holidays) parse_date_days(h);
            }},
      BAFDP_DOUBLE("data", "base_min", data.profile.base_min),
      BAFDP_DOUBLE("data", "base_max", data.profile.base_max),
      BAFDP_DOUBLE("data", "daily_amp_min", data.profile.daily_amp_min),
      BAFDP_DOUBLE("data", "daily_amp_max", data.profile.daily_amp_max),
      BAFDP_DOUBLE("data", "weekly_amp_min", data.profile.weekly_amp_min),
      BAFDP_DOUBLE("data", "weekly_amp_max", data.profile.weekly_amp_max),
      BAFDP_DOUBLE("data", "surge_rate", data.profile.surge_rate),
      BAFDP_DOUBLE("data", "surge_log_mu", data.profile.surge_log_mu),
      BAFDP_DOUBLE("data", "surge_log_sigma", data.profile.surge_log_sigma),
      BAFDP_DOUBLE("data", "noise_frac", data.profile.noise_frac),

      Field{"sim", "seed", [](const RunConfig& c) { return fmt_int(c.sim.seed); },
            [](RunConfig& c, const std::string& v) { c.sim.seed = to_uint<std::uint64_t>(v); }},
      BAFDP_DOUBLE("sim", "delay_log_mu", sim.delay.log_mu),
      BAFDP_DOUBLE("sim", "delay_log_sigma", sim.delay.log_sigma),
      BAFDP_SIZE("sim", "stragglers", sim.delay.stragglers),
      BAFDP_DOUBLE("sim", "straggler_multiplier", sim.delay.straggler_multiplier),
      Field{"sim", "record_client_events",
            [](const RunConfig& c) { return std::string(c.sim.record_client_events ? "true" : "false"); },
            [](RunConfig& c, const std::string& v) { c.sim.record_client_events = to_bool(v); }},

      Field{"output", "dir", [](const RunConfig& c) { return c.output_dir.string(); },
            [](RunConfig& c, const std::string& v) { c.output_dir = trim(v); }},
  };
  return table;
}

#undef BAFDP_DOUBLE
#undef BAFDP_SIZE

std::string render(const RunConfig& cfg, bool include_output) {
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields()) {
    if (!include_output && f.section == "output") continue;
    if (f.section != section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    os << f.key << " = " << f.get(cfg) << '\n';
  }
  return os.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : Error(join_issues(issues)), issues_(std::move(issues)) {}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) out.push_back(to_uint<std::size_t>(item));
  return out;
}

RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({std::string("syntax: ") + e.message() + " at line " + std::to_string(e.line())});
  }
  RunConfig cfg;
  std::vector<std::string> issues;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      issues.push_back(section + ": keys must live inside a [section]");
      continue;
    }
    for (const auto& [key, value] : body) {
      const std::string path = section + "." + key;
      const auto& table = fields();
      const auto it = std::find_if(table.begin(), table.end(),
                                   [&](const Field& f) { return f.section == section && f.key == key; });
      if (it == table.end()) {
        issues.push_back(path + ": unknown key");
        continue;
      }
      try {
        it->set(cfg, value.get_value<std::string>());
      } catch (const std::exception& e) {
        issues.push_back(path + ": " + e.what());
      }
    }
  }
  for (auto& s : validate_config(cfg)) issues.push_back(std::move(s));
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file " + path.string()});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> validate_config(const RunConfig& c) {
  std::vector<std::string> out;
  const auto& s = c.sim;
  if (s.clients < 1) out.push_back("protocol.R: must be >= 1");
  if (s.quorum < 1) out.push_back("protocol.S: must be >= 1");
  if (s.quorum > s.clients) {
    out.push_back("protocol.S: must not exceed protocol.R (" + std::to_string(s.clients) + ")");
  }
  if (s.iterations < 1) out.push_back("protocol.T: must be >= 1");
  if (s.eval_every < 1) out.push_back("protocol.eval_every: must be >= 1");
  if (!(s.gap_target >= 0.0)) out.push_back("protocol.gap_target: must be >= 0");
  if (!(s.reg_floor_lambda >= 0.0)) out.push_back("protocol.reg_floor_lambda: must be >= 0");
  if (!(s.reg_floor_phi >= 0.0)) out.push_back("protocol.reg_floor_phi: must be >= 0");
  for (const auto& p : s.hp.problems()) {
    const auto key = p.substr(0, p.find(' '));
    if (key == "budget_a" || key == "epsilon_min") continue;  // mirrored from [privacy]
    out.push_back("protocol." + p);
  }
  if (s.power_iters < 1) out.push_back("model.power_iters: must be >= 1");
  if (!(s.kappa >= 0.0) || !std::isfinite(s.kappa)) out.push_back("model.kappa: must be >= 0");
  for (auto w : s.hidden) {
    if (w == 0) out.push_back("model.hidden: layer widths must be >= 1");
  }
  PrivacyConfig p = s.privacy;
  p.d = static_cast<int>(c.data.window.input_dim() + c.data.window.horizon);
  for (const auto& issue : p.problems()) out.push_back("privacy." + issue);
  if (p.epsilon_min * p.epsilon_min > s.hp.mu2) out.push_back("protocol.mu2: must admit privacy.epsilon_min");
  if (!(c.attack_ratio >= 0.0 && c.attack_ratio < 1.0)) out.push_back("attack.ratio: must lie in [0, 1)");
  if (!std::isfinite(s.attack.scale)) out.push_back("attack.scale: must be finite");
  const auto byz = static_cast<std::size_t>(std::llround(c.attack_ratio * static_cast<double>(s.clients)));
  if (s.clients >= 1 && byz >= s.clients) out.push_back("attack.ratio: leaves no honest client");
  if (c.data.window.horizon != 1 && c.data.window.horizon != 24) out.push_back("data.H: must be 1 or 24");
  if (c.data.window.n_c < 1) out.push_back("data.n_c: must be >= 1");
  if (c.data.source == "synthetic") {
    if (c.data.n_cells < 1) out.push_back("data.n_cells: must be >= 1");
    const std::size_t need_hours = c.data.window.min_series_length() + kTestHours;
    if (c.data.n_days * kHoursPerDay < need_hours + 1) {
      out.push_back("data.n_days: needs at least " + std::to_string((need_hours + kHoursPerDay) / kHoursPerDay) +
                    " days for the windows plus the 7-day test span");
    }
    if (c.data.partition == PartitionScheme::by_cell && c.data.n_cells < s.clients) {
      out.push_back("data.n_cells: by_cell partition needs at least protocol.R cells");
    }
    const auto& pr = c.data.profile;
    if (!(pr.base_min > 0.0 && pr.base_max >= pr.base_min)) out.push_back("data.base_min: need 0 < base_min <= base_max");
    if (!(pr.surge_rate >= 0.0)) out.push_back("data.surge_rate: must be >= 0");
    if (!(pr.noise_frac >= 0.0)) out.push_back("data.noise_frac: must be >= 0");
    if (!(pr.surge_log_sigma >= 0.0)) out.push_back("data.surge_log_sigma: must be >= 0");
  } else if (c.data.source.empty()) {
    out.push_back("data.source: must be 'synthetic' or a CSV path");
  }
  if (!(s.delay.log_sigma >= 0.0) || !std::isfinite(s.delay.log_mu)) {
    out.push_back("sim.delay_log_sigma: delays need finite log_mu and log_sigma >= 0");
  }
  if (!(s.delay.straggler_multiplier > 0.0)) out.push_back("sim.straggler_multiplier: must be positive");
  if (s.delay.stragglers > s.clients) out.push_back("sim.stragglers: must not exceed protocol.R");
  return out;
}

std::string resolved_config(const RunConfig& cfg) { return render(cfg, true); }

std::string config_fingerprint(const RunConfig& cfg) {
  const std::string text = render(cfg, false);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace bafdp
