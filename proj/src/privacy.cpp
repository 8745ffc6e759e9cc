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

#include "bafdp/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bafdp {

std::vector<std::string> PrivacyConfig::problems() const {
  std::vector<std::string> out;
  if (!(delta > 0.0 && delta < 1.0)) out.push_back("delta must lie in (0, 1)");
  if (!(sensitivity > 0.0)) out.push_back("sensitivity must be positive");
  if (!(epsilon_min > 0.0)) out.push_back("epsilon_min must be positive");
  if (!(budget_a > epsilon_min)) out.push_back("budget_a must exceed epsilon_min");
  if (d < 1) out.push_back("d must be >= 1");
  if (d == 2) out.push_back("d must not equal 2 (radius formula excludes it)");
  if (!(gamma > 0.0 && gamma < 1.0)) out.push_back("gamma must lie in (0, 1)");
  if (!(beta > 1.0)) out.push_back("beta must exceed 1");
  if (!(c2 > 0.0)) out.push_back("c2 must be positive");
  if (!(c1 > gamma)) out.push_back("c1 must exceed gamma so that log(c1/gamma) > 0");
  return out;
}

void PrivacyConfig::validate() const {
  const auto issues = problems();
  if (issues.empty()) return;
  std::string msg = "invalid privacy config:";
  for (const auto& s : issues) msg += " " + s + ";";
  throw std::invalid_argument(msg);
}

double noise_constant(const PrivacyConfig& cfg) {
  return std::sqrt(2.0 * cfg.d * std::log(1.25 / cfg.delta)) * cfg.sensitivity;
}

NoiseScale gaussian_sigma(double eps, const PrivacyConfig& cfg) {
  if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (eps < cfg.epsilon_min) throw std::invalid_argument("epsilon below epsilon_min");
  const double c3 = noise_constant(cfg);
  return {c3 / eps, c3};
}

Batch perturb_batch(const Batch& batch, double sigma, CounterStream& rng) {
  if (sigma < 0.0) throw std::invalid_argument("noise scale must be nonnegative");
  Batch out = batch;
  if (sigma == 0.0) return out;
  for (double& x : out.inputs) x += sigma * rng.normal();
  return out;
}

double eta_radius(std::size_t n, const PrivacyConfig& cfg) {
  if (n == 0) throw std::invalid_argument("sample count must be >= 1");
  if (!(cfg.c1 > cfg.gamma)) throw std::invalid_argument("c1 must exceed gamma");
  const double log_term = std::log(cfg.c1 / cfg.gamma);
  const double threshold = log_term / cfg.c2;
  const double base = log_term / (cfg.c2 * static_cast<double>(n));
  const double exponent = static_cast<double>(n) >= threshold
                              ? 1.0 / std::max(static_cast<double>(cfg.d), 2.0)
                              : 1.0 / cfg.beta;
  return std::pow(base, exponent);
}

}  // namespace bafdp
