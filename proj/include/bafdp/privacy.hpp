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

#ifndef BAFDP_PRIVACY_HPP_
#define BAFDP_PRIVACY_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "bafdp/core_math.hpp"
#include "bafdp/rng.hpp"

namespace bafdp {

struct PrivacyConfig {
  double delta = 1e-5;
  double sensitivity = 1.0;   // per-feature range after min-max scaling
  double budget_a = 1.0;      // cap on every client's epsilon
  double epsilon_min = 1e-2;
  int d = 1;                  // d_x + d_y
  double gamma = 0.05;        // radius holds with confidence 1 - gamma
  double beta = 2.0;          // light-tail exponent
  double c1 = 2.0;
  double c2 = 1.0;

  // Human-readable violations, empty when valid. Keys are field names.
  std::vector<std::string> problems() const;
  void validate() const;
};

struct NoiseScale {
  double sigma = 0.0;
  double c3 = 0.0;
};

// c3 = sqrt(2 d ln(1.25/delta)) * sensitivity.
double noise_constant(const PrivacyConfig& cfg);

// Gaussian mechanism scale sigma = c3 / eps.
NoiseScale gaussian_sigma(double eps, const PrivacyConfig& cfg);

// Adds i.i.d. N(0, sigma^2) to every input coordinate; targets untouched.
// sigma == 0 returns an exact copy and draws nothing from the stream.
Batch perturb_batch(const Batch& batch, double sigma, CounterStream& rng);

// Sample-size part of the Wasserstein radius for N local samples.
double eta_radius(std::size_t n, const PrivacyConfig& cfg);

inline double wasserstein_radius(double eta, double sigma) { return eta + sigma; }

}  // namespace bafdp

#endif  // BAFDP_PRIVACY_HPP_
