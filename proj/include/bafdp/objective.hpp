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

#ifndef BAFDP_OBJECTIVE_HPP_
#define BAFDP_OBJECTIVE_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bafdp/core_math.hpp"

namespace bafdp {

struct HyperParams {
  double psi = 1e-2;  // L1 consensus penalty weight
  double step_omega = 1e-2;
  double step_eps = 1e-2;
  double step_z = 1e-2;
  double step_lambda = 1e-2;
  double step_phi = 1e-2;
  // Squared-norm bounds: ||omega||^2, ||z||^2 <= mu1; eps^2 <= mu2;
  // lambda^2 <= mu3; ||phi||^2 <= mu4.
  double mu1 = 1e3;
  double mu2 = 1e2;
  double mu3 = 1e2;
  double mu4 = 1e2;
  double budget_a = 1.0;
  double epsilon_min = 1e-2;

  std::vector<std::string> problems() const;
};

// Nonincreasing dual regularization weight max(floor, (alpha (t+1))^(-1/4)).
struct RegSchedule {
  double alpha = 1e-2;
  double floor = 0.0;
};

double reg_value(const RegSchedule& sched, std::int64_t t);

struct DualState {
  double lambda = 0.0;
  std::vector<double> phi;
};

// Descent direction for a client's model:
//   (1/M) (grad g + rho grad G - phi - psi sign(z - omega)),
// where the last term is the subgradient of psi ||z - omega||_1 in omega.
ParamVector omega_grad(const ParamVector& omega, const LossGrad& data, double rho,
                       const LipschitzEstimate& lip, std::span<const double> phi,
                       const ParamVector& z, const HyperParams& hp, int m);

// Same, computing the data gradient from a (noisy) batch.
ParamVector omega_grad(const ParamVector& omega, const Batch& noisy_batch, double rho,
                       const LipschitzEstimate& lip, std::span<const double> phi,
                       const ParamVector& z, const HyperParams& hp, int m);

// d/d eps of the Lagrangian: (1/M)(-c3 G / eps^2 + lambda).
double epsilon_grad(double eps, double g_value, double lambda, double c3, int m);

// Server direction for z: (1/M)(sum_i phi_i + psi sum_r sign(z - omega_r)).
std::vector<double> z_grad(std::span<const std::span<const double>> omegas,
                           std::span<const std::span<const double>> phis,
                           std::span<const double> z, double psi, int m);

// Projected, regularized dual ascent on the budget constraint eps <= a.
double lambda_step(double lambda, double eps, std::int64_t t, const RegSchedule& sched,
                   const HyperParams& hp);

// Projected, regularized dual ascent on the consensus constraint z = omega.
std::vector<double> phi_step(std::span<const double> phi, std::span<const double> z,
                             std::span<const double> omega, std::int64_t t,
                             const RegSchedule& sched, const HyperParams& hp);

// Stacked residuals whose squared norm is the stationarity gap.
// Loss and gradient of the mean squared error averaged over N(0, sigma^2)
// input noise. Exact for models without hidden layers; otherwise a Monte
// Carlo average over `samples` draws from a stream keyed by `key`.
LossGrad expected_noisy_loss_grad(const ParamVector& params, const Batch& batch, double sigma,
                                  int samples, std::uint64_t key);

struct GapComponents {
  std::vector<std::vector<double>> omega;
  std::vector<double> eps;
  std::vector<double> z;
  std::vector<double> lambda;
  std::vector<std::vector<double>> phi;

  double squared_norm() const;
};

// One honest client's view for the gap. `data` is the client's clean
// training set; the data term is its full-batch loss.
struct ClientSnapshot {
  const ParamVector* omega = nullptr;
  double eps = 0.0;
  std::span<const double> phi;
  double lambda = 0.0;
  double eta = 0.0;
  const Batch* data = nullptr;
};

struct GapContext {
  const ParamVector* z = nullptr;
  // z residual sums over every client the server holds a record for.
  std::vector<std::span<const double>> server_omegas;
  std::vector<std::span<const double>> server_phis;
  std::int64_t t = 0;
  RegSchedule lambda_sched;
  RegSchedule phi_sched;
  HyperParams hp;
  int m = 1;
  double c3 = 0.0;
  double kappa = 1.0;
  int power_iters = 20;
  // Without privacy noise the eps and lambda blocks are inactive.
  bool privacy_active = true;
  // The data term is the loss averaged over input noise at the client's
  // current budget; see expected_noisy_loss_grad.
  int noise_samples = 16;
  std::uint64_t noise_key = 0;
};

GapComponents stationarity_residuals(std::span<const ClientSnapshot> clients,
                                     const GapContext& ctx);
double stationarity_gap(std::span<const ClientSnapshot> clients, const GapContext& ctx);

}  // namespace bafdp

#endif  // BAFDP_OBJECTIVE_HPP_
