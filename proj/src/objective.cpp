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

#include "bafdp/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bafdp/privacy.hpp"
#include "bafdp/rng.hpp"

namespace bafdp {

std::vector<std::string> HyperParams::problems() const {
  std::vector<std::string> out;
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) out.push_back(std::string(name) + " must be positive");
  };
  auto nonnegative = [&](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) out.push_back(std::string(name) + " must be >= 0");
  };
  nonnegative(psi, "psi");
  positive(step_omega, "step_omega");
  positive(step_eps, "step_eps");
  positive(step_z, "step_z");
  positive(step_lambda, "step_lambda");
  // A zero phi step freezes the consensus dual, which the degenerate
  // single-client reduction relies on.
  nonnegative(step_phi, "step_phi");
  positive(mu1, "mu1");
  positive(mu2, "mu2");
  positive(mu3, "mu3");
  positive(mu4, "mu4");
  positive(budget_a, "budget_a");
  positive(epsilon_min, "epsilon_min");
  if (!(epsilon_min < budget_a)) out.push_back("epsilon_min must be below budget_a");
  if (epsilon_min * epsilon_min > mu2) out.push_back("mu2 must admit epsilon_min");
  return out;
}

double reg_value(const RegSchedule& sched, std::int64_t t) {
  if (t < 0) throw std::invalid_argument("iteration must be >= 0");
  const double raw = std::pow(sched.alpha * static_cast<double>(t + 1), -0.25);
  return std::max(sched.floor, raw);
}

ParamVector omega_grad(const ParamVector& omega, const LossGrad& data, double rho,
                       const LipschitzEstimate& lip, std::span<const double> phi,
                       const ParamVector& z, const HyperParams& hp, int m) {
  const std::size_t n = omega.dim();
  if (data.grad.dim() != n || lip.grad.dim() != n || phi.size() != n || z.dim() != n) {
    throw ShapeError("omega_grad operands disagree in dimension");
  }
  if (rho < 0.0) throw std::invalid_argument("rho must be nonnegative");
  if (m < 1) throw std::invalid_argument("client count must be >= 1");
  ParamVector out = ParamVector::zeros(omega.shapes);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < n; ++i) {
    const double l1 = hp.psi * vec::sign(z.values[i] - omega.values[i]);
    const double g = data.grad.values[i] + rho * lip.grad.values[i] - phi[i] - l1;
    out.values[i] = g * inv_m;
  }
  if (!out.all_finite()) throw NumericError("non-finite omega gradient");
  return out;
}

ParamVector omega_grad(const ParamVector& omega, const Batch& noisy_batch, double rho,
                       const LipschitzEstimate& lip, std::span<const double> phi,
                       const ParamVector& z, const HyperParams& hp, int m) {
  return omega_grad(omega, mlp_loss_grad(omega, noisy_batch), rho, lip, phi, z, hp, m);
}

double epsilon_grad(double eps, double g_value, double lambda, double c3, int m) {
  if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (m < 1) throw std::invalid_argument("client count must be >= 1");
  return (-c3 * g_value / (eps * eps) + lambda) / static_cast<double>(m);
}

std::vector<double> z_grad(std::span<const std::span<const double>> omegas,
                           std::span<const std::span<const double>> phis,
                           std::span<const double> z, double psi, int m) {
  if (omegas.empty()) throw std::invalid_argument("z_grad needs at least one client record");
  if (m < 1) throw std::invalid_argument("client count must be >= 1");
  const std::size_t n = z.size();
  std::vector<double> phi_sum(n, 0.0);
  std::vector<double> sign_sum(n, 0.0);
  for (const auto& phi : phis) {
    if (phi.size() != n) throw ShapeError("phi record has wrong dimension");
    for (std::size_t i = 0; i < n; ++i) phi_sum[i] += phi[i];
  }
  for (const auto& w : omegas) {
    if (w.size() != n) throw ShapeError("omega record has wrong dimension");
    for (std::size_t i = 0; i < n; ++i) sign_sum[i] += vec::sign(z[i] - w[i]);
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (phi_sum[i] + psi * sign_sum[i]) * inv_m;
  return out;
}

namespace {

double lambda_ascent(double lambda, double eps, double reg, const HyperParams& hp) {
  const double next = lambda + hp.step_lambda * ((eps - hp.budget_a) - reg * lambda);
  return std::clamp(next, 0.0, std::sqrt(hp.mu3));
}

}  // namespace

double lambda_step(double lambda, double eps, std::int64_t t, const RegSchedule& sched,
                   const HyperParams& hp) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  return lambda_ascent(lambda, eps, reg_value(sched, t), hp);
}

std::vector<double> phi_step(std::span<const double> phi, std::span<const double> z,
                             std::span<const double> omega, std::int64_t t,
                             const RegSchedule& sched, const HyperParams& hp) {
  if (phi.size() != z.size() || z.size() != omega.size()) {
    throw ShapeError("phi_step operands disagree in dimension");
  }
  if (hp.step_phi == 0.0) return project_ball(phi, std::sqrt(hp.mu4));
  const double reg = reg_value(sched, t);
  std::vector<double> out(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    out[i] = phi[i] + hp.step_phi * ((z[i] - omega[i]) - reg * phi[i]);
  }
  project_ball_inplace(out, std::sqrt(hp.mu4));
  return out;
}

LossGrad expected_noisy_loss_grad(const ParamVector& params, const Batch& batch, double sigma,
                                  int samples, std::uint64_t key) {
  if (sigma < 0.0) throw std::invalid_argument("noise scale must be nonnegative");
  if (sigma == 0.0) return mlp_loss_grad(params, batch);
  if (params.shapes.size() == 1) {
    // E||W(x+v)+b-y||^2 = ||Wx+b-y||^2 + sigma^2 ||W||_F^2
    LossGrad out = mlp_loss_grad(params, batch);
    const auto w = params.weight(0);
    auto g = out.grad.weight(0);
    const double s2 = sigma * sigma;
    for (std::size_t i = 0; i < w.size(); ++i) {
      out.loss += s2 * w[i] * w[i];
      g[i] += 2.0 * s2 * w[i];
    }
    return out;
  }
  if (samples < 1) throw std::invalid_argument("need at least one noise sample");
  CounterStream rng(key, 0);
  LossGrad out{0.0, ParamVector::zeros(params.shapes)};
  for (int k = 0; k < samples; ++k) {
    const LossGrad lg = mlp_loss_grad(params, perturb_batch(batch, sigma, rng));
    out.loss += lg.loss;
    vec::axpy(1.0, lg.grad.values, out.grad.values);
  }
  const double inv = 1.0 / samples;
  out.loss *= inv;
  for (double& v : out.grad.values) v *= inv;
  return out;
}

double GapComponents::squared_norm() const {
  double acc = 0.0;
  for (const auto& r : omega) acc += vec::squared_norm(r);
  for (double r : eps) acc += r * r;
  acc += vec::squared_norm(z);
  for (double r : lambda) acc += r * r;
  for (const auto& r : phi) acc += vec::squared_norm(r);
  return acc;
}

GapComponents stationarity_residuals(std::span<const ClientSnapshot> clients,
                                     const GapContext& ctx) {
  GapComponents out;
  const ParamVector& z = *ctx.z;
  const double reg_lambda = reg_value(ctx.lambda_sched, ctx.t);
  const double reg_phi = ctx.hp.step_phi > 0.0 ? reg_value(ctx.phi_sched, ctx.t) : 0.0;
  for (const auto& c : clients) {
    const ParamVector& w = *c.omega;
    const double sigma = ctx.privacy_active ? ctx.c3 / c.eps : 0.0;
    const LossGrad data = expected_noisy_loss_grad(w, *c.data, sigma, ctx.noise_samples, ctx.noise_key);
    const LipschitzEstimate lip = lipschitz_value_grad(w, nullptr, ctx.power_iters, ctx.kappa);
    const double rho = wasserstein_radius(c.eta, sigma);
    out.omega.push_back(omega_grad(w, data, rho, lip, c.phi, z, ctx.hp, ctx.m).values);
    if (ctx.privacy_active) {
      // Projected-gradient residual so that a budget resting on a bound counts
      // as stationary; equals epsilon_grad in the interior.
      const double g = epsilon_grad(c.eps, lip.value, c.lambda, ctx.c3, ctx.m);
      const double moved = std::clamp(c.eps - ctx.hp.step_eps * g, ctx.hp.epsilon_min, std::sqrt(ctx.hp.mu2));
      out.eps.push_back((c.eps - moved) / ctx.hp.step_eps);
      const double projected = lambda_ascent(c.lambda, c.eps, reg_lambda, ctx.hp);
      out.lambda.push_back((c.lambda - projected) / ctx.hp.step_lambda);
    }
    std::vector<double> r(w.dim());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = (z.values[i] - w.values[i]) - reg_phi * c.phi[i];
    out.phi.push_back(std::move(r));
  }
  out.z = z_grad(ctx.server_omegas, ctx.server_phis, z.values, ctx.hp.psi, ctx.m);
  return out;
}

double stationarity_gap(std::span<const ClientSnapshot> clients, const GapContext& ctx) {
  return stationarity_residuals(clients, ctx).squared_norm();
}

}  // namespace bafdp
