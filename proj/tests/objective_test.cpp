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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "bafdp/objective.hpp"
#include "bafdp/privacy.hpp"
#include "test_util.hpp"

namespace bafdp {
namespace {

using testing_util::lagrangian;
using testing_util::LagrangianPoint;
using testing_util::random_batch;
using testing_util::random_lagrangian_point;
using testing_util::random_params;
using testing_util::relative_error;

constexpr double kRegAt0 = 3.16227766016837933;  // 0.01^(-1/4)
constexpr double kRegAt1 = 2.65914794847249431;  // 0.02^(-1/4)

std::vector<std::span<const double>> spans_of(const std::vector<ParamVector>& ps) {
  std::vector<std::span<const double>> out;
  for (const auto& p : ps) out.emplace_back(p.values);
  return out;
}

std::vector<std::span<const double>> spans_of(const std::vector<std::vector<double>>& vs) {
  std::vector<std::span<const double>> out;
  for (const auto& v : vs) out.emplace_back(v);
  return out;
}

TEST(RegValue, SpecExamples) {
  EXPECT_NEAR(reg_value({0.01, 0.0}, 0), kRegAt0, 1e-12);
  EXPECT_NEAR(reg_value({0.01, 0.0}, 1), kRegAt1, 1e-12);
}

TEST(RegValue, NonIncreasingAndFloored) {
  const RegSchedule s{0.01, 0.5};
  double prev = reg_value(s, 0);
  for (std::int64_t t = 1; t <= 10000; ++t) {
    const double v = reg_value(s, t);
    EXPECT_LE(v, prev);
    EXPECT_GE(v, 0.5);
    prev = v;
  }
  EXPECT_EQ(reg_value(s, 100000000), 0.5);
}

ParamVector linear_params(double w, double b) {
  ParamVector p = ParamVector::zeros(mlp_shapes(std::vector<std::size_t>{1, 1}));
  p.weight(0)[0] = w;
  p.bias(0)[0] = b;
  return p;
}

TEST(OmegaGrad, ZeroAtStationaryPoint) {
  const ParamVector w = linear_params(2.0, 1.0);
  Batch b;
  b.d_x = 1;
  b.d_y = 1;
  for (double x : {0.0, 1.0, 2.0}) b.push_back(std::vector<double>{x}, std::vector<double>{2.0 * x + 1.0});
  const auto lip = lipschitz_value_grad(w, nullptr, 20);
  HyperParams hp;
  const std::vector<double> phi(w.dim(), 0.0);
  const auto g = omega_grad(w, b, 0.0, lip, phi, w, hp, 3);
  for (double v : g.values) EXPECT_EQ(v, 0.0);
}

TEST(OmegaGrad, ReducesToPlainGradient) {
  std::mt19937_64 rng(1);
  const ParamVector w = random_params({3, 4, 2}, rng);
  const ParamVector z = random_params({3, 4, 2}, rng);
  const Batch b = random_batch(6, 3, 2, rng);
  HyperParams hp;
  hp.psi = 0.0;
  const std::vector<double> phi(w.dim(), 0.0);
  const auto g = omega_grad(w, b, 0.0, lipschitz_value_grad(w, nullptr, 20), phi, z, hp, 1);
  EXPECT_EQ(g, mlp_loss_grad(w, b).grad);
}

TEST(OmegaGrad, NoL1ContributionAtConsensus) {
  std::mt19937_64 rng(2);
  const ParamVector w = random_params({2, 3, 1}, rng);
  const Batch b = random_batch(4, 2, 1, rng);
  HyperParams with, without;
  with.psi = 0.7;
  without.psi = 0.0;
  const std::vector<double> phi(w.dim(), 0.1);
  const auto lip = lipschitz_value_grad(w, nullptr, 20);
  EXPECT_EQ(omega_grad(w, b, 0.4, lip, phi, w, with, 5), omega_grad(w, b, 0.4, lip, phi, w, without, 5));
}

TEST(OmegaGrad, RejectsMismatchedShapes) {
  std::mt19937_64 rng(3);
  const ParamVector w = random_params({2, 1}, rng);
  const ParamVector z = random_params({3, 1}, rng);
  const Batch b = random_batch(2, 2, 1, rng);
  const std::vector<double> phi(w.dim(), 0.0);
  EXPECT_THROW(omega_grad(w, b, 0.0, lipschitz_value_grad(w, nullptr, 5), phi, z, HyperParams{}, 1), ShapeError);
}

TEST(EpsilonGrad, SpecExamples) {
  EXPECT_NEAR(epsilon_grad(1.0, 1.0, 0.0, 4.8448, 1), -4.8448, 1e-15);
  const double c3 = 3.0, g = 2.0, eps = 1.5;
  EXPECT_NEAR(epsilon_grad(eps, g, c3 * g / (eps * eps), c3, 4), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(epsilon_grad(0.7, 0.0, 0.9, c3, 3), 0.3);
  EXPECT_THROW(epsilon_grad(0.0, 1.0, 0.0, 1.0, 1), std::invalid_argument);
}

TEST(ZGrad, ZeroAtConsensus) {
  const std::vector<double> z{0.5, -1.0, 2.0};
  const std::vector<std::vector<double>> omegas{z, z, z};
  const std::vector<std::vector<double>> phis(3, std::vector<double>(3, 0.0));
  const auto g = z_grad(spans_of(omegas), spans_of(phis), z, 0.3, 3);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(ZGrad, SignSaturatesForFarClient) {
  const std::vector<double> z(4, 0.0);
  const std::vector<std::vector<double>> omegas{std::vector<double>(4, 1e9), z, z};
  const std::vector<std::vector<double>> phis(3, std::vector<double>(4, 0.0));
  const auto g = z_grad(spans_of(omegas), spans_of(phis), z, 0.1, 1);
  for (double v : g) EXPECT_DOUBLE_EQ(v, -0.1);
  const std::vector<std::vector<double>> nearer{std::vector<double>(4, 1e-3), z, z};
  EXPECT_EQ(z_grad(spans_of(nearer), spans_of(phis), z, 0.1, 1), g);
}

TEST(ZGrad, SingleSubstitutionMovesSignTermByAtMostTwoPsi) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  const double psi = 0.2;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> z(5);
    for (double& v : z) v = n(rng);
    std::vector<std::vector<double>> omegas(4, std::vector<double>(5));
    for (auto& w : omegas) {
      for (double& v : w) v = n(rng);
    }
    const std::vector<std::vector<double>> phis(4, std::vector<double>(5, 0.0));
    const auto before = z_grad(spans_of(omegas), spans_of(phis), z, psi, 1);
    for (double& v : omegas[trial % 4]) v = 1e6 * n(rng);
    const auto after = z_grad(spans_of(omegas), spans_of(phis), z, psi, 1);
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_LE(std::abs(after[i] - before[i]), 2.0 * psi + 1e-15);
  }
}

TEST(LambdaStep, SpecExamples) {
  HyperParams hp;
  hp.budget_a = 1.0;
  hp.step_lambda = 0.1;
  const RegSchedule zero_reg{0.1, 0.0};
  EXPECT_EQ(lambda_step(0.0, 0.5, 0, zero_reg, hp), 0.0);
  EXPECT_NEAR(lambda_step(0.0, 2.0, std::int64_t{1} << 60, zero_reg, hp), 0.1, 1e-15);
  EXPECT_EQ(lambda_step(std::sqrt(hp.mu3), 1e9, 0, zero_reg, hp), std::sqrt(hp.mu3));
}

TEST(LambdaStep, AlwaysWithinBounds) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  HyperParams hp;
  for (int i = 0; i < 2000; ++i) {
    const double lam = std::abs(u(rng)) / 5.0;
    const double out = lambda_step(lam, u(rng), i, {0.01, 0.0}, hp);
    EXPECT_GE(out, 0.0);
    EXPECT_LE(out * out, hp.mu3 * (1 + 1e-12));
  }
  EXPECT_THROW(lambda_step(-1.0, 0.0, 0, {0.01, 0.0}, hp), std::invalid_argument);
}

TEST(PhiStep, SpecExamples) {
  HyperParams hp;
  hp.step_phi = 0.5;
  const std::vector<double> zero(3, 0.0);
  const std::vector<double> w{1.0, 2.0, 3.0};
  EXPECT_EQ(phi_step(zero, w, w, 0, {0.5, 0.0}, hp), zero);
  const std::vector<double> z{2.0, 2.0, 3.0};
  const auto out = phi_step(zero, z, w, 0, {0.5, 0.0}, hp);
  EXPECT_EQ(out, (std::vector<double>{0.5, 0.0, 0.0}));
}

TEST(PhiStep, ProjectedIntoBall) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 100.0);
  HyperParams hp;
  hp.mu4 = 4.0;
  for (int i = 0; i < 500; ++i) {
    std::vector<double> phi(7), z(7), w(7);
    for (std::size_t k = 0; k < 7; ++k) {
      phi[k] = n(rng);
      z[k] = n(rng);
      w[k] = n(rng);
    }
    EXPECT_LE(vec::norm(phi_step(phi, z, w, i, {0.01, 0.0}, hp)), 2.0);
  }
}

// 50 random kink-free points; every partial derivative against central
// differences of the scalar Lagrangian.
TEST(Gradients, MatchFiniteDifferencesOfLagrangian) {
  std::mt19937_64 rng(99);
  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t clients = 1 + trial % 3;
    LagrangianPoint p = random_lagrangian_point(rng, clients, 1e-3);
    HyperParams hp;
    hp.psi = p.psi;
    hp.budget_a = p.budget;
    std::vector<LipschitzEstimate> lips;
    for (std::size_t i = 0; i < clients; ++i) {
      const auto& w = p.omegas[i];
      const auto lip = lipschitz_value_grad(w, nullptr, 500, p.kappa);
      const double rho = p.eta[i] + p.c3 / p.eps[i];
      const auto g = omega_grad(w, p.data[i], rho, lip, p.phi[i], p.z, hp, p.m);
      for (std::size_t k = 0; k < w.dim(); ++k) {
        LagrangianPoint hi = p, lo = p;
        hi.omegas[i].values[k] += h;
        lo.omegas[i].values[k] -= h;
        const double fd = (lagrangian(hi) - lagrangian(lo)) / (2 * h);
        EXPECT_LE(relative_error(g.values[k], fd), 1e-4) << "omega trial " << trial << " client " << i << " k " << k;
      }
      const double ge = epsilon_grad(p.eps[i], lip.value, p.lambda[i], p.c3, p.m);
      LagrangianPoint hi = p, lo = p;
      hi.eps[i] += h;
      lo.eps[i] -= h;
      EXPECT_LE(relative_error(ge, (lagrangian(hi) - lagrangian(lo)) / (2 * h)), 1e-4) << "eps trial " << trial;
    }
    const auto gz = z_grad(spans_of(p.omegas), spans_of(p.phi), p.z.values, p.psi, p.m);
    for (std::size_t k = 0; k < p.z.dim(); ++k) {
      LagrangianPoint hi = p, lo = p;
      hi.z.values[k] += h;
      lo.z.values[k] -= h;
      EXPECT_LE(relative_error(gz[k], (lagrangian(hi) - lagrangian(lo)) / (2 * h)), 1e-4) << "z trial " << trial;
    }
  }
}

TEST(BoundedInfluence, SubstitutionBoundHolds) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  HyperParams hp;
  hp.psi = 0.05;
  hp.mu4 = 2.0;
  const int m = 5;
  const std::size_t dim = 9;
  const double bound = hp.step_z * (2.0 * hp.psi * std::sqrt(static_cast<double>(dim)) + 2.0 * std::sqrt(hp.mu4)) / m;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(dim);
    for (double& v : z) v = n(rng);
    std::vector<std::vector<double>> omegas(m, std::vector<double>(dim)), phis(m, std::vector<double>(dim));
    for (int i = 0; i < m; ++i) {
      for (std::size_t k = 0; k < dim; ++k) {
        omegas[i][k] = n(rng);
        phis[i][k] = n(rng);
      }
      phis[i] = project_ball(phis[i], std::sqrt(hp.mu4));
    }
    auto step = [&](const auto& om, const auto& ph) {
      auto g = z_grad(spans_of(om), spans_of(ph), z, hp.psi, m);
      std::vector<double> out(dim);
      for (std::size_t k = 0; k < dim; ++k) out[k] = z[k] - hp.step_z * g[k];
      return out;
    };
    const auto base = step(omegas, phis);
    const std::size_t victim = trial % m;
    for (std::size_t k = 0; k < dim; ++k) {
      omegas[victim][k] = 1e8 * n(rng);
      phis[victim][k] = 1e8 * n(rng);
    }
    phis[victim] = project_ball(phis[victim], std::sqrt(hp.mu4));
    const auto attacked = step(omegas, phis);
    double diff = 0.0;
    for (std::size_t k = 0; k < dim; ++k) diff += (attacked[k] - base[k]) * (attacked[k] - base[k]);
    EXPECT_LE(std::sqrt(diff), bound * (1 + 1e-12));
  }
}

GapContext simple_context(const ParamVector& z, const std::vector<ParamVector>& omegas,
                          const std::vector<std::vector<double>>& phis) {
  GapContext ctx;
  ctx.z = &z;
  for (const auto& w : omegas) ctx.server_omegas.emplace_back(w.values);
  for (const auto& p : phis) ctx.server_phis.emplace_back(p);
  ctx.t = 10;
  ctx.m = static_cast<int>(omegas.size());
  ctx.c3 = 2.0;
  ctx.privacy_active = true;
  return ctx;
}

TEST(StationarityGap, ZeroAtExactStationarity) {
  // Constant-target data, zero weights, lambda inactive at eps = a, phi = 0:
  // every residual block vanishes.
  ParamVector w = ParamVector::zeros(mlp_shapes(std::vector<std::size_t>{2, 1}));
  w.bias(0)[0] = 0.5;
  Batch b;
  b.d_x = 2;
  b.d_y = 1;
  b.push_back(std::vector<double>{0.3, 0.1}, std::vector<double>{0.5});
  const std::vector<ParamVector> omegas{w};
  const std::vector<std::vector<double>> phis{std::vector<double>(w.dim(), 0.0)};
  GapContext ctx = simple_context(w, omegas, phis);
  ctx.hp.budget_a = 1.0;
  ctx.privacy_active = false;
  const std::vector<ClientSnapshot> snaps{{&omegas[0], 1.0, phis[0], 0.0, 0.0, &b}};
  EXPECT_EQ(stationarity_gap(snaps, ctx), 0.0);
}

TEST(StationarityGap, InvariantToClientOrder) {
  std::mt19937_64 rng(10);
  std::vector<ParamVector> omegas;
  std::vector<Batch> data;
  std::vector<std::vector<double>> phis;
  for (int i = 0; i < 4; ++i) {
    omegas.push_back(random_params({3, 2}, rng));
    data.push_back(random_batch(5, 3, 2, rng));
    phis.emplace_back(omegas.back().dim(), 0.1 * i);
  }
  const ParamVector z = random_params({3, 2}, rng);
  std::vector<ClientSnapshot> snaps;
  for (int i = 0; i < 4; ++i) snaps.push_back({&omegas[i], 0.5 + i, phis[i], 0.1 * i, 0.2, &data[i]});
  const GapContext ctx = simple_context(z, omegas, phis);
  const double forward = stationarity_gap(snaps, ctx);
  std::reverse(snaps.begin(), snaps.end());
  EXPECT_NEAR(stationarity_gap(snaps, ctx), forward, 1e-12 * forward);
  EXPECT_GT(forward, 0.0);
}

TEST(StationarityGap, LambdaResidualIsProjectedGradient) {
  ParamVector w = ParamVector::zeros(mlp_shapes(std::vector<std::size_t>{1, 1}));
  Batch b;
  b.d_x = 1;
  b.d_y = 1;
  b.push_back(std::vector<double>{1.0}, std::vector<double>{0.0});
  const std::vector<ParamVector> omegas{w};
  const std::vector<std::vector<double>> phis{std::vector<double>(w.dim(), 0.0)};
  GapContext ctx = simple_context(w, omegas, phis);
  ctx.hp.budget_a = 1.0;
  // eps below the budget with lambda = 0: the projection keeps lambda at 0.
  const std::vector<ClientSnapshot> snaps{{&omegas[0], 0.5, phis[0], 0.0, 0.0, &b}};
  const auto r = stationarity_residuals(snaps, ctx);
  ASSERT_EQ(r.lambda.size(), 1u);
  EXPECT_EQ(r.lambda[0], 0.0);
}

TEST(ExpectedNoisyLoss, LinearClosedFormMatchesMonteCarlo) {
  std::mt19937_64 rng(12);
  const ParamVector w = random_params({3, 2}, rng);
  const Batch b = random_batch(20, 3, 2, rng);
  const double sigma = 0.3;
  const auto exact = expected_noisy_loss_grad(w, b, sigma, 1, 0);
  CounterStream s(77, 0);
  double loss = 0.0;
  ParamVector grad = ParamVector::zeros(w.shapes);
  const int draws = 20000;
  for (int k = 0; k < draws; ++k) {
    const auto lg = mlp_loss_grad(w, perturb_batch(b, sigma, s));
    loss += lg.loss / draws;
    vec::axpy(1.0 / draws, lg.grad.values, grad.values);
  }
  EXPECT_NEAR(exact.loss, loss, 0.02 * exact.loss);
  for (std::size_t i = 0; i < w.dim(); ++i) EXPECT_NEAR(exact.grad.values[i], grad.values[i], 0.05);
  EXPECT_EQ(expected_noisy_loss_grad(w, b, 0.0, 1, 0).grad, mlp_loss_grad(w, b).grad);
}

TEST(HyperParams, ValidationListsEveryProblem) {
  HyperParams hp;
  EXPECT_TRUE(hp.problems().empty());
  hp.psi = -1.0;
  hp.step_omega = 0.0;
  hp.epsilon_min = 2.0;
  EXPECT_EQ(hp.problems().size(), 3u);
}

}  // namespace
}  // namespace bafdp
