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

#ifndef BAFDP_TESTS_TEST_UTIL_HPP_
#define BAFDP_TESTS_TEST_UTIL_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "bafdp/core_math.hpp"

namespace bafdp::testing_util {

inline ParamVector random_params(const std::vector<std::size_t>& widths, std::mt19937_64& rng, double scale = 1.0) {
  ParamVector p = ParamVector::zeros(mlp_shapes(widths));
  std::normal_distribution<double> n(0.0, scale);
  for (double& v : p.values) v = n(rng);
  return p;
}

inline Batch random_batch(std::size_t n, std::size_t dx, std::size_t dy, std::mt19937_64& rng) {
  Batch b;
  b.d_x = dx;
  b.d_y = dy;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(dx), y(dy);
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    b.push_back(x, y);
  }
  return b;
}

// Straight-line forward pass written against explicit loops over layers.
inline std::vector<double> reference_forward(const ParamVector& p, const std::vector<double>& x) {
  std::vector<double> a = x;
  std::size_t off = 0;
  for (std::size_t l = 0; l < p.shapes.size(); ++l) {
    const auto [rows, cols] = std::pair{p.shapes[l].rows, p.shapes[l].cols};
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = p.values[off + rows * cols + r];
      for (std::size_t c = 0; c < cols; ++c) acc += p.values[off + r * cols + c] * a[c];
      out[r] = (l + 1 < p.shapes.size()) ? std::max(acc, 0.0) : acc;
    }
    off += rows * cols + rows;
    a = out;
  }
  return a;
}

inline double relative_error(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

inline double svd_product(const ParamVector& p) {
  double prod = 1.0;
  for (std::size_t l = 0; l < p.shapes.size(); ++l) {
    const auto w = p.weight(l);
    Eigen::MatrixXd m(p.shapes[l].rows, p.shapes[l].cols);
    for (std::size_t r = 0; r < p.shapes[l].rows; ++r) {
      for (std::size_t c = 0; c < p.shapes[l].cols; ++c) m(r, c) = w[r * p.shapes[l].cols + c];
    }
    prod *= Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
  }
  return prod;
}

// Mean squared error through reference_forward.
inline double reference_loss(const ParamVector& p, const Batch& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto x = b.x(i);
    const auto y = b.y(i);
    const auto yhat = reference_forward(p, std::vector<double>(x.begin(), x.end()));
    for (std::size_t k = 0; k < yhat.size(); ++k) acc += (yhat[k] - y[k]) * (yhat[k] - y[k]);
  }
  return acc / static_cast<double>(b.size());
}

// Scalar regularized Lagrangian restricted to the primal blocks, written
// independently of the library: (1/M) sum_i [ g_i(w_i) + (eta_i + c3/eps_i)
// kappa prod ||W_l||_2 + lambda_i (eps_i - a) + phi_i.(z - w_i) + psi ||z - w_i||_1 ].
struct LagrangianPoint {
  std::vector<ParamVector> omegas;
  std::vector<double> eps;
  std::vector<double> lambda;
  std::vector<std::vector<double>> phi;
  std::vector<Batch> data;
  std::vector<double> eta;
  ParamVector z;
  double c3 = 1.0;
  double psi = 0.1;
  double budget = 1.0;
  double kappa = 1.0;
  int m = 1;
};

inline double lagrangian(const LagrangianPoint& p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.omegas.size(); ++i) {
    const auto& w = p.omegas[i];
    double term = reference_loss(w, p.data[i]);
    term += (p.eta[i] + p.c3 / p.eps[i]) * p.kappa * svd_product(w);
    term += p.lambda[i] * (p.eps[i] - p.budget);
    for (std::size_t k = 0; k < w.dim(); ++k) {
      const double diff = p.z.values[k] - w.values[k];
      term += p.phi[i][k] * diff + p.psi * std::abs(diff);
    }
    acc += term;
  }
  return acc / static_cast<double>(p.m);
}

// Random point with every |z - w_i| coordinate at least `margin`.
inline LagrangianPoint random_lagrangian_point(std::mt19937_64& rng, std::size_t clients, double margin) {
  LagrangianPoint p;
  const std::vector<std::size_t> widths{3, 4, 2};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  p.z = random_params(widths, rng, 0.8);
  p.m = static_cast<int>(clients);
  p.c3 = 0.5 + 4.0 * u(rng);
  p.psi = 0.05 + 0.2 * u(rng);
  p.budget = 0.5 + u(rng);
  p.kappa = 0.5 + u(rng);
  for (std::size_t i = 0; i < clients; ++i) {
    ParamVector w = random_params(widths, rng, 0.8);
    for (std::size_t k = 0; k < w.dim(); ++k) {
      const double d = w.values[k] - p.z.values[k];
      if (std::abs(d) < margin) w.values[k] = p.z.values[k] + (d < 0 ? -margin : margin) * 2.0;
    }
    p.omegas.push_back(std::move(w));
    p.eps.push_back(0.2 + 2.0 * u(rng));
    p.lambda.push_back(u(rng));
    std::vector<double> phi(p.z.dim());
    for (double& v : phi) v = u(rng) - 0.5;
    p.phi.push_back(std::move(phi));
    p.data.push_back(random_batch(4, 3, 2, rng));
    p.eta.push_back(u(rng));
  }
  return p;
}

}  // namespace bafdp::testing_util

#endif  // BAFDP_TESTS_TEST_UTIL_HPP_
