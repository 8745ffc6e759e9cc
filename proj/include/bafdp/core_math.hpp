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

#ifndef BAFDP_CORE_MATH_HPP_
#define BAFDP_CORE_MATH_HPP_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bafdp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension or layout mismatch between parameters and data.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Weight matrix of one dense layer, stored row-major as rows x cols
// (outputs x inputs), followed by a bias of length rows.
struct LayerShape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t weight_count() const { return rows * cols; }
  std::size_t count() const { return rows * cols + rows; }
  bool operator==(const LayerShape&) const = default;
};

// Flat parameter vector shared by client models and the server consensus.
struct ParamVector {
  std::vector<double> values;
  std::vector<LayerShape> shapes;

  static ParamVector zeros(std::vector<LayerShape> shapes);

  std::size_t dim() const { return values.size(); }
  std::size_t offset(std::size_t layer) const;

  std::span<double> weight(std::size_t layer);
  std::span<const double> weight(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  std::size_t input_dim() const { return shapes.empty() ? 0 : shapes.front().cols; }
  std::size_t output_dim() const { return shapes.empty() ? 0 : shapes.back().rows; }

  // Throws ShapeError if dim() disagrees with the layer shapes.
  void check_consistent() const;
  bool all_finite() const;
  bool operator==(const ParamVector&) const = default;
};

// Shapes of a dense network with the given layer widths (input first).
std::vector<LayerShape> mlp_shapes(std::span<const std::size_t> widths);

// n samples of (x, y), both row-major.
struct Batch {
  std::size_t d_x = 0;
  std::size_t d_y = 0;
  std::vector<double> inputs;
  std::vector<double> targets;

  std::size_t size() const { return d_x == 0 ? 0 : inputs.size() / d_x; }
  std::span<const double> x(std::size_t i) const { return {inputs.data() + i * d_x, d_x}; }
  std::span<const double> y(std::size_t i) const { return {targets.data() + i * d_y, d_y}; }
  void push_back(std::span<const double> x, std::span<const double> y);
};

// ReLU hidden layers, linear output.
std::vector<double> mlp_forward(const ParamVector& params, std::span<const double> x);

struct LossGrad {
  double loss = 0.0;
  ParamVector grad;
};

// Mean over samples of ||y_hat - y||^2 and its exact gradient.
LossGrad mlp_loss_grad(const ParamVector& params, const Batch& batch);
double mlp_loss(const ParamVector& params, const Batch& batch);

struct SingularPair {
  std::vector<double> u;  // left, length rows
  std::vector<double> v;  // right, length cols
};

struct LipschitzEstimate {
  double value = 0.0;
  ParamVector grad;
  int power_iters_used = 0;
  std::vector<SingularPair> warm_start;
};

// Upper bound kappa * prod_l ||W_l||_2 on the Lipschitz constant of the
// network map, with each spectral norm estimated by power iteration. The
// gradient uses u v^T of each layer's top singular pair.
LipschitzEstimate lipschitz_value_grad(const ParamVector& params,
                                       const std::vector<SingularPair>* warm_start,
                                       int iters, double kappa = 1.0);

// Euclidean projection onto the ball of the given radius.
std::vector<double> project_ball(std::span<const double> v, double radius);
void project_ball_inplace(std::span<double> v, double radius);

namespace vec {

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double squared_norm(std::span<const double> a);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
bool all_finite(std::span<const double> a);

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace vec

}  // namespace bafdp

#endif  // BAFDP_CORE_MATH_HPP_
