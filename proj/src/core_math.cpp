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

#include "bafdp/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bafdp {

ParamVector ParamVector::zeros(std::vector<LayerShape> shapes) {
  ParamVector p;
  std::size_t n = 0;
  for (const auto& s : shapes) n += s.count();
  p.values.assign(n, 0.0);
  p.shapes = std::move(shapes);
  return p;
}

std::size_t ParamVector::offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) off += shapes[l].count();
  return off;
}

std::span<double> ParamVector::weight(std::size_t layer) {
  return {values.data() + offset(layer), shapes[layer].weight_count()};
}
std::span<const double> ParamVector::weight(std::size_t layer) const {
  return {values.data() + offset(layer), shapes[layer].weight_count()};
}
std::span<double> ParamVector::bias(std::size_t layer) {
  return {values.data() + offset(layer) + shapes[layer].weight_count(), shapes[layer].rows};
}
std::span<const double> ParamVector::bias(std::size_t layer) const {
  return {values.data() + offset(layer) + shapes[layer].weight_count(), shapes[layer].rows};
}

void ParamVector::check_consistent() const {
  if (shapes.empty()) throw ShapeError("parameter vector has no layers");
  std::size_t n = 0;
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    if (shapes[l].rows == 0 || shapes[l].cols == 0) throw ShapeError("layer with zero extent");
    if (l > 0 && shapes[l].cols != shapes[l - 1].rows) {
      throw ShapeError("layer " + std::to_string(l) + " expects " + std::to_string(shapes[l].cols) +
                       " inputs but previous layer emits " + std::to_string(shapes[l - 1].rows));
    }
    n += shapes[l].count();
  }
  if (n != values.size()) {
    throw ShapeError("parameter count " + std::to_string(values.size()) + " != shape total " +
                     std::to_string(n));
  }
}

bool ParamVector::all_finite() const { return vec::all_finite(values); }

std::vector<LayerShape> mlp_shapes(std::span<const std::size_t> widths) {
  if (widths.size() < 2) throw ShapeError("a network needs at least input and output widths");
  std::vector<LayerShape> shapes;
  for (std::size_t i = 1; i < widths.size(); ++i) shapes.push_back({widths[i], widths[i - 1]});
  return shapes;
}

void Batch::push_back(std::span<const double> x, std::span<const double> y) {
  if (x.size() != d_x || y.size() != d_y) throw ShapeError("sample width does not match batch");
  inputs.insert(inputs.end(), x.begin(), x.end());
  targets.insert(targets.end(), y.begin(), y.end());
}

namespace {

// Forward pass that keeps every layer's pre-activation for backprop.
// pre[l] holds W_l a_{l-1} + b_l; the activation fed to layer l+1 is
// relu(pre[l]) except after the last layer.
void forward_trace(const ParamVector& p, std::span<const double> x,
                   std::vector<std::vector<double>>& pre) {
  const std::size_t layers = p.shapes.size();
  pre.resize(layers);
  std::vector<double> act(x.begin(), x.end());
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& s = p.shapes[l];
    const double* w = p.values.data() + off;
    const double* b = w + s.weight_count();
    auto& out = pre[l];
    out.assign(s.rows, 0.0);
    for (std::size_t r = 0; r < s.rows; ++r) {
      double acc = b[r];
      const double* row = w + r * s.cols;
      for (std::size_t c = 0; c < s.cols; ++c) acc += row[c] * act[c];
      out[r] = acc;
    }
    off += s.count();
    if (l + 1 < layers) {
      act.resize(s.rows);
      for (std::size_t r = 0; r < s.rows; ++r) act[r] = out[r] > 0.0 ? out[r] : 0.0;
    }
  }
}

void check_batch(const ParamVector& p, const Batch& batch) {
  p.check_consistent();
  if (batch.size() == 0) throw ShapeError("empty batch");
  if (batch.d_x != p.input_dim() || batch.d_y != p.output_dim()) {
    throw ShapeError("batch is " + std::to_string(batch.d_x) + "->" + std::to_string(batch.d_y) +
                     " but model is " + std::to_string(p.input_dim()) + "->" +
                     std::to_string(p.output_dim()));
  }
}

}  // namespace

std::vector<double> mlp_forward(const ParamVector& params, std::span<const double> x) {
  params.check_consistent();
  if (x.size() != params.input_dim()) {
    throw ShapeError("input has length " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(params.input_dim()));
  }
  std::vector<std::vector<double>> pre;
  forward_trace(params, x, pre);
  return pre.back();
}

LossGrad mlp_loss_grad(const ParamVector& params, const Batch& batch) {
  check_batch(params, batch);
  const std::size_t n = batch.size();
  const std::size_t layers = params.shapes.size();
  LossGrad out{0.0, ParamVector::zeros(params.shapes)};
  std::vector<std::size_t> offsets(layers);
  for (std::size_t l = 0; l < layers; ++l) offsets[l] = params.offset(l);

  std::vector<std::vector<double>> pre;
  std::vector<double> delta, prev_delta;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = batch.x(i);
    const auto y = batch.y(i);
    forward_trace(params, x, pre);
    const auto& yhat = pre.back();
    delta.resize(yhat.size());
    for (std::size_t k = 0; k < yhat.size(); ++k) {
      const double r = yhat[k] - y[k];
      out.loss += r * r * inv_n;
      delta[k] = 2.0 * r * inv_n;
    }
    for (std::size_t l = layers; l-- > 0;) {
      const auto& s = params.shapes[l];
      const double* w = params.values.data() + offsets[l];
      double* gw = out.grad.values.data() + offsets[l];
      double* gb = gw + s.weight_count();
      // Input activation of layer l.
      std::span<const double> a_in = x;
      std::vector<double> act;
      if (l > 0) {
        act.resize(s.cols);
        for (std::size_t c = 0; c < s.cols; ++c) act[c] = pre[l - 1][c] > 0.0 ? pre[l - 1][c] : 0.0;
        a_in = act;
      }
      for (std::size_t r = 0; r < s.rows; ++r) {
        const double d = delta[r];
        gb[r] += d;
        if (d == 0.0) continue;
        double* grow = gw + r * s.cols;
        for (std::size_t c = 0; c < s.cols; ++c) grow[c] += d * a_in[c];
      }
      if (l == 0) break;
      prev_delta.assign(s.cols, 0.0);
      for (std::size_t r = 0; r < s.rows; ++r) {
        const double d = delta[r];
        if (d == 0.0) continue;
        const double* row = w + r * s.cols;
        for (std::size_t c = 0; c < s.cols; ++c) prev_delta[c] += row[c] * d;
      }
      for (std::size_t c = 0; c < s.cols; ++c) {
        if (!(pre[l - 1][c] > 0.0)) prev_delta[c] = 0.0;
      }
      delta.swap(prev_delta);
    }
  }
  if (!std::isfinite(out.loss) || !out.grad.all_finite()) {
    throw NumericError("non-finite loss or gradient in mlp_loss_grad");
  }
  return out;
}

double mlp_loss(const ParamVector& params, const Batch& batch) {
  check_batch(params, batch);
  const std::size_t n = batch.size();
  std::vector<std::vector<double>> pre;
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    forward_trace(params, batch.x(i), pre);
    const auto y = batch.y(i);
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double r = pre.back()[k] - y[k];
      loss += r * r * inv_n;
    }
  }
  if (!std::isfinite(loss)) throw NumericError("non-finite loss");
  return loss;
}

namespace {

struct LayerSpectrum {
  double sigma = 0.0;
  std::vector<double> u;
  std::vector<double> v;
};

// u <- W v
void mat_vec(std::span<const double> w, const LayerShape& s, std::span<const double> v,
             std::vector<double>& u) {
  u.assign(s.rows, 0.0);
  for (std::size_t r = 0; r < s.rows; ++r) {
    const double* row = w.data() + r * s.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < s.cols; ++c) acc += row[c] * v[c];
    u[r] = acc;
  }
}

// v <- W^T u
void mat_t_vec(std::span<const double> w, const LayerShape& s, std::span<const double> u,
               std::vector<double>& v) {
  v.assign(s.cols, 0.0);
  for (std::size_t r = 0; r < s.rows; ++r) {
    const double* row = w.data() + r * s.cols;
    const double ur = u[r];
    for (std::size_t c = 0; c < s.cols; ++c) v[c] += row[c] * ur;
  }
}

bool normalize(std::vector<double>& x) {
  const double n = vec::norm(x);
  if (!(n > 0.0) || !std::isfinite(n)) return false;
  for (double& e : x) e /= n;
  return true;
}

LayerSpectrum top_singular(std::span<const double> w, const LayerShape& s,
                           const SingularPair* warm, int iters) {
  LayerSpectrum out;
  if (std::all_of(w.begin(), w.end(), [](double e) { return e == 0.0; })) {
    out.u.assign(s.rows, 0.0);
    out.v.assign(s.cols, 0.0);
    return out;
  }
  std::vector<double> v;
  if (warm != nullptr && warm->v.size() == s.cols) v = warm->v;
  if (v.empty() || !normalize(v)) {
    // The all-ones start is invariant under permutations of the layer's units.
    v.assign(s.cols, 1.0);
    normalize(v);
  }
  std::vector<double> u;
  std::size_t restart = 0;
  for (int k = 0; k < iters; ++k) {
    mat_vec(w, s, v, u);
    if (!normalize(u)) {
      // v landed in the null space; restart from a basis vector.
      v.assign(s.cols, 0.0);
      v[restart++ % s.cols] = 1.0;
      --k;
      if (restart > s.cols) break;
      continue;
    }
    mat_t_vec(w, s, u, v);
    if (!normalize(v)) break;
  }
  mat_vec(w, s, v, u);
  out.sigma = vec::norm(u);
  if (out.sigma > 0.0) {
    for (double& e : u) e /= out.sigma;
  } else {
    u.assign(s.rows, 0.0);
  }
  out.u = std::move(u);
  out.v = std::move(v);
  return out;
}

}  // namespace

LipschitzEstimate lipschitz_value_grad(const ParamVector& params,
                                       const std::vector<SingularPair>* warm_start, int iters,
                                       double kappa) {
  params.check_consistent();
  if (iters < 1) throw std::invalid_argument("power iteration count must be >= 1");
  LipschitzEstimate est;
  est.grad = ParamVector::zeros(params.shapes);
  const std::size_t layers = params.shapes.size();
  if (kappa == 0.0) {
    est.warm_start.resize(layers);
    return est;
  }
  std::vector<LayerSpectrum> spectra(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const SingularPair* warm =
        (warm_start != nullptr && warm_start->size() == layers) ? &(*warm_start)[l] : nullptr;
    spectra[l] = top_singular(params.weight(l), params.shapes[l], warm, iters);
  }
  est.power_iters_used = iters;
  double value = kappa;
  for (const auto& sp : spectra) value *= sp.sigma;
  est.value = value;
  for (std::size_t l = 0; l < layers; ++l) {
    double others = kappa;
    for (std::size_t k = 0; k < layers; ++k) {
      if (k != l) others *= spectra[k].sigma;
    }
    const auto& s = params.shapes[l];
    auto g = est.grad.weight(l);
    if (others != 0.0 && spectra[l].sigma > 0.0) {
      for (std::size_t r = 0; r < s.rows; ++r) {
        for (std::size_t c = 0; c < s.cols; ++c) {
          g[r * s.cols + c] = others * spectra[l].u[r] * spectra[l].v[c];
        }
      }
    }
    est.warm_start.push_back({std::move(spectra[l].u), std::move(spectra[l].v)});
  }
  return est;
}

std::vector<double> project_ball(std::span<const double> v, double radius) {
  std::vector<double> out(v.begin(), v.end());
  project_ball_inplace(out, radius);
  return out;
}

void project_ball_inplace(std::span<double> v, double radius) {
  if (radius < 0.0) throw std::invalid_argument("projection radius must be nonnegative");
  const double n = vec::norm(v);
  if (n <= radius) return;
  // Rounding can leave the rescaled norm a few ulps above the radius; shrink
  // until it is inside so a second projection is the identity.
  std::vector<double> orig(v.begin(), v.end());
  double scale = radius / n;
  for (int guard = 0; guard < 64; ++guard) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = orig[i] * scale;
    if (vec::norm(v) <= radius) return;
    scale = std::nextafter(scale, 0.0);
  }
}

namespace vec {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double e) { return std::isfinite(e); });
}

}  // namespace vec

}  // namespace bafdp
