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

#include <cmath>

#include "bafdp/privacy.hpp"

namespace bafdp {
namespace {

// Reference values evaluated at 30 significant digits outside the library.
constexpr double kSigmaEps1 = 4.84480526260538942;   // sqrt(2 ln(1.25e5))
constexpr double kEtaN1000 = 0.246447045409009756;   // (ln(40)/1000)^(1/4)
constexpr double kEtaN2 = 1.35810151574061950;       // sqrt(ln(40)/2)

PrivacyConfig unit_config() {
  PrivacyConfig cfg;
  cfg.delta = 1e-5;
  cfg.d = 1;
  cfg.sensitivity = 1.0;
  return cfg;
}

TEST(GaussianSigma, ClosedFormAtEpsOne) {
  const auto ns = gaussian_sigma(1.0, unit_config());
  EXPECT_NEAR(ns.sigma, 4.8448, 1e-3);
  EXPECT_NEAR(ns.sigma, kSigmaEps1, 1e-13);
  EXPECT_EQ(ns.c3, ns.sigma);
}

TEST(GaussianSigma, HalvesWhenEpsDoubles) {
  const auto cfg = unit_config();
  EXPECT_NEAR(gaussian_sigma(2.0, cfg).sigma, 2.4224, 1e-3);
  EXPECT_DOUBLE_EQ(gaussian_sigma(2.0, cfg).sigma, gaussian_sigma(1.0, cfg).sigma / 2.0);
}

TEST(GaussianSigma, VanishesForHugeEps) { EXPECT_LT(gaussian_sigma(1e9, unit_config()).sigma, 1e-8); }

TEST(GaussianSigma, ScalesWithSensitivityAndSqrtDimension) {
  PrivacyConfig cfg = unit_config();
  cfg.d = 9;
  cfg.sensitivity = 0.5;
  EXPECT_NEAR(gaussian_sigma(1.0, cfg).sigma, kSigmaEps1 * 3.0 * 0.5, 1e-12);
}

TEST(GaussianSigma, RejectsNonPositiveOrSubMinimumEps) {
  const auto cfg = unit_config();
  EXPECT_THROW(gaussian_sigma(0.0, cfg), std::invalid_argument);
  EXPECT_THROW(gaussian_sigma(-1.0, cfg), std::invalid_argument);
  EXPECT_THROW(gaussian_sigma(cfg.epsilon_min / 2.0, cfg), std::invalid_argument);
}

TEST(GaussianSigma, StrictlyDecreasingAndConvexOnGrid) {
  const auto cfg = unit_config();
  const double h = 0.005;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 400; ++k) {
    const double e = 0.02 + 0.01 * k;
    const double s = gaussian_sigma(e, cfg).sigma;
    EXPECT_LT(s, prev);
    prev = s;
    EXPECT_GT(gaussian_sigma(e + h, cfg).sigma - 2.0 * s + gaussian_sigma(e - h, cfg).sigma, 0.0);
  }
}

Batch scalar_batch(std::size_t n, double value) {
  Batch b;
  b.d_x = 1;
  b.d_y = 1;
  b.inputs.assign(n, value);
  b.targets.assign(n, 2.0 * value);
  return b;
}

TEST(PerturbBatch, ZeroSigmaIsBitExactAndDrawsNothing) {
  const Batch b = scalar_batch(10, 0.3);
  CounterStream rng(1, 2);
  const Batch out = perturb_batch(b, 0.0, rng);
  EXPECT_EQ(out.inputs, b.inputs);
  EXPECT_EQ(out.targets, b.targets);
  EXPECT_EQ(rng.counter(), 0u);
}

TEST(PerturbBatch, NoiseMomentsMatchStandardNormal) {
  const std::size_t n = 100000;
  const Batch b = scalar_batch(n, 0.0);
  CounterStream rng(42, 7);
  const Batch out = perturb_batch(b, 1.0, rng);
  double mean = 0.0;
  for (double v : out.inputs) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : out.inputs) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (n - 1));
  EXPECT_LE(std::abs(mean), 3.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(sd, 1.0, 0.02);
  EXPECT_EQ(out.targets, b.targets);
}

TEST(PerturbBatch, DeterministicPerStream) {
  const Batch b = scalar_batch(100, 1.0);
  CounterStream a(5, 9), c(5, 9);
  EXPECT_EQ(perturb_batch(b, 0.7, a).inputs, perturb_batch(b, 0.7, c).inputs);
}

TEST(PerturbBatch, IndependentStreamsAreUncorrelated) {
  const std::size_t n = 100000;
  const Batch b = scalar_batch(n, 0.0);
  CounterStream s1(3, 100), s2(3, 101);
  const auto x = perturb_batch(b, 1.0, s1).inputs;
  const auto y = perturb_batch(b, 1.0, s2).inputs;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 0.05);
}

TEST(PerturbBatch, RejectsNegativeSigma) {
  CounterStream rng(1, 1);
  EXPECT_THROW(perturb_batch(scalar_batch(2, 0.0), -1.0, rng), std::invalid_argument);
}

PrivacyConfig radius_config() {
  PrivacyConfig cfg;
  cfg.c1 = 2.0;
  cfg.gamma = 0.05;
  cfg.c2 = 1.0;
  cfg.d = 4;
  cfg.beta = 2.0;
  return cfg;
}

TEST(EtaRadius, LargeSampleBranch) {
  EXPECT_NEAR(eta_radius(1000, radius_config()), 0.2464, 1e-3);
  EXPECT_NEAR(eta_radius(1000, radius_config()), kEtaN1000, 1e-14);
}

TEST(EtaRadius, SmallSampleBranch) {
  EXPECT_NEAR(eta_radius(2, radius_config()), 1.3581, 1e-3);
  EXPECT_NEAR(eta_radius(2, radius_config()), kEtaN2, 1e-14);
}

TEST(EtaRadius, VanishesWithInfiniteData) { EXPECT_LT(eta_radius(1000000000, radius_config()), 0.01); }

TEST(EtaRadius, NonIncreasingWithinEachBranch) {
  const auto cfg = radius_config();
  double prev = eta_radius(1, cfg);
  for (std::size_t n = 2; n <= 3; ++n) {
    EXPECT_LE(eta_radius(n, cfg), prev);
    prev = eta_radius(n, cfg);
  }
  prev = eta_radius(4, cfg);
  for (std::size_t n = 5; n < 5000; ++n) {
    const double e = eta_radius(n, cfg);
    EXPECT_LE(e, prev);
    prev = e;
  }
}

TEST(EtaRadius, UsesTwoAsExponentFloorForSmallDimension) {
  PrivacyConfig cfg = radius_config();
  cfg.d = 1;
  EXPECT_NEAR(eta_radius(1000, cfg), std::sqrt(std::log(40.0) / 1000.0), 1e-15);
}

TEST(EtaRadius, RejectsNonPositiveLog) {
  PrivacyConfig cfg = radius_config();
  cfg.c1 = 0.01;
  EXPECT_THROW(eta_radius(10, cfg), std::invalid_argument);
  EXPECT_THROW(eta_radius(0, radius_config()), std::invalid_argument);
}

TEST(WassersteinRadius, SumOfParts) {
  EXPECT_DOUBLE_EQ(wasserstein_radius(0.5, 1.2), 1.7);
  EXPECT_EQ(wasserstein_radius(0.0, 0.0), 0.0);
  const double eta = eta_radius(1000, radius_config());
  const double sigma = gaussian_sigma(1.0, unit_config()).sigma;
  EXPECT_NEAR(wasserstein_radius(eta, sigma), 5.0912, 1e-3);
}

TEST(WassersteinRadius, DominatesBothParts) {
  for (double e : {0.0, 0.1, 3.0}) {
    for (double s : {0.0, 0.2, 9.0}) {
      EXPECT_GE(wasserstein_radius(e, s), std::max(e, s));
    }
  }
}

TEST(PrivacyConfig, RejectsDimensionTwoAndBadRanges) {
  PrivacyConfig cfg;
  cfg.d = 2;
  cfg.delta = 1.5;
  cfg.beta = 1.0;
  cfg.c1 = 0.01;
  const auto issues = cfg.problems();
  EXPECT_EQ(issues.size(), 4u);
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_TRUE(PrivacyConfig{}.problems().empty());
}

}  // namespace
}  // namespace bafdp
