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

#include "bafdp/rng.hpp"

#include <cmath>
#include <numbers>

namespace bafdp {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

CounterStream::CounterStream(std::uint64_t key, std::uint64_t stream)
    : key_(key), stream_(stream), base_(mix64(mix64(key + kGolden) ^ mix64(stream * kGolden + 1))) {}

CounterStream::result_type CounterStream::operator()() {
  ++counter_;
  return mix64(base_ + counter_ * kGolden);
}

double CounterStream::uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double CounterStream::normal() {
  // Box-Muller, one output per pair of uniforms so the draw count per
  // normal is fixed.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace bafdp
