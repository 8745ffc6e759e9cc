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

#ifndef BAFDP_RNG_HPP_
#define BAFDP_RNG_HPP_

#include <cstdint>
#include <limits>

namespace bafdp {

// Counter-based random stream: the i-th output is a bijective hash of
// (key, stream, i), so any draw can be reproduced from its coordinates
// without replaying earlier draws. Satisfies UniformRandomBitGenerator.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  CounterStream() = default;
  CounterStream(std::uint64_t key, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform in [0, 1).
  double uniform();
  double normal();

  std::uint64_t key() const { return key_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }
  void seek(std::uint64_t counter) { counter_ = counter; }

  bool operator==(const CounterStream&) const = default;

 private:
  std::uint64_t key_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t base_ = 0;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

// Well-known stream identifiers derived from a run seed.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kSynthetic = 2;
inline constexpr std::uint64_t kPartition = 3;
inline constexpr std::uint64_t kCollusion = 4;
inline constexpr std::uint64_t kClientData = 1000;
inline constexpr std::uint64_t kClientDelay = 1000000;
inline constexpr std::uint64_t kClientAttack = 2000000;
}  // namespace streams

}  // namespace bafdp

#endif  // BAFDP_RNG_HPP_
