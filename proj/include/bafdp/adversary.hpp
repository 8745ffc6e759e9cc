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

#ifndef BAFDP_ADVERSARY_HPP_
#define BAFDP_ADVERSARY_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "bafdp/core_math.hpp"
#include "bafdp/rng.hpp"

namespace bafdp {

enum class AttackKind { gaussian, sign_flip, same_value, large_constant, zero };

AttackKind parse_attack_kind(const std::string& name);
std::string to_string(AttackKind kind);

struct AttackSpec {
  AttackKind kind = AttackKind::large_constant;
  double scale = 1e6;
  // Key of the stream shared by colluding clients.
  std::uint64_t collusion_seed = 0;

  std::vector<std::string> problems() const;
};

struct UploadMessage {
  std::size_t client_id = 0;
  ParamVector omega;
  double eps = 0.0;
  std::vector<double> phi;
  double sent_at = 0.0;

  bool operator==(const UploadMessage&) const = default;
};

// Forges the upload of a Byzantine client. `z` is the consensus model the
// client last received and `t` the server iteration it was received at.
// `rng` is the client's own attack stream.
UploadMessage attack_message(const AttackSpec& spec, const UploadMessage& honest,
                             const ParamVector& z, std::int64_t t, CounterStream& rng);

}  // namespace bafdp

#endif  // BAFDP_ADVERSARY_HPP_
