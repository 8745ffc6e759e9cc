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

#include "bafdp/adversary.hpp"

#include <cmath>

namespace bafdp {

AttackKind parse_attack_kind(const std::string& name) {
  if (name == "gaussian") return AttackKind::gaussian;
  if (name == "sign_flip") return AttackKind::sign_flip;
  if (name == "same_value") return AttackKind::same_value;
  if (name == "large_constant") return AttackKind::large_constant;
  if (name == "zero") return AttackKind::zero;
  throw Error("unknown attack kind '" + name + "'");
}

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::gaussian: return "gaussian";
    case AttackKind::sign_flip: return "sign_flip";
    case AttackKind::same_value: return "same_value";
    case AttackKind::large_constant: return "large_constant";
    case AttackKind::zero: return "zero";
  }
  return "unknown";
}

std::vector<std::string> AttackSpec::problems() const {
  std::vector<std::string> out;
  if (!std::isfinite(scale)) out.push_back("scale must be finite");
  return out;
}

UploadMessage attack_message(const AttackSpec& spec, const UploadMessage& honest,
                             const ParamVector& z, std::int64_t t, CounterStream& rng) {
  if (z.dim() != honest.omega.dim()) throw ShapeError("attack: z and omega differ in dimension");
  UploadMessage out = honest;
  auto& w = out.omega.values;
  switch (spec.kind) {
    case AttackKind::gaussian:
      for (double& v : w) v = spec.scale * rng.normal();
      break;
    case AttackKind::sign_flip:
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = 2.0 * z.values[i] - honest.omega.values[i];
      break;
    case AttackKind::same_value: {
      CounterStream shared(mix64(spec.collusion_seed) ^ static_cast<std::uint64_t>(t), streams::kCollusion);
      for (double& v : w) v = spec.scale * shared.normal();
      break;
    }
    case AttackKind::large_constant:
      for (double& v : w) v = spec.scale;
      break;
    case AttackKind::zero:
      for (double& v : w) v = 0.0;
      break;
  }
  out.eps = spec.scale;
  for (double& p : out.phi) p = spec.scale;
  return out;
}

}  // namespace bafdp
