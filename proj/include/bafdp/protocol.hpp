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

#ifndef BAFDP_PROTOCOL_HPP_
#define BAFDP_PROTOCOL_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bafdp/adversary.hpp"
#include "bafdp/core_math.hpp"
#include "bafdp/data.hpp"
#include "bafdp/metrics.hpp"
#include "bafdp/objective.hpp"
#include "bafdp/privacy.hpp"
#include "bafdp/rng.hpp"

namespace bafdp {

enum class Method { bafdp, bsfdp, fedavg, rsa_no_dp };

Method parse_method(const std::string& name);
std::string to_string(Method method);

// Per-activation latency in virtual seconds: exp(N(log_mu, log_sigma^2)),
// multiplied by straggler_multiplier for the `stragglers` lowest client ids.
struct DelayConfig {
  double log_mu = 0.0;
  double log_sigma = 0.25;
  std::size_t stragglers = 0;
  double straggler_multiplier = 10.0;
};

struct SimConfig {
  std::vector<std::size_t> hidden;  // hidden layer widths; empty is a linear model
  double kappa = 1.0;
  int power_iters = 20;
  PrivacyConfig privacy;  // privacy.d is derived from the data dimensions
  HyperParams hp;
  double reg_floor_lambda = 0.0;
  double reg_floor_phi = 0.0;
  Method method = Method::bafdp;
  std::size_t clients = 10;  // R, honest plus Byzantine
  std::size_t byzantine = 0;  // B, assigned to the highest ids
  std::size_t quorum = 4;    // S; forced to R by bsfdp
  std::int64_t iterations = 20000;
  std::size_t batch_size = 32;  // 0 uses the full local dataset
  AttackSpec attack;
  DelayConfig delay;
  std::int64_t eval_every = 100;
  // Stop early once an eval sees a stationarity gap at or below this; 0 disables.
  double gap_target = 0.0;
  bool record_client_events = true;
  std::uint64_t seed = 0;
  std::string fingerprint;

  std::vector<std::string> problems() const;
};

struct FederatedData {
  std::vector<WindowedDataset> clients;  // one per client, normalized
  WindowedDataset test;                  // normalized
  NormState norm;
};

struct ClientState {
  std::size_t id = 0;
  ParamVector omega;
  double eps = 0.0;
  std::vector<double> phi;
  std::int64_t last_activation = 0;
  CounterStream data_rng;
  CounterStream delay_rng;
  CounterStream attack_rng;
  bool honest = true;
  double delay_scale = 1.0;
  double eta = 0.0;
  std::vector<SingularPair> warm_start;
};

struct ClientRecord {
  ParamVector omega;
  std::vector<double> phi;
  double eps = 0.0;
  double lambda = 0.0;
};

struct ServerState {
  ParamVector z;
  std::vector<ClientRecord> records;
  std::map<std::size_t, UploadMessage> buffer;
  std::int64_t t = 0;
  double clock = 0.0;
  std::size_t quorum = 1;
};

struct StepContext {
  PrivacyConfig privacy;
  HyperParams hp;
  int m = 1;
  double kappa = 1.0;
  int power_iters = 20;
  std::size_t batch_size = 0;
  bool privacy_active = true;
};

ParamVector init_params(const std::vector<LayerShape>& shapes, std::uint64_t seed);

// Rows drawn uniformly with replacement; the full batch when size is 0 or
// not smaller than the dataset.
Batch draw_minibatch(const Batch& data, std::size_t size, CounterStream& rng);

double draw_delay(ClientState& client, const DelayConfig& delay);

// Step 1: one primal step on omega and eps against the broadcast (z, lambda).
UploadMessage client_local_step(ClientState& client, const ParamVector& z, double lambda,
                                const Batch& data, const StepContext& ctx, double now);

// Step 1 for the FedAvg baseline: restart from z and take a plain SGD step
// on clean data.
UploadMessage fedavg_local_step(ClientState& client, const ParamVector& z, const Batch& data,
                                const StepContext& ctx, double now);

// Step 2. Consumes the buffer when it holds at least `quorum` clients and
// returns their ids in ascending order; otherwise returns empty and leaves
// the state untouched.
std::vector<std::size_t> server_aggregate_step(ServerState& server, const HyperParams& hp,
                                               const RegSchedule& lambda_sched, int m,
                                               bool update_lambda);

std::vector<std::size_t> fedavg_server_step(ServerState& server, std::span<const double> weights);

// Step 3.
void client_dual_step(ClientState& client, const ParamVector& z, std::int64_t t,
                      const RegSchedule& phi_sched, const HyperParams& hp);

ParamVector fedavg_aggregate(std::span<const ParamVector> models, std::span<const double> weights);

struct SimResult {
  TrainingTrace trace;
  ParamVector z;
  std::vector<ClientState> clients;
  ServerState server;
  RunSummary summary;
};

using TraceObserver = std::function<void(const TraceEvent&)>;

// Raises Error on an invalid configuration before any computation.
void validate_sim(const SimConfig& cfg, const FederatedData& data);

SimResult simulate(const SimConfig& cfg, const FederatedData& data, const TraceObserver& observer = {});

// Lock-step rounds over all clients with a constant per-round latency. Used
// as the reference the event engine must reproduce when S = R and delays
// are constant.
SimResult simulate_synchronous(const SimConfig& cfg, const FederatedData& data,
                               const TraceObserver& observer = {});

// Global model predictions on `data`, denormalized with `norm`; returns
// (rmse, mae).
std::pair<double, double> evaluate(const ParamVector& z, const WindowedDataset& data, const NormState& norm);

}  // namespace bafdp

#endif  // BAFDP_PROTOCOL_HPP_
