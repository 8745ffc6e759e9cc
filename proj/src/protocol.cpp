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

#include "bafdp/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <tuple>

namespace bafdp {

Method parse_method(const std::string& name) {
  if (name == "bafdp") return Method::bafdp;
  if (name == "bsfdp") return Method::bsfdp;
  if (name == "fedavg") return Method::fedavg;
  if (name == "rsa_no_dp") return Method::rsa_no_dp;
  throw Error("unknown method '" + name + "'");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::bafdp: return "bafdp";
    case Method::bsfdp: return "bsfdp";
    case Method::fedavg: return "fedavg";
    case Method::rsa_no_dp: return "rsa_no_dp";
  }
  return "unknown";
}

std::vector<std::string> SimConfig::problems() const {
  std::vector<std::string> out;
  if (clients < 1) out.push_back("clients must be >= 1");
  if (byzantine >= clients) out.push_back("byzantine must leave at least one honest client");
  if (quorum < 1 || quorum > clients) out.push_back("quorum must lie in [1, clients]");
  if (iterations < 1) out.push_back("iterations must be >= 1");
  if (eval_every < 1) out.push_back("eval_every must be >= 1");
  if (power_iters < 1) out.push_back("power_iters must be >= 1");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) out.push_back("kappa must be >= 0");
  if (!(reg_floor_lambda >= 0.0) || !(reg_floor_phi >= 0.0)) out.push_back("regularization floors must be >= 0");
  if (!(delay.log_sigma >= 0.0) || !std::isfinite(delay.log_mu)) out.push_back("delay parameters must be finite, log_sigma >= 0");
  if (!(delay.straggler_multiplier > 0.0)) out.push_back("straggler_multiplier must be positive");
  if (delay.stragglers > clients) out.push_back("stragglers must not exceed clients");
  if (!(gap_target >= 0.0)) out.push_back("gap_target must be >= 0");
  for (const auto& p : hp.problems()) out.push_back(p);
  for (const auto& p : attack.problems()) out.push_back("attack " + p);
  return out;
}

ParamVector init_params(const std::vector<LayerShape>& shapes, std::uint64_t seed) {
  ParamVector p = ParamVector::zeros(shapes);
  CounterStream rng(seed, streams::kInit);
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const double r = 1.0 / std::sqrt(static_cast<double>(shapes[l].cols));
    for (double& w : p.weight(l)) w = -r + 2.0 * r * rng.uniform();
    for (double& b : p.bias(l)) b = -r + 2.0 * r * rng.uniform();
  }
  return p;
}

Batch draw_minibatch(const Batch& data, std::size_t size, CounterStream& rng) {
  const std::size_t n = data.size();
  if (n == 0) throw ShapeError("cannot sample from an empty dataset");
  if (size == 0 || size >= n) return data;
  Batch out;
  out.d_x = data.d_x;
  out.d_y = data.d_y;
  out.inputs.reserve(size * data.d_x);
  out.targets.reserve(size * data.d_y);
  for (std::size_t k = 0; k < size; ++k) {
    const std::size_t i = static_cast<std::size_t>(rng() % n);
    out.push_back(data.x(i), data.y(i));
  }
  return out;
}

double draw_delay(ClientState& client, const DelayConfig& delay) {
  const double z = client.delay_rng.normal();
  return client.delay_scale * std::exp(delay.log_mu + delay.log_sigma * z);
}

namespace {

void require_finite(const ClientState& c, const UploadMessage& msg) {
  if (!msg.omega.all_finite() || !std::isfinite(msg.eps)) {
    std::ostringstream os;
    os << "client " << c.id << " produced a non-finite update at iteration " << c.last_activation;
    throw NumericError(os.str());
  }
}

}  // namespace

UploadMessage client_local_step(ClientState& client, const ParamVector& z, double lambda,
                                const Batch& data, const StepContext& ctx, double now) {
  const Batch batch = draw_minibatch(data, ctx.batch_size, client.data_rng);
  double sigma = 0.0;
  double c3 = 0.0;
  if (ctx.privacy_active) {
    const NoiseScale ns = gaussian_sigma(client.eps, ctx.privacy);
    sigma = ns.sigma;
    c3 = ns.c3;
  }
  const Batch noisy = perturb_batch(batch, sigma, client.data_rng);
  const LossGrad lg = mlp_loss_grad(client.omega, noisy);
  const LipschitzEstimate lip = lipschitz_value_grad(
      client.omega, client.warm_start.empty() ? nullptr : &client.warm_start, ctx.power_iters, ctx.kappa);
  client.warm_start = lip.warm_start;
  const double rho = wasserstein_radius(client.eta, sigma);
  const ParamVector g = omega_grad(client.omega, lg, rho, lip, client.phi, z, ctx.hp, ctx.m);
  if (ctx.privacy_active) {
    const double ge = epsilon_grad(client.eps, lip.value, lambda, c3, ctx.m);
    client.eps = std::clamp(client.eps - ctx.hp.step_eps * ge, ctx.hp.epsilon_min, std::sqrt(ctx.hp.mu2));
  }
  for (std::size_t i = 0; i < g.dim(); ++i) client.omega.values[i] -= ctx.hp.step_omega * g.values[i];
  project_ball_inplace(client.omega.values, std::sqrt(ctx.hp.mu1));
  UploadMessage msg{client.id, client.omega, client.eps, client.phi, now};
  require_finite(client, msg);
  return msg;
}

UploadMessage fedavg_local_step(ClientState& client, const ParamVector& z, const Batch& data,
                                const StepContext& ctx, double now) {
  client.omega = z;
  const Batch batch = draw_minibatch(data, ctx.batch_size, client.data_rng);
  const LossGrad lg = mlp_loss_grad(client.omega, batch);
  for (std::size_t i = 0; i < lg.grad.dim(); ++i) client.omega.values[i] -= ctx.hp.step_omega * lg.grad.values[i];
  UploadMessage msg{client.id, client.omega, client.eps, client.phi, now};
  require_finite(client, msg);
  return msg;
}

std::vector<std::size_t> server_aggregate_step(ServerState& server, const HyperParams& hp,
                                               const RegSchedule& lambda_sched, int m,
                                               bool update_lambda) {
  if (server.buffer.size() < server.quorum) return {};
  std::vector<std::size_t> active;
  const double phi_radius = std::sqrt(hp.mu4);
  for (auto& [id, msg] : server.buffer) {
    auto& rec = server.records.at(id);
    rec.omega = std::move(msg.omega);
    rec.phi = project_ball(msg.phi, phi_radius);
    rec.eps = msg.eps;
    active.push_back(id);
  }
  server.buffer.clear();
  std::vector<std::span<const double>> omegas;
  std::vector<std::span<const double>> phis;
  for (const auto& rec : server.records) {
    omegas.emplace_back(rec.omega.values);
    phis.emplace_back(rec.phi);
  }
  const auto g = z_grad(omegas, phis, server.z.values, hp.psi, m);
  for (std::size_t i = 0; i < g.size(); ++i) server.z.values[i] -= hp.step_z * g[i];
  project_ball_inplace(server.z.values, std::sqrt(hp.mu1));
  if (update_lambda) {
    for (std::size_t id : active) {
      auto& rec = server.records[id];
      rec.lambda = lambda_step(rec.lambda, rec.eps, server.t, lambda_sched, hp);
    }
  }
  ++server.t;
  return active;
}

ParamVector fedavg_aggregate(std::span<const ParamVector> models, std::span<const double> weights) {
  if (models.empty()) throw Error("fedavg needs at least one model");
  if (weights.size() != models.size()) throw ShapeError("fedavg weights do not match models");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error("fedavg weights must be nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw Error("fedavg weights sum to zero");
  ParamVector out = ParamVector::zeros(models.front().shapes);
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (models[k].dim() != out.dim()) throw ShapeError("fedavg models differ in dimension");
    vec::axpy(weights[k] / total, models[k].values, out.values);
  }
  return out;
}

std::vector<std::size_t> fedavg_server_step(ServerState& server, std::span<const double> weights) {
  if (server.buffer.size() < server.quorum) return {};
  std::vector<std::size_t> active;
  std::vector<ParamVector> models;
  std::vector<double> w;
  for (auto& [id, msg] : server.buffer) {
    active.push_back(id);
    models.push_back(msg.omega);
    w.push_back(weights[id]);
    auto& rec = server.records.at(id);
    rec.omega = std::move(msg.omega);
    rec.eps = msg.eps;
  }
  server.buffer.clear();
  server.z = fedavg_aggregate(models, w);
  ++server.t;
  return active;
}

void client_dual_step(ClientState& client, const ParamVector& z, std::int64_t t,
                      const RegSchedule& phi_sched, const HyperParams& hp) {
  client.phi = phi_step(client.phi, z.values, client.omega.values, t, phi_sched, hp);
}

std::pair<double, double> evaluate(const ParamVector& z, const WindowedDataset& data, const NormState& norm) {
  std::vector<double> targets;
  std::vector<double> preds;
  targets.reserve(data.samples.targets.size());
  preds.reserve(data.samples.targets.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto yhat = norm.y.invert(mlp_forward(z, data.samples.x(i)));
    const auto y = norm.y.invert(data.samples.y(i));
    targets.insert(targets.end(), y.begin(), y.end());
    preds.insert(preds.end(), yhat.begin(), yhat.end());
  }
  return {rmse(targets, preds), mae(targets, preds)};
}

void validate_sim(const SimConfig& cfg, const FederatedData& data) {
  auto issues = cfg.problems();
  if (data.clients.size() != cfg.clients) {
    issues.push_back("data holds " + std::to_string(data.clients.size()) + " client datasets for " +
                     std::to_string(cfg.clients) + " clients");
  }
  for (std::size_t i = 0; i < data.clients.size(); ++i) {
    if (data.clients[i].size() == 0) issues.push_back("client " + std::to_string(i) + " has no training data");
  }
  if (data.test.size() == 0) issues.push_back("test set is empty");
  if (!data.norm.fitted()) issues.push_back("normalization state is not fitted");
  if (!data.clients.empty()) {
    PrivacyConfig p = cfg.privacy;
    p.d = static_cast<int>(data.clients.front().samples.d_x + data.clients.front().samples.d_y);
    for (const auto& s : p.problems()) issues.push_back("privacy " + s);
  }
  if (!issues.empty()) {
    std::string msg = "invalid simulation config:";
    for (const auto& s : issues) msg += "\n  " + s;
    throw Error(msg);
  }
}

namespace {

class Engine {
 public:
  Engine(const SimConfig& cfg, const FederatedData& data, const TraceObserver& observer)
      : cfg_(cfg), data_(data), observer_(observer) {
    validate_sim(cfg, data);
    const auto& first = data.clients.front().samples;
    const std::vector<std::size_t> widths = [&] {
      std::vector<std::size_t> w{first.d_x};
      w.insert(w.end(), cfg.hidden.begin(), cfg.hidden.end());
      w.push_back(first.d_y);
      return w;
    }();
    ctx_.privacy = cfg.privacy;
    ctx_.privacy.d = static_cast<int>(first.d_x + first.d_y);
    ctx_.hp = cfg.hp;
    ctx_.hp.budget_a = ctx_.privacy.budget_a;
    ctx_.hp.epsilon_min = ctx_.privacy.epsilon_min;
    ctx_.m = static_cast<int>(cfg.clients);
    ctx_.kappa = cfg.kappa;
    ctx_.power_iters = cfg.power_iters;
    ctx_.batch_size = cfg.batch_size;
    ctx_.privacy_active = cfg.method == Method::bafdp || cfg.method == Method::bsfdp;
    c3_ = noise_constant(ctx_.privacy);
    lambda_sched_ = {cfg.hp.step_lambda, cfg.reg_floor_lambda};
    phi_sched_ = {cfg.hp.step_phi, cfg.reg_floor_phi};

    const ParamVector z0 = init_params(mlp_shapes(widths), cfg.seed);
    res_.server.z = z0;
    res_.server.quorum = cfg.method == Method::bsfdp ? cfg.clients : cfg.quorum;
    const std::size_t honest = cfg.clients - cfg.byzantine;
    for (std::size_t i = 0; i < cfg.clients; ++i) {
      ClientState c;
      c.id = i;
      c.omega = z0;
      c.eps = ctx_.privacy.epsilon_min;
      c.phi.assign(z0.dim(), 0.0);
      c.data_rng = CounterStream(cfg.seed, streams::kClientData + i);
      c.delay_rng = CounterStream(cfg.seed, streams::kClientDelay + i);
      c.attack_rng = CounterStream(cfg.seed, streams::kClientAttack + i);
      c.honest = i < honest;
      c.delay_scale = i < cfg.delay.stragglers ? cfg.delay.straggler_multiplier : 1.0;
      c.eta = eta_radius(data.clients[i].size(), ctx_.privacy);
      res_.clients.push_back(std::move(c));
      res_.server.records.push_back({z0, std::vector<double>(z0.dim(), 0.0), ctx_.privacy.epsilon_min, 0.0});
      weights_.push_back(static_cast<double>(data.clients[i].size()));
    }
    train_union_.d_x = first.d_x;
    train_union_.d_y = first.d_y;
    for (std::size_t i = 0; i < honest; ++i) {
      const auto& b = data.clients[i].samples;
      train_union_.inputs.insert(train_union_.inputs.end(), b.inputs.begin(), b.inputs.end());
      train_union_.targets.insert(train_union_.targets.end(), b.targets.begin(), b.targets.end());
    }
    attack_ = cfg.attack;
    attack_.collusion_seed = cfg.attack.collusion_seed ^ mix64(cfg.seed);
    res_.trace.config_fingerprint = cfg.fingerprint;
    res_.trace.seed = cfg.seed;
    res_.trace.clients = cfg.clients;
    model_bytes_ = static_cast<std::uint64_t>(z0.dim()) * sizeof(double);
  }

  ServerState& server() { return res_.server; }
  std::size_t clients() const { return cfg_.clients; }

  // Step 1 for client `id` at virtual time `now`; returns (arrival, message).
  std::pair<double, UploadMessage> dispatch(std::size_t id, double now) {
    auto& c = res_.clients[id];
    const auto& z = res_.server.z;
    if (cfg_.record_client_events) {
      TraceEvent e;
      e.virtual_time = now;
      e.iteration = res_.server.t;
      e.kind = EventKind::client_step;
      e.client_id = id;
      e.eps = c.eps;
      emit(std::move(e));
    }
    const Batch& data = data_.clients[id].samples;
    UploadMessage msg = cfg_.method == Method::fedavg
                            ? fedavg_local_step(c, z, data, ctx_, now)
                            : client_local_step(c, z, res_.server.records[id].lambda, data, ctx_, now);
    if (!c.honest) msg = attack_message(attack_, msg, z, res_.server.t, c.attack_rng);
    const double arrival = now + draw_delay(c, cfg_.delay);
    return {arrival, std::move(msg)};
  }

  std::vector<std::size_t> server_step() {
    auto& s = res_.server;
    const std::int64_t t = s.t;
    std::vector<std::size_t> active =
        cfg_.method == Method::fedavg
            ? fedavg_server_step(s, weights_)
            : server_aggregate_step(s, ctx_.hp, lambda_sched_, ctx_.m, ctx_.privacy_active);
    if (active.empty()) return active;
    if (!s.z.all_finite()) throw NumericError("consensus model became non-finite at iteration " + std::to_string(t));
    TraceEvent e;
    e.virtual_time = s.clock;
    e.iteration = s.t;
    e.kind = EventKind::server_step;
    e.bytes_transferred = comm_volume(model_bytes_, active.size(), 1);
    emit(std::move(e));
    for (std::size_t id : active) {
      auto& c = res_.clients[id];
      if (cfg_.method != Method::fedavg) client_dual_step(c, s.z, t, phi_sched_, ctx_.hp);
      c.last_activation = s.t;
      if (cfg_.record_client_events) {
        TraceEvent d;
        d.virtual_time = s.clock;
        d.iteration = s.t;
        d.kind = EventKind::dual_step;
        d.client_id = id;
        emit(std::move(d));
      }
    }
    if (s.t % cfg_.eval_every == 0 || s.t >= cfg_.iterations) eval();
    return active;
  }

  void eval() {
    auto& s = res_.server;
    last_eval_t_ = s.t;
    TraceEvent e;
    e.virtual_time = s.clock;
    e.iteration = s.t;
    e.kind = EventKind::eval;
    const auto [r, a] = evaluate(s.z, data_.test, data_.norm);
    e.test_rmse = r;
    e.test_mae = a;
    e.train_loss = mlp_loss(s.z, train_union_);
    if (cfg_.method != Method::fedavg) e.stationarity_gap = gap();
    std::vector<std::pair<std::size_t, double>> eps;
    for (const auto& c : res_.clients) eps.emplace_back(c.id, c.eps);
    e.eps_per_client = std::move(eps);
    if (cfg_.gap_target > 0.0 && e.stationarity_gap && *e.stationarity_gap <= cfg_.gap_target) stop_ = true;
    emit(std::move(e));
  }

  double gap() const {
    const auto& s = res_.server;
    std::vector<ClientSnapshot> snaps;
    for (const auto& c : res_.clients) {
      if (!c.honest) continue;
      snaps.push_back({&c.omega, c.eps, c.phi, s.records[c.id].lambda, c.eta, &data_.clients[c.id].samples});
    }
    GapContext g;
    g.z = &s.z;
    for (const auto& rec : s.records) {
      g.server_omegas.emplace_back(rec.omega.values);
      g.server_phis.emplace_back(rec.phi);
    }
    g.t = s.t;
    g.lambda_sched = lambda_sched_;
    g.phi_sched = phi_sched_;
    g.hp = ctx_.hp;
    g.m = ctx_.m;
    g.c3 = c3_;
    g.kappa = ctx_.kappa;
    g.power_iters = cfg_.power_iters;
    g.privacy_active = ctx_.privacy_active;
    g.noise_key = mix64(cfg_.seed ^ mix64(static_cast<std::uint64_t>(s.t) + 0x5bd1e995ULL));
    return stationarity_gap(snaps, g);
  }

  bool done() const { return stop_ || res_.server.t >= cfg_.iterations; }
  bool evaluated_now() const { return last_eval_t_ == res_.server.t; }

  SimResult finish() {
    if (!evaluated_now()) eval();
    res_.z = res_.server.z;
    res_.summary.method = to_string(cfg_.method);
    res_.summary.budget_a = ctx_.privacy.budget_a;
    res_.summary.horizon = data_.test.spec.horizon;
    res_.summary.attack_ratio = static_cast<double>(cfg_.byzantine) / static_cast<double>(cfg_.clients);
    summarize(res_.trace, cfg_.gap_target > 0.0 ? cfg_.gap_target : 1e-3, res_.summary);
    return std::move(res_);
  }

 private:
  void emit(TraceEvent e) {
    if (observer_) observer_(e);
    res_.trace.events.push_back(std::move(e));
  }

  const SimConfig& cfg_;
  const FederatedData& data_;
  const TraceObserver& observer_;
  StepContext ctx_;
  double c3_ = 0.0;
  RegSchedule lambda_sched_;
  RegSchedule phi_sched_;
  AttackSpec attack_;
  std::vector<double> weights_;
  Batch train_union_;
  std::uint64_t model_bytes_ = 0;
  std::int64_t last_eval_t_ = -1;
  bool stop_ = false;
  SimResult res_;
};

struct Arrival {
  double time;
  std::size_t id;
  UploadMessage msg;
};

struct LaterFirst {
  bool operator()(const Arrival& a, const Arrival& b) const {
    return std::tie(a.time, a.id) > std::tie(b.time, b.id);
  }
};

}  // namespace

SimResult simulate(const SimConfig& cfg, const FederatedData& data, const TraceObserver& observer) {
  Engine eng(cfg, data, observer);
  eng.eval();
  std::priority_queue<Arrival, std::vector<Arrival>, LaterFirst> queue;
  for (std::size_t id = 0; id < eng.clients(); ++id) {
    auto [at, msg] = eng.dispatch(id, 0.0);
    queue.push({at, id, std::move(msg)});
  }
  while (!eng.done()) {
    Arrival a = queue.top();
    queue.pop();
    auto& s = eng.server();
    s.clock = a.time;
    s.buffer.insert_or_assign(a.id, std::move(a.msg));
    const auto active = eng.server_step();
    if (eng.done()) break;
    for (std::size_t id : active) {
      auto [at, msg] = eng.dispatch(id, s.clock);
      queue.push({at, id, std::move(msg)});
    }
  }
  return eng.finish();
}

SimResult simulate_synchronous(const SimConfig& cfg, const FederatedData& data, const TraceObserver& observer) {
  SimConfig sync = cfg;
  sync.quorum = cfg.clients;
  Engine eng(sync, data, observer);
  eng.eval();
  auto& s = eng.server();
  std::vector<std::size_t> everyone(eng.clients());
  for (std::size_t id = 0; id < everyone.size(); ++id) everyone[id] = id;
  std::vector<std::size_t> next = everyone;
  while (!eng.done()) {
    double round_end = s.clock;
    for (std::size_t id : next) {
      auto [at, msg] = eng.dispatch(id, s.clock);
      round_end = std::max(round_end, at);
      s.buffer.insert_or_assign(id, std::move(msg));
    }
    s.clock = round_end;
    next = eng.server_step();
  }
  return eng.finish();
}

}  // namespace bafdp
