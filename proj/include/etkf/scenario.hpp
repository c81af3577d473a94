#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "etkf/consensus.hpp"
#include "etkf/errors.hpp"
#include "etkf/estimator.hpp"
#include "etkf/graph.hpp"
#include "etkf/netsim.hpp"
#include "etkf/sod.hpp"
#include "etkf/trace.hpp"

namespace etkf {

struct GraphSpec {
  int n = 0;
  std::vector<Edge> edges;
  bool undirected = false;
};

struct LinkDelaySpec {
  int from = 0;
  int to = 0;
  double delay_ms = 0.0;
};

/// Declarative experiment description; see the scenario JSON schema in the
/// README for the on-disk form.
struct ScenarioConfig {
  GraphSpec graph;
  std::vector<double> initial_states;
  double delta_voltage = 0.1;   // volts
  double delta_energy = 0.01;   // per-unit; reserved for energy channels
  double process_noise_q = 0.0;
  double measurement_noise_r = 1.0;
  double period_s = 1.0;
  double tick_s = 0.01;
  double duration_s = 30.0;
  double delay_ms = 0.0;
  double drop_probability = 0.0;
  std::uint64_t seed = 42;
  double measurement_noise_std = 0.0;
  std::vector<LinkDelaySpec> link_delays;
};

inline CommGraph make_graph(const GraphSpec& spec) {
  std::vector<Edge> edges = spec.edges;
  if (spec.undirected) {
    const std::size_t direct = edges.size();
    for (std::size_t i = 0; i < direct; ++i)
      edges.push_back({edges[i].to, edges[i].from, edges[i].weight});
  }
  return build_graph(spec.n, edges);
}

inline void validate(const ScenarioConfig& cfg) {
  if (cfg.graph.n < 1) throw validation_error("scenario: graph needs at least one agent");
  if (static_cast<int>(cfg.initial_states.size()) != cfg.graph.n)
    throw validation_error("scenario: initial_states length " +
                           std::to_string(cfg.initial_states.size()) +
                           " does not match agent count " + std::to_string(cfg.graph.n));
  if (!(cfg.duration_s > 0.0)) throw validation_error("scenario: duration must be positive");
  if (!(cfg.tick_s > 0.0)) throw validation_error("scenario: tick must be positive");
  if (!(cfg.period_s > 0.0)) throw validation_error("scenario: period must be positive");
  if (cfg.tick_s > cfg.period_s)
    throw validation_error("scenario: tick must not exceed the estimation period");
  const double ratio = cfg.period_s / cfg.tick_s;
  if (std::abs(ratio - std::round(ratio)) > 1e-9)
    throw validation_error("scenario: tick must divide the estimation period");
  if (cfg.delta_voltage < 0.0 || cfg.delta_energy < 0.0)
    throw validation_error("scenario: send-on-delta thresholds must be >= 0");
  if (cfg.process_noise_q < 0.0) throw validation_error("scenario: Q must be >= 0");
  if (!(cfg.measurement_noise_r > 0.0))
    throw validation_error("scenario: R must be positive");
  if (cfg.delay_ms < 0.0) throw validation_error("scenario: delay_ms must be >= 0");
  if (cfg.drop_probability < 0.0 || cfg.drop_probability > 1.0)
    throw validation_error("scenario: drop_probability must be in [0, 1]");
  if (cfg.measurement_noise_std < 0.0)
    throw validation_error("scenario: measurement_noise_std must be >= 0");
  for (const auto& l : cfg.link_delays)
    if (l.from < 0 || l.from >= cfg.graph.n || l.to < 0 || l.to >= cfg.graph.n ||
        l.delay_ms < 0.0)
      throw validation_error("scenario: bad link delay override");
}

/// The two five-agent experiments: voltage states [52,44,47,48,49] on the
/// unit ring, delta 0.1 V, Q=0, R=1, T=1 s, ticked at 10 ms for 30 s, with
/// either no transmission delay or a uniform 150 ms one.
inline ScenarioConfig paper_scenario(bool delayed) {
  ScenarioConfig cfg;
  cfg.graph.n = 5;
  cfg.graph.undirected = true;
  cfg.graph.edges = {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}, {4, 0, 1.0}};
  cfg.initial_states = {52.0, 44.0, 47.0, 48.0, 49.0};
  cfg.delay_ms = delayed ? 150.0 : 0.0;
  return cfg;
}

/// Called once per agent at every estimation period with the fresh posterior.
using PeriodCallback =
    std::function<void(double t, int agent, double xhat, long cumulative_events)>;

namespace detail {

// Per-agent wiring: channel 0 is the agent's own sensor; channels 1..m are
// the neighbors' estimate broadcasts in ascending neighbor order. Global bus
// channel ids: sensor of agent j = j, estimate of agent j = n + j.
struct AgentRuntime {
  EtkfModel model;
  EtkfState state;
  std::vector<int> neighbors;
  std::vector<double> weights;
  std::vector<int> broadcast_targets;
  SodGate sensor_gate;
  SodGate estimate_gate;
  Eigen::VectorXd held;       // latest delivered value per channel
  std::vector<bool> fresh;    // delivered since the last measurement update
  long events = 0;            // sensor-channel transmissions
};

}  // namespace detail

/// Run the full event-triggered experiment. Each tick: send-on-delta gates
/// publish, the bus delivers, period boundaries run the Kalman measurement
/// update, the tick is logged, then the physical states integrate the
/// consensus control u_i = sum_j a_ij (held_estimate_j - xhat_i) while each
/// agent integrates its local average-consensus protocol over the same held
/// data. Deterministic for a fixed (config, seed).
inline TraceLog run_scenario(const ScenarioConfig& cfg,
                             const PeriodCallback& on_period = {}) {
  validate(cfg);
  const CommGraph g = make_graph(cfg.graph);
  if (!is_connected(g))
    throw validation_error("scenario: communication graph must be connected");
  const int n = g.size();
  const Eigen::MatrixXd L = laplacian(g);
  const double h = cfg.tick_s;
  const long spp = std::llround(cfg.period_s / h);
  const long n_ticks = std::llround(cfg.duration_s / h);
  const double delay_s = cfg.delay_ms / 1000.0;

  MessageBus bus(n, delay_s, cfg.drop_probability, cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  for (const auto& l : cfg.link_delays) bus.set_link_delay(l.from, l.to, l.delay_ms / 1000.0);

  std::mt19937_64 noise_rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, cfg.measurement_noise_std);

  std::vector<detail::AgentRuntime> agents;
  agents.reserve(n);
  for (int i = 0; i < n; ++i) {
    EtkfModel model = consensus_realization(i, g, cfg.measurement_noise_r,
                                            cfg.delta_voltage, cfg.process_noise_q,
                                            cfg.period_s);
    const auto p = model.output_dim();
    EtkfState st = init_state(model, Eigen::VectorXd::Constant(1, cfg.initial_states[i]),
                              10.0 * Eigen::MatrixXd::Identity(1, 1));
    detail::AgentRuntime rt{std::move(model),
                            std::move(st),
                            g.neighbors(i),
                            {},
                            g.out_neighbors(i),
                            SodGate(cfg.delta_voltage, i, i),
                            SodGate(cfg.delta_voltage, i, n + i),
                            Eigen::VectorXd(),
                            std::vector<bool>(p, false),
                            0};
    for (int j : rt.neighbors) rt.weights.push_back(g.weight(i, j));
    rt.held = rt.state.y_last;
    agents.push_back(std::move(rt));
  }

  Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(cfg.initial_states.data(), n);
  ConsensusState cs{x0, x0, 0.0};
  Eigen::VectorXd xhat = x0;

  TraceLog log;
  log.seed = cfg.seed;
  log.rows.reserve(static_cast<std::size_t>(n_ticks) * n);

  std::vector<int> event_flag(n, 0);
  std::vector<int> self_only(1, 0);
  for (long tick = 0; tick < n_ticks; ++tick) {
    const double t = static_cast<double>(tick) * h;

    // Gates evaluate and publish.
    for (int j = 0; j < n; ++j) {
      auto& a = agents[j];
      double reading = cs.x(j);
      if (cfg.measurement_noise_std > 0.0) reading += noise(noise_rng);
      event_flag[j] = 0;
      if (auto ev = a.sensor_gate.evaluate(reading, t)) {
        self_only[0] = j;
        bus.publish(*ev, self_only, t);
        event_flag[j] = 1;
        ++a.events;
      }
      if (auto ev = a.estimate_gate.evaluate(xhat(j), t))
        if (!a.broadcast_targets.empty()) bus.publish(*ev, a.broadcast_targets, t);
    }

    // Due messages land in the recipients' held tables.
    auto grouped = bus.deliver_due(t);
    for (int i = 0; i < n; ++i) {
      auto& a = agents[i];
      for (const EventMessage& msg : grouped[i]) {
        Eigen::Index row;
        if (msg.channel == i) {
          row = 0;
        } else {
          const int src = msg.channel - n;
          const auto it = std::find(a.neighbors.begin(), a.neighbors.end(), src);
          if (it == a.neighbors.end())
            throw numeric_error("scenario: message on unexpected channel " +
                                std::to_string(msg.channel) + " for agent " +
                                std::to_string(i));
          row = 1 + (it - a.neighbors.begin());
        }
        a.held(row) = msg.value;
        a.fresh[static_cast<std::size_t>(row)] = true;
      }
    }

    // Estimation period boundary: measurement update + project ahead.
    if (tick > 0 && tick % spp == 0) {
      for (int i = 0; i < n; ++i) {
        auto& a = agents[i];
        a.state.x_pred(0) = xhat(i);  // prior mean is the integrated protocol state
        std::vector<std::optional<double>> received(a.fresh.size());
        for (std::size_t c = 0; c < a.fresh.size(); ++c)
          if (a.fresh[c]) received[c] = a.held(static_cast<Eigen::Index>(c));
        MeasurementUpdate mu = measurement_update(a.state, a.model, received);
        xhat(i) = mu.x_post(0);
        a.state = project_ahead(mu.state, a.model, mu.x_post, mu.P_post);
        std::fill(a.fresh.begin(), a.fresh.end(), false);
        if (on_period) on_period(t, i, xhat(i), a.events);
      }
    }

    // Log the tick.
    for (int i = 0; i < n; ++i)
      log.rows.push_back(TraceRow{t, i, cs.x(i), cs.xbar(i), xhat(i),
                                  agents[i].held(0) - cs.x(i), event_flag[i]});

    // Consensus pull per agent over the held neighbor estimates. The control
    // law actuates exactly this pull (u_i = pull_i), so each agent knows its
    // own signal derivative when advancing its local protocol.
    Eigen::VectorXd pull(n);
    for (int i = 0; i < n; ++i) {
      const auto& a = agents[i];
      pull(i) = 0.0;
      for (std::size_t m = 0; m < a.neighbors.size(); ++m)
        pull(i) += a.weights[m] * (a.held(static_cast<Eigen::Index>(1 + m)) - xhat(i));
    }
    const Eigen::VectorXd& u = pull;
    // Protocol tick: own-signal derivative plus the neighbor relaxation.
    Eigen::VectorXd xhat_next = xhat;
    for (int i = 0; i < n; ++i) xhat_next(i) += h * (u(i) + pull(i));
    cs = consensus_step(cs, u, L, h);
    xhat = std::move(xhat_next);
  }
  return log;
}

struct Metrics {
  double band = 0.0;
  double target = 0.0;  // mean of the initial true states
  std::vector<std::optional<double>> settling_time;
  std::vector<long> events_per_agent;
  long total_events = 0;
  long periodic_equivalent_messages = 0;
  double reduction_ratio = 0.0;
  std::vector<double> final_error;
};

/// Settling times into +/-band around the initial average, event counts and
/// the reduction against one-message-per-channel-per-tick periodic traffic.
inline Metrics compute_metrics(const TraceLog& trace, double band) {
  if (trace.rows.empty()) throw validation_error("compute_metrics: empty trace");
  if (!(band > 0.0)) throw validation_error("compute_metrics: band must be positive");
  int n = 0;
  for (const TraceRow& r : trace.rows) n = std::max(n, r.agent + 1);

  std::vector<std::vector<const TraceRow*>> per_agent(n);
  for (const TraceRow& r : trace.rows) {
    if (r.agent < 0) throw validation_error("compute_metrics: negative agent id");
    per_agent[r.agent].push_back(&r);
  }
  for (int i = 0; i < n; ++i)
    if (per_agent[i].empty())
      throw validation_error("compute_metrics: missing rows for agent " + std::to_string(i));

  const double t0 = trace.rows.front().t;
  double sum0 = 0.0;
  int count0 = 0;
  for (const TraceRow& r : trace.rows)
    if (r.t == t0) {
      sum0 += r.x_true;
      ++count0;
    }
  Metrics m;
  m.band = band;
  m.target = sum0 / count0;

  long ticks = static_cast<long>(per_agent[0].size());
  m.periodic_equivalent_messages = static_cast<long>(n) * ticks;
  for (int i = 0; i < n; ++i) {
    const auto& rows = per_agent[i];
    long events = 0;
    for (const TraceRow* r : rows) events += r->event;
    m.events_per_agent.push_back(events);
    m.total_events += events;
    m.final_error.push_back(std::abs(rows.back()->xhat - m.target));

    std::optional<double> settle;
    if (std::abs(rows.back()->xhat - m.target) <= band) {
      std::size_t first_in = rows.size() - 1;
      while (first_in > 0 && std::abs(rows[first_in - 1]->xhat - m.target) <= band)
        --first_in;
      settle = rows[first_in]->t;
    }
    m.settling_time.push_back(settle);
  }
  m.reduction_ratio =
      1.0 - static_cast<double>(m.total_events) / m.periodic_equivalent_messages;
  return m;
}

/// Per-tick measurement error e_i(t) = last transmitted value - current true
/// value for one agent, as (t, e) pairs.
inline std::vector<std::pair<double, double>> measurement_error_series(const TraceLog& trace,
                                                                       int agent) {
  std::vector<std::pair<double, double>> out;
  for (const TraceRow& r : trace.rows)
    if (r.agent == agent) out.emplace_back(r.t, r.e_meas);
  if (out.empty())
    throw validation_error("measurement_error_series: no rows for agent " +
                           std::to_string(agent));
  return out;
}

}  // namespace etkf
