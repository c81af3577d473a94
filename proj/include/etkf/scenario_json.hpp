#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "etkf/errors.hpp"
#include "etkf/scenario.hpp"

namespace etkf {

using json = nlohmann::ordered_json;

inline json to_json(const ScenarioConfig& cfg) {
  json jedges = json::array();
  for (const Edge& e : cfg.graph.edges) jedges.push_back({e.from, e.to, e.weight});
  json j;
  j["graph"] = {{"n", cfg.graph.n}, {"edges", jedges}, {"undirected", cfg.graph.undirected}};
  j["initial_states"] = cfg.initial_states;
  j["delta_voltage"] = cfg.delta_voltage;
  j["delta_energy"] = cfg.delta_energy;
  j["Q"] = cfg.process_noise_q;
  j["R"] = cfg.measurement_noise_r;
  j["period_s"] = cfg.period_s;
  j["tick_s"] = cfg.tick_s;
  j["duration_s"] = cfg.duration_s;
  j["delay_ms"] = cfg.delay_ms;
  j["drop_probability"] = cfg.drop_probability;
  j["seed"] = cfg.seed;
  j["measurement_noise_std"] = cfg.measurement_noise_std;
  if (!cfg.link_delays.empty()) {
    json jlinks = json::array();
    for (const auto& l : cfg.link_delays) jlinks.push_back({l.from, l.to, l.delay_ms});
    j["link_delays"] = jlinks;
  }
  return j;
}

inline ScenarioConfig config_from_json(const json& j) {
  try {
    ScenarioConfig cfg;
    const json& jg = j.at("graph");
    cfg.graph.n = jg.at("n").get<int>();
    for (const json& je : jg.at("edges")) {
      if (!je.is_array() || je.size() != 3)
        throw validation_error("graph edge must be [from, to, weight]");
      cfg.graph.edges.push_back(
          {je[0].get<int>(), je[1].get<int>(), je[2].get<double>()});
    }
    cfg.graph.undirected = jg.value("undirected", false);
    cfg.initial_states = j.at("initial_states").get<std::vector<double>>();
    cfg.delta_voltage = j.value("delta_voltage", cfg.delta_voltage);
    cfg.delta_energy = j.value("delta_energy", cfg.delta_energy);
    cfg.process_noise_q = j.value("Q", cfg.process_noise_q);
    cfg.measurement_noise_r = j.value("R", cfg.measurement_noise_r);
    cfg.period_s = j.value("period_s", cfg.period_s);
    cfg.tick_s = j.value("tick_s", cfg.tick_s);
    cfg.duration_s = j.value("duration_s", cfg.duration_s);
    cfg.delay_ms = j.value("delay_ms", cfg.delay_ms);
    cfg.drop_probability = j.value("drop_probability", cfg.drop_probability);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.measurement_noise_std = j.value("measurement_noise_std", cfg.measurement_noise_std);
    if (j.contains("link_delays"))
      for (const json& jl : j.at("link_delays")) {
        if (!jl.is_array() || jl.size() != 3)
          throw validation_error("link delay must be [from, to, delay_ms]");
        cfg.link_delays.push_back(
            {jl[0].get<int>(), jl[1].get<int>(), jl[2].get<double>()});
      }
    return cfg;
  } catch (const json::exception& e) {
    throw validation_error(std::string("bad scenario JSON: ") + e.what());
  }
}

/// Canonical serialized form: fixed key order, two-space indent, newline at
/// the end. inspect output re-ingested through this round-trips bytewise.
inline std::string canonical_json(const ScenarioConfig& cfg) {
  return to_json(cfg).dump(2) + "\n";
}

inline ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open scenario file: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw validation_error("cannot parse scenario JSON " + path + ": " + e.what());
  }
  return config_from_json(j);
}

/// FNV-1a over the canonical form; stamped into trace metadata.
inline std::uint64_t config_hash(const ScenarioConfig& cfg) {
  const std::string s = canonical_json(cfg);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline json to_json(const Metrics& m) {
  json j;
  j["band"] = m.band;
  j["target"] = m.target;
  json settle = json::array();
  for (const auto& s : m.settling_time)
    settle.push_back(s ? json(*s) : json(nullptr));
  j["settling_time"] = settle;
  j["events_per_agent"] = m.events_per_agent;
  j["total_events"] = m.total_events;
  j["periodic_equivalent_messages"] = m.periodic_equivalent_messages;
  j["reduction_ratio"] = m.reduction_ratio;
  j["final_error"] = m.final_error;
  return j;
}

}  // namespace etkf
