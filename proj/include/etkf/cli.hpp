#pragma once

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "etkf/errors.hpp"
#include "etkf/scenario.hpp"
#include "etkf/scenario_json.hpp"
#include "etkf/telemetry.hpp"
#include "etkf/trace.hpp"

namespace etkf::cli {

struct usage_error : std::runtime_error {
  explicit usage_error(const std::string& what) : std::runtime_error(what) {}
};

// Exit statuses shared by every subcommand.
enum ExitStatus : int {
  kOk = 0,
  kUsage = 2,
  kValidation = 3,
  kRuntime = 4,
  kIo = 5,
};

struct Overrides {
  std::optional<double> delay_ms;
  std::optional<double> delta;
  std::optional<double> period_s;
  std::optional<double> duration_s;
  std::optional<std::uint64_t> seed;
};

struct RunRequest {
  std::string scenario;
  std::string out_path;
  Overrides overrides;
  std::string mqtt_url;           // empty: telemetry disabled
  std::string mqtt_topic_prefix = "etkf";
};

struct InspectRequest {
  std::string scenario;
  Overrides overrides;
};

struct MetricsRequest {
  std::string trace_path;
  double band = 0.5;
};

using Request = std::variant<RunRequest, InspectRequest, MetricsRequest>;

/// Builtin scenario names or a file: path, plus command-line overrides,
/// resolved to a validated config.
inline ScenarioConfig resolve_config(const std::string& scenario, const Overrides& ov) {
  ScenarioConfig cfg;
  if (scenario == "paper-5agent") {
    cfg = paper_scenario(false);
  } else if (scenario == "paper-5agent-delayed") {
    cfg = paper_scenario(true);
  } else if (scenario.rfind("file:", 0) == 0) {
    cfg = load_config_file(scenario.substr(5));
  } else {
    throw usage_error("unknown scenario '" + scenario +
                      "'; expected paper-5agent, paper-5agent-delayed or file:PATH");
  }
  if (ov.delay_ms) cfg.delay_ms = *ov.delay_ms;
  if (ov.delta) cfg.delta_voltage = *ov.delta;
  if (ov.period_s) cfg.period_s = *ov.period_s;
  if (ov.duration_s) cfg.duration_s = *ov.duration_s;
  if (ov.seed) cfg.seed = *ov.seed;
  validate(cfg);
  return cfg;
}

/// Parse argv (program name excluded). Returns nullopt when help was
/// requested (already written to `out`); throws usage_error on bad flags.
inline std::optional<Request> parse_args(const std::vector<std::string>& args,
                                         std::ostream& out = std::cout) {
  CLI::App app{"Event-triggered distributed average state estimation simulator"};
  app.require_subcommand(1);

  RunRequest run;
  InspectRequest inspect;
  MetricsRequest metrics;

  auto add_overrides = [](CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--delay-ms", ov.delay_ms, "Override the bus delay in milliseconds");
    cmd->add_option("--delta", ov.delta, "Override the voltage send-on-delta threshold");
    cmd->add_option("--period", ov.period_s, "Override the estimation period in seconds");
    cmd->add_option("--duration", ov.duration_s, "Override the run duration in seconds");
    cmd->add_option("--seed", ov.seed, "Override the random seed");
  };

  CLI::App* crun = app.add_subcommand("run", "Run a scenario and write the trace CSV");
  crun->add_option("--scenario", run.scenario,
                   "paper-5agent | paper-5agent-delayed | file:PATH")
      ->required();
  crun->add_option("--out", run.out_path, "Trace CSV output path")->required();
  add_overrides(crun, run.overrides);
  crun->add_option("--mqtt-url", run.mqtt_url, "MQTT broker, e.g. mqtt://host:1883");
  crun->add_option("--mqtt-topic-prefix", run.mqtt_topic_prefix, "Telemetry topic prefix");

  CLI::App* cinspect =
      app.add_subcommand("inspect", "Print the resolved scenario as canonical JSON");
  cinspect->add_option("--scenario", inspect.scenario, "Scenario source")->required();
  add_overrides(cinspect, inspect.overrides);

  CLI::App* cmetrics = app.add_subcommand("metrics", "Recompute metrics from a trace CSV");
  cmetrics->add_option("--trace", metrics.trace_path, "Trace CSV path")->required();
  cmetrics->add_option("--band", metrics.band, "Settling band in volts")->required();

  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  std::string prog = "etkfsim";
  argv.push_back(prog.data());
  for (auto& a : storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw usage_error(e.what());
  }

  if (crun->parsed()) return Request{run};
  if (cinspect->parsed()) return Request{inspect};
  return Request{metrics};
}

namespace detail {

// Telemetry mirrors one JSON payload per agent per estimation period to
// <prefix>/agent/<id>/estimate. Broker trouble is reported once and the
// simulation carries on untouched.
class TelemetrySink {
 public:
  TelemetrySink(const std::string& url, std::string prefix, std::uint64_t seed,
                std::ostream& err)
      : prefix_(std::move(prefix)), err_(err) {
    if (url.empty()) return;
    try {
      publisher_.emplace(url, "etkfsim-" + std::to_string(seed));
    } catch (const io_error& e) {
      err_ << "warning: telemetry disabled: " << e.what() << "\n";
    }
  }

  void on_period(double t, int agent, double xhat, long events) {
    if (!publisher_) return;
    json payload;
    payload["ts_ms"] = static_cast<long long>(std::llround(t * 1000.0));
    payload["agent"] = agent;
    payload["xhat"] = xhat;
    payload["events"] = events;
    try {
      publisher_->publish(prefix_ + "/agent/" + std::to_string(agent) + "/estimate",
                          payload.dump());
    } catch (const io_error& e) {
      err_ << "warning: telemetry stopped: " << e.what() << "\n";
      publisher_.reset();
    }
  }

 private:
  std::string prefix_;
  std::ostream& err_;
  std::optional<mqtt::Publisher> publisher_;
};

}  // namespace detail

inline int execute(const RunRequest& req, std::ostream& out, std::ostream& err) {
  const ScenarioConfig cfg = resolve_config(req.scenario, req.overrides);
  detail::TelemetrySink sink(req.mqtt_url, req.mqtt_topic_prefix, cfg.seed, err);
  TraceLog log = run_scenario(cfg, [&sink](double t, int agent, double xhat, long events) {
    sink.on_period(t, agent, xhat, events);
  });
  log.config_hash = config_hash(cfg);
  write_csv_file(log, req.out_path);

  const Metrics m = compute_metrics(log, 0.5);
  json jm = to_json(m);
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(log.config_hash));
  jm["config_hash"] = std::string(hash_hex);
  jm["seed"] = log.seed;
  const std::string sidecar = req.out_path + ".metrics.json";
  std::ofstream ms(sidecar, std::ios::binary);
  if (!ms) throw io_error("cannot open metrics sidecar for writing: " + sidecar);
  ms << jm.dump(2) << "\n";
  if (!ms.good()) throw io_error("failed while writing metrics sidecar: " + sidecar);

  out << "wrote " << req.out_path << " (" << log.rows.size() << " rows) and " << sidecar
      << "\n";
  return kOk;
}

inline int execute(const InspectRequest& req, std::ostream& out, std::ostream&) {
  const ScenarioConfig cfg = resolve_config(req.scenario, req.overrides);
  out << canonical_json(cfg);
  return kOk;
}

inline int execute(const MetricsRequest& req, std::ostream& out, std::ostream&) {
  const TraceLog log = read_csv_file(req.trace_path);
  const Metrics m = compute_metrics(log, req.band);
  out << to_json(m).dump(2) << "\n";
  return kOk;
}

/// Full front end: parse, dispatch, map failures onto exit statuses.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  try {
    const auto request = parse_args(args, out);
    if (!request) return kOk;  // help
    return std::visit([&](const auto& req) { return execute(req, out, err); }, *request);
  } catch (const usage_error& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const validation_error& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const io_error& e) {
    err << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const numeric_error& e) {
    err << "numerical error: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

}  // namespace etkf::cli
